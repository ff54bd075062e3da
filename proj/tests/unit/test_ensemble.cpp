#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bhtwa/ensemble.hpp"
#include "bhtwa/error.hpp"

using namespace bhtwa;

namespace {

InitialConditionPreset single(std::size_t site0) {
    InitialConditionPreset p;
    p.filled_sites = {site0};
    return p;
}

IntegratorConfig short_run(double t_final = 200.0, std::size_t stride = 20) {
    IntegratorConfig c;
    c.step = 1.0;
    c.t_final = t_final;
    c.output_stride = stride;
    return c;
}

EnsembleOptions opts(std::size_t count, Corrections c, std::size_t workers = 1, std::uint64_t seed = 7) {
    EnsembleOptions o;
    o.count = count;
    o.corrections = c;
    o.workers = workers;
    o.seed = seed;
    return o;
}

}  // namespace

TEST_CASE("corrections names") {
    CHECK(to_string(Corrections::langevin) == "langevin");
    CHECK(corrections_from_string("integrated") == Corrections::integrated);
    CHECK_THROWS_AS(corrections_from_string("both"), ConfigError);
}

TEST_CASE("jump prefactor") {
    const auto p = ChainParams::from_ratios(4, 2.0, 0.0);
    CHECK(jump_prefactor(p) == doctest::Approx(3.0 * p.U * std::numbers::pi / 4.0));
}

TEST_CASE("initial occupations and dispersions match Gaussian moments") {
    const auto p = ChainParams::from_ratios(6, 1.0, 0.0);
    const auto spec = build_spec(single(2), p);
    const std::size_t n = 200000;
    const auto ms = run_ensemble(spec, p, short_run(1.0, 1), opts(n, Corrections::integrated));
    // <I> = (pbar^2 + qbar^2)/2 + sigma^2 ; Var I = sigma^4 + sigma^2 (pbar^2 + qbar^2)
    const double s2 = 0.5;
    for (std::size_t j = 0; j < 6; ++j) {
        const double c2 = j == 2 ? 2.0 : 0.0;
        const double var = s2 * s2 + s2 * c2;
        const double mean = 0.5 * c2 + s2;
        CHECK(std::abs(ms.I(0, j) - mean) < 4 * std::sqrt(var / n));
        CHECK(ms.stderr_I[j] == doctest::Approx(std::sqrt(var / n)).epsilon(0.05));
        // fourth moment of I is finite; 5% covers the sampling error of the variance at this size
        CHECK(ms.D(0, j, j) == doctest::Approx(var).epsilon(0.05));
        CHECK(ms.jc(0, j, j) == 0.0);
    }
    CHECK(ms.I(0, 2) == doctest::Approx(1.5).epsilon(0.01));
    CHECK(ms.I(0, 0) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("degenerate ensemble has no dispersion") {
    const auto p = ChainParams::from_ratios(5, 1.0, 0.1);
    auto spec = build_spec(single(1), p);
    spec.sigma_P = spec.sigma_Q = 1e-13;
    const auto ms = run_ensemble(spec, p, short_run(), opts(16, Corrections::none));
    for (std::size_t m = 0; m < ms.size(); ++m)
        for (std::size_t a = 0; a < 5; ++a)
            for (std::size_t b = 0; b < 5; ++b) {
                // <II> - <I><I> cancels to within a few ulps of I^2
                const double scale = std::abs(ms.II(m, a, b)) + 1e-300;
                CHECK(std::abs(ms.D(m, a, b)) <= 8 * std::numeric_limits<double>::epsilon() * scale + 1e-24);
            }
}

TEST_CASE("without interaction the corrections vanish") {
    const auto p = ChainParams::from_ratios(5, 0.0, 0.1);
    const auto spec = build_spec(single(1), p);
    const auto a = run_ensemble(spec, p, short_run(), opts(64, Corrections::none));
    const auto b = run_ensemble(spec, p, short_run(), opts(64, Corrections::integrated));
    const auto c = run_ensemble(spec, p, short_run(), opts(64, Corrections::langevin));
    CHECK(a.mean_II == b.mean_II);
    for (double v : b.jump_corr) CHECK(v == 0.0);
    for (double v : c.jump_corr) CHECK(v == 0.0);
}

TEST_CASE("one-point functions do not depend on the correction mode") {
    const auto p = ChainParams::from_ratios(5, 2.0, 0.1);
    const auto spec = build_spec(single(1), p);
    const auto a = run_ensemble(spec, p, short_run(), opts(64, Corrections::none));
    const auto b = run_ensemble(spec, p, short_run(), opts(64, Corrections::integrated));
    const auto c = run_ensemble(spec, p, short_run(), opts(64, Corrections::langevin));
    CHECK(a.mean_I == b.mean_I);
    CHECK(a.mean_I == c.mean_I);
    CHECK(a.mean_II == b.mean_II);
}

TEST_CASE("results do not depend on the number of workers") {
    const auto p = ChainParams::from_ratios(6, 1.0, 0.05);
    const auto spec = build_spec(single(2), p);
    for (auto mode : {Corrections::integrated, Corrections::langevin}) {
        const auto a = run_ensemble(spec, p, short_run(), opts(300, mode, 1));
        const auto b = run_ensemble(spec, p, short_run(), opts(300, mode, 3));
        const auto c = run_ensemble(spec, p, short_run(), opts(300, mode, 7));
        for (std::size_t i = 0; i < a.mean_II.size(); ++i) {
            CHECK(std::abs(a.mean_II[i] - b.mean_II[i]) <= 1e-12 * std::abs(a.mean_II[i]));
            CHECK(std::abs(a.jump_corr[i] - c.jump_corr[i]) <= 1e-12 * std::abs(a.jump_corr[i]) + 1e-300);
        }
    }
}

TEST_CASE("integrated correction equals the trajectory formula") {
    const auto p = ChainParams::from_ratios(4, 3.0, 0.2);
    const auto spec = build_spec(single(1), p);
    const auto cfg = short_run(300.0, 30);
    const std::size_t n = 12;
    const auto ms = run_ensemble(spec, p, cfg, opts(n, Corrections::integrated));
    std::vector<TrajectoryRecord> recs;
    for (std::size_t i = 0; i < n; ++i) recs.push_back(evolve(sample_one(spec, 7, i), p, cfg));
    const double pre = 3.0 * p.U * std::numbers::pi / (4.0 * p.hbar_eff);
    const std::size_t m = ms.size() - 1;
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) {
            double jc = 0.0;
            for (const auto& r : recs) {
                const auto& s = r.states[m];
                double sp = 0.0, sq = 0.0;
                for (std::size_t k = 0; k < 4; ++k) sp += r.cumint_P[m][k], sq += r.cumint_Q[m][k];
                jc += (s.P()[a] + s.P()[b]) * sq + (s.Q()[a] + s.Q()[b]) * sp;
            }
            jc *= pre / n;
            CHECK(ms.jc(m, a, b) == doctest::Approx(jc).epsilon(1e-12));
            const auto tt = two_time_moment(recs, p, a, b, m, m);
            CHECK(tt.jump_corr == doctest::Approx(jc).epsilon(1e-12));
            CHECK(tt.classical == doctest::Approx(ms.II(m, a, b)).epsilon(1e-12));
        }
}

TEST_CASE("langevin estimator is unbiased for the integrated correction") {
    const auto p = ChainParams::from_ratios(3, 2.0, 0.0);
    const auto spec = build_spec(single(1), p);
    const auto s0 = sample_one(spec, 1, 0);
    const auto cfg = short_run(200.0, 200);
    const auto rec = evolve(s0, p, cfg);
    const std::size_t m = rec.size() - 1;
    const auto& s = rec.states[m];
    double sp = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < 3; ++k) sp += rec.cumint_P[m][k], sq += rec.cumint_Q[m][k];
    const double pre = jump_prefactor(p);
    const std::size_t a = 0, b = 1;
    const double integrated = pre * ((s.P()[a] + s.P()[b]) * sq + (s.Q()[a] + s.Q()[b]) * sp);

    const std::size_t draws = 20000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        const auto lt = evolve_with_langevin_jumps(s0, p, cfg, 1, 99, i, false);
        const double est = 0.5 * ((s.P()[a] + s.P()[b]) * lt.ledger.branch_P[m] +
                                  (s.Q()[a] + s.Q()[b]) * lt.ledger.branch_Q[m]);
        sum += est;
        sum2 += est * est;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum2 / draws - mean * mean) / draws);
    // left Riemann sum vs trapezoid differs by O(step / t), far below the noise
    CHECK(std::abs(mean - integrated) < 4 * se);
}

TEST_CASE("total occupation is constant") {
    const auto p = ChainParams::from_ratios(6, 1.0, 0.05);
    const auto spec = build_spec(single(2), p);
    const auto ms = run_ensemble(spec, p, short_run(2000.0, 100), opts(64, Corrections::integrated));
    auto total = [&](std::size_t m) {
        double s = 0.0;
        for (double x : ms.occupations(m)) s += x;
        return s;
    };
    for (std::size_t m = 1; m < ms.size(); ++m) CHECK(total(m) == doctest::Approx(total(0)).epsilon(1e-9));
    CHECK(ms.max_number_drift < 1e-9);
}

TEST_CASE("dispersion helper and validation") {
    const auto p = ChainParams::from_ratios(4, 1.0, 0.0);
    const auto spec = build_spec(single(1), p);
    const auto ms = run_ensemble(spec, p, short_run(), opts(8, Corrections::integrated));
    const auto d = dispersion(1, 3, ms);
    for (std::size_t m = 0; m < ms.size(); ++m) CHECK(d[m] == ms.D(m, 1, 3));
    CHECK_THROWS_AS(dispersion(4, 0, ms), ConfigError);
    CHECK_THROWS_AS(run_ensemble(spec, p, short_run(), opts(1, Corrections::none)), ConfigError);
}

TEST_CASE("moments csv round trip") {
    const auto p = ChainParams::from_ratios(3, 1.0, 0.0);
    const auto ms = run_ensemble(build_spec(single(0), p), p, short_run(40.0, 20), opts(8, Corrections::integrated));
    std::stringstream ss;
    write_moments_csv(ss, ms);
    const auto rows = read_moments_csv(ss);
    CHECK(rows.size() == ms.size() * 6);
    for (const auto& r : rows) {
        const std::size_t m = static_cast<std::size_t>(std::llround(r.t / 20.0));
        CHECK(r.D == ms.D(m, r.m - 1, r.n - 1));
        CHECK(r.jump_corr == ms.jc(m, r.m - 1, r.n - 1));
        CHECK(r.m <= r.n);
    }
    std::stringstream bad("x,y\n");
    CHECK_THROWS_AS(read_moments_csv(bad), ConfigError);
}
