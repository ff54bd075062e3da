#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "bhtwa/error.hpp"
#include "bhtwa/integrate.hpp"
#include "helpers.hpp"

using namespace bhtwa;
using testutil::random_state;

namespace {

// U = 0: with z = Q + iP the flow is dz/dt = -i K z, K = J (adjacency) + mu.
struct LinearChainOracle {
    Eigen::MatrixXd V;
    Eigen::VectorXd lambda;
    Eigen::VectorXcd c0;  ///< eigenmode amplitudes of z(0)

    LinearChainOracle(const PhaseState& s0, const ChainParams& p) {
        const auto L = static_cast<Eigen::Index>(p.L);
        Eigen::MatrixXd K = Eigen::MatrixXd::Identity(L, L) * p.mu;
        for (Eigen::Index j = 0; j + 1 < L; ++j) K(j, j + 1) = K(j + 1, j) = p.J;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        V = es.eigenvectors();
        lambda = es.eigenvalues();
        Eigen::VectorXcd z(L);
        for (Eigen::Index j = 0; j < L; ++j) z(j) = {s0.Q()[j], s0.P()[j]};
        c0 = V.transpose() * z;
    }

    Eigen::VectorXcd z(double t) const {
        Eigen::VectorXcd c = c0;
        for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::exp(std::complex<double>(0, -lambda(k) * t));
        return V * c;
    }

    // int_0^t z dt'
    Eigen::VectorXcd integral(double t) const {
        Eigen::VectorXcd c = c0;
        for (Eigen::Index k = 0; k < c.size(); ++k) {
            const std::complex<double> a(0, -lambda(k));
            c(k) *= (std::exp(a * t) - 1.0) / a;
        }
        return V * c;
    }
};

ChainParams linear_chain(std::size_t L) {
    // mu is bare here; with U = 0 the Wigner shift is zero
    return ChainParams::from_ratios(L, 0.0, 0.5);
}

}  // namespace

TEST_CASE("decoupled rotor keeps its occupation and turns at U - mu_tilde") {
    ChainParams p;
    p.L = 1;
    p.J = 0.0;
    p.U = 3e-4;
    p.mu = 1e-4;
    std::vector<double> x{0.0, std::sqrt(2.0)}, ws(10);
    const double h = 0.1;
    const int n = 20000;
    for (int i = 0; i < n; ++i) rk4_step(x, h, [&](auto in, auto out) { drift(in, p, out); }, ws);
    const double t = h * n;
    const double I = 0.5 * (x[0] * x[0] + x[1] * x[1]);
    CHECK(I == doctest::Approx(1.0).epsilon(1e-12));
    // phi(0) = 0 (all amplitude in Q); phi' = U I - mu_tilde
    const double phi = (p.U - p.mu_tilde()) * t;
    CHECK(x[0] == doctest::Approx(std::sqrt(2.0) * std::sin(phi)).epsilon(1e-9));
    CHECK(x[1] == doctest::Approx(std::sqrt(2.0) * std::cos(phi)).epsilon(1e-9));
}

TEST_CASE("linear chain follows the eigenmode solution") {
    const auto p = linear_chain(8);
    const auto s0 = random_state(8, 4);
    IntegratorConfig cfg;
    cfg.t_final = 1000.0;
    cfg.output_stride = 500;
    const auto rec = evolve(s0, p, cfg);
    const LinearChainOracle oracle(s0, p);
    for (std::size_t m = 0; m < rec.size(); ++m) {
        const auto z = oracle.z(rec.times[m]);
        for (std::size_t j = 0; j < 8; ++j) {
            CHECK(std::abs(rec.states[m].Q()[j] - z(j).real()) < 1e-6);
            CHECK(std::abs(rec.states[m].P()[j] - z(j).imag()) < 1e-6);
        }
    }
}

TEST_CASE("running integrals converge at second order") {
    const auto p = linear_chain(6);
    const auto s0 = random_state(6, 12);
    const LinearChainOracle oracle(s0, p);
    const double T = 4000.0;
    auto error = [&](double h) {
        IntegratorConfig cfg;
        cfg.step = h;
        cfg.t_final = T;
        cfg.output_stride = static_cast<std::size_t>(std::llround(T / h));
        const auto rec = evolve(s0, p, cfg);
        const auto ref = oracle.integral(T);
        double e = 0.0;
        for (std::size_t k = 0; k < 6; ++k)
            e = std::max({e, std::abs(rec.cumint_Q.back()[k] - ref(k).real()),
                          std::abs(rec.cumint_P.back()[k] - ref(k).imag())});
        return e;
    };
    const double e1 = error(20.0), e2 = error(10.0);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
    // the h^2 law holds down to the default step
    CHECK(error(0.1) == doctest::Approx(e2 * 1e-4).epsilon(0.1));
}

TEST_CASE("cumulative integrals start at zero and are continuous") {
    const auto p = ChainParams::from_ratios(5, 1.0, 0.2);
    IntegratorConfig cfg;
    cfg.t_final = 20.0;
    cfg.output_stride = 1;
    const auto rec = evolve(random_state(5, 3), p, cfg);
    for (double v : rec.cumint_P.front()) CHECK(v == 0.0);
    // with one internal step per stored sample the increment is exactly the trapezoid
    for (std::size_t m = 0; m + 1 < rec.size(); ++m)
        for (std::size_t k = 0; k < 5; ++k) {
            const double inc = rec.cumint_P[m + 1][k] - rec.cumint_P[m][k];
            const double trap = 0.5 * (rec.states[m].P()[k] + rec.states[m + 1].P()[k]) * (rec.times[m + 1] - rec.times[m]);
            CHECK(inc == doctest::Approx(trap).epsilon(1e-12));
        }
}

TEST_CASE("RK4 convergence order") {
    const auto p = ChainParams::from_ratios(6, 1.0, 0.3);
    const auto s0 = random_state(6, 8);
    const double T = 8000.0;
    auto final_state = [&](double h) {
        IntegratorConfig cfg;
        cfg.step = h;
        cfg.t_final = T;
        cfg.output_stride = static_cast<std::size_t>(std::llround(T / h));
        cfg.conservation_tol = 1.0;
        return evolve(s0, p, cfg).states.back();
    };
    const auto a = final_state(400.0), b = final_state(200.0), c = final_state(100.0);
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
        d1 = std::max(d1, std::abs(a.flat()[i] - b.flat()[i]));
        d2 = std::max(d2, std::abs(b.flat()[i] - c.flat()[i]));
    }
    CHECK(std::log2(d1 / d2) >= 3.5);
}

TEST_CASE("conservation holds at the default step") {
    const auto p = ChainParams::from_ratios(10, 10.0, 0.05);
    IntegratorConfig cfg;
    cfg.step = 1.0;
    cfg.t_final = 2e4;
    const auto rec = evolve(random_state(10, 2), p, cfg);
    CHECK(rec.max_number_drift < 1e-6);
    CHECK(rec.max_energy_drift < 1e-6);
}

TEST_CASE("oversized step is reported with its time") {
    const auto p = ChainParams::from_ratios(6, 10.0, 0.0);
    IntegratorConfig cfg;
    cfg.step = 500.0;
    cfg.t_final = 1e5;
    cfg.output_stride = 1;
    try {
        evolve(random_state(6, 1, 1.0), p, cfg);
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.time() > 0.0);
        CHECK(e.time() <= 1e5);
    }
}

TEST_CASE("integrator configuration") {
    IntegratorConfig cfg;
    CHECK(cfg.grid_size() == 2001);
    CHECK(cfg.grid().back() == doctest::Approx(2e4));
    cfg.step = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.step = 0.3;
    cfg.t_final = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("evolve is deterministic") {
    const auto p = ChainParams::from_ratios(4, 2.0, 0.0);
    IntegratorConfig cfg;
    cfg.t_final = 100.0;
    const auto a = evolve(random_state(4, 6), p, cfg);
    const auto b = evolve(random_state(4, 6), p, cfg);
    CHECK(a.states == b.states);
    CHECK(a.cumint_Q == b.cumint_Q);
}

TEST_CASE("langevin jumps") {
    IntegratorConfig cfg;
    cfg.step = 1.0;
    cfg.t_final = 500.0;
    cfg.output_stride = 10;
    const auto s0 = random_state(5, 14);

    SUBCASE("no interaction, no weight") {
        const auto p = ChainParams::from_ratios(5, 0.0, 0.3);
        const auto lt = evolve_with_langevin_jumps(s0, p, cfg, 10, 1);
        CHECK(!lt.ledger.events.empty());
        for (const auto& e : lt.ledger.events) CHECK(e.total_weight() == 0.0);
        for (double b : lt.ledger.branch_P) CHECK(b == 0.0);
        for (double b : lt.ledger.branch_Q) CHECK(b == 0.0);
    }
    SUBCASE("base record equals the jump-free trajectory; replay is exact") {
        const auto p = ChainParams::from_ratios(5, 2.0, 0.3);
        const auto a = evolve_with_langevin_jumps(s0, p, cfg, 5, 9, 3);
        const auto b = evolve_with_langevin_jumps(s0, p, cfg, 5, 9, 3);
        CHECK(a.record.states == evolve(s0, p, cfg).states);
        CHECK(a.ledger.branch_P == b.ledger.branch_P);
        CHECK(a.ledger.events.size() == 100);
        CHECK(a.ledger.dtau == doctest::Approx(5.0));
        CHECK(a.ledger.branch_P.size() == a.record.size());
        const auto c = evolve_with_langevin_jumps(s0, p, cfg, 5, 9, 4);
        CHECK(a.ledger.branch_P != c.ledger.branch_P);
    }
    SUBCASE("weights follow the per-site formula") {
        const auto p = ChainParams::from_ratios(5, 2.0, 0.3);
        const auto lt = evolve_with_langevin_jumps(s0, p, cfg, 10, 2);
        const auto& e = lt.ledger.events.front();
        const double pre = p.U / (8 * p.hbar_eff) * 2 * std::numbers::pi;
        for (std::size_t k = 0; k < 5; ++k) {
            const double r2 = e.R[k] * e.R[k] + e.S[k] * e.S[k];
            CHECK(e.weight[k] == doctest::Approx(pre * (s0.Q()[k] * e.R[k] + s0.P()[k] * e.S[k]) * (r2 - 4.0)));
        }
    }
    SUBCASE("bad stride") {
        CHECK_THROWS_AS(evolve_with_langevin_jumps(s0, ChainParams::from_ratios(5, 1, 0), cfg, 0, 1), ConfigError);
    }
}

TEST_CASE("jump kernel by Monte Carlo") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    const std::size_t n = 10'000'000;
    double k4 = 0.0, m1 = 0.0, m1sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double R = g(rng), S = g(rng);
        const double b = R * R + S * S - 4.0;
        k4 += R * R * R * R * b;
        const double f = R * b;
        m1 += f;
        m1sq += f * f;
    }
    const double pi = std::numbers::pi;
    CHECK(2 * pi * k4 / n == doctest::Approx(12 * pi).epsilon(0.01));
    const double mean = m1 / n;
    const double se = std::sqrt((m1sq / n - mean * mean) / n);
    CHECK(std::abs(mean) < 4 * se);
}

TEST_CASE("jump kernel by quadrature") {
    const auto g = gauss_hermite(24);
    double w = 0.0;
    for (double x : g.weights) w += x;
    CHECK(w == doctest::Approx(std::sqrt(2 * std::numbers::pi)).epsilon(1e-13));
    CHECK(jump_kernel_integral(4, 0) == doctest::Approx(12 * std::numbers::pi).epsilon(1e-6));
    CHECK(jump_kernel_integral(0, 4) == doctest::Approx(12 * std::numbers::pi).epsilon(1e-6));
    for (auto [a, b] : {std::pair{1, 0}, {0, 1}, {2, 0}, {0, 2}, {1, 1}})
        CHECK(std::abs(jump_kernel_integral(a, b)) < 1e-10);
    // polar closed form: int r^5 (r^2 - 4) e^{-r^2/2} dr * int cos^4 = 16 * 3 pi / 4
    CHECK(jump_kernel_integral(4, 0) == doctest::Approx(16.0 * 3.0 * std::numbers::pi / 4.0).epsilon(1e-10));
}

TEST_CASE("trajectory dumps round trip") {
    const auto p = ChainParams::from_ratios(3, 1.0, 0.0);
    IntegratorConfig cfg;
    cfg.t_final = 50.0;
    cfg.output_stride = 50;
    const auto rec = evolve(random_state(3, 1), p, cfg);

    std::stringstream bin;
    write_trajectory_binary(bin, rec);
    const std::string bytes = bin.str();
    CHECK(bytes.substr(0, 4) == "BHTW");
    CHECK(bytes.size() == 16 + rec.size() * (1 + 6) * 8);
    const auto back = read_trajectory_binary(bin);
    CHECK(back.times == rec.times);
    CHECK(back.states == rec.states);

    std::stringstream csv;
    write_trajectory_csv(csv, rec);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t,P_1,P_2,P_3,Q_1,Q_2,Q_3");

    std::stringstream bad("XXXX0000");
    CHECK_THROWS_AS(read_trajectory_binary(bad), ConfigError);
    std::stringstream cut(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_trajectory_binary(cut), ConfigError);
}
