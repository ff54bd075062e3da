#include "bhtwa/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "bhtwa/error.hpp"
#include "bhtwa/io.hpp"

namespace bhtwa {

std::string to_string(Corrections c) {
    switch (c) {
        case Corrections::none: return "none";
        case Corrections::integrated: return "integrated";
        case Corrections::langevin: return "langevin";
    }
    return "none";
}

Corrections corrections_from_string(const std::string& s) {
    if (s == "none") return Corrections::none;
    if (s == "integrated") return Corrections::integrated;
    if (s == "langevin") return Corrections::langevin;
    throw ConfigError("corrections must be one of none|integrated|langevin, got '" + s + "'");
}

std::vector<double> MomentSeries::occupations(std::size_t m) const {
    return {mean_I.begin() + static_cast<std::ptrdiff_t>(m * L),
            mean_I.begin() + static_cast<std::ptrdiff_t>((m + 1) * L)};
}

double jump_prefactor(const ChainParams& p) noexcept { return 3.0 * p.U * std::numbers::pi / (4.0 * p.hbar_eff); }

namespace {

// Raw sums over trajectories. Pairs are packed upper-triangular.
struct Accumulator {
    std::size_t G = 0, L = 0, P = 0;
    double count = 0.0;
    double max_dn = 0.0, max_de = 0.0;
    std::vector<double> sI, sI2, sII, sB, sH, sH2;

    Accumulator(std::size_t grid, std::size_t sites)
        : G(grid), L(sites), P(sites * (sites + 1) / 2), sI(G * L), sI2(G * L), sII(G * P), sB(G * L), sH(G * L),
          sH2(G * L) {}

    void merge(const Accumulator& o) {
        count += o.count;
        max_dn = std::max(max_dn, o.max_dn);
        max_de = std::max(max_de, o.max_de);
        auto add = [](std::vector<double>& a, const std::vector<double>& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        };
        add(sI, o.sI);
        add(sI2, o.sI2);
        add(sII, o.sII);
        add(sB, o.sB);
        add(sH, o.sH);
        add(sH2, o.sH2);
    }

    // jump_P / jump_Q: per-grid coefficients multiplying P_n and Q_n in b_n.
    void add(const TrajectoryRecord& rec, const ChainParams& params, std::span<const double> jump_P,
             std::span<const double> jump_Q) {
        count += 1.0;
        max_dn = std::max(max_dn, rec.max_number_drift);
        max_de = std::max(max_de, rec.max_energy_drift);
        std::vector<double> I(L);
        for (std::size_t m = 0; m < G; ++m) {
            const auto& s = rec.states[m];
            for (std::size_t n = 0; n < L; ++n) {
                I[n] = s.occupation(n);
                sI[m * L + n] += I[n];
                sI2[m * L + n] += I[n] * I[n];
            }
            double* pp = &sII[m * P];
            for (std::size_t a = 0; a < L; ++a)
                for (std::size_t b = a; b < L; ++b) *pp++ += I[a] * I[b];
            if (!jump_P.empty()) {
                const auto Ps = s.P();
                const auto Qs = s.Q();
                for (std::size_t n = 0; n < L; ++n) sB[m * L + n] += Ps[n] * jump_P[m] + Qs[n] * jump_Q[m];
            }
            const auto h = local_energy(s, params);
            for (std::size_t n = 0; n < L; ++n) {
                sH[m * L + n] += h[n];
                sH2[m * L + n] += h[n] * h[n];
            }
        }
    }
};

// Pairwise merge in block order: a binary counter of partial sums, so the
// reduction tree depends only on the block index sequence.
class PairwiseReducer {
public:
    void push(std::unique_ptr<Accumulator> a) {
        std::size_t level = 0;
        while (level < levels_.size() && levels_[level]) {
            levels_[level]->merge(*a);
            a = std::move(levels_[level]);
            ++level;
        }
        if (level == levels_.size()) levels_.emplace_back();
        levels_[level] = std::move(a);
    }

    std::unique_ptr<Accumulator> finish() {
        std::unique_ptr<Accumulator> out;
        for (auto& l : levels_) {
            if (!l) continue;
            if (!out) {
                out = std::move(l);
            } else {
                l->merge(*out);
                out = std::move(l);
            }
        }
        return out;
    }

private:
    std::vector<std::unique_ptr<Accumulator>> levels_;
};

}  // namespace

MomentSeries run_ensemble(const CoherentStateSpec& spec, const ChainParams& params, const IntegratorConfig& cfg,
                          const EnsembleOptions& opts) {
    params.validate();
    cfg.validate();
    spec.validate();
    if (spec.sites() != params.L) throw ConfigError("run_ensemble: spec dimension does not match L");
    if (opts.count < 2) throw ConfigError("run_ensemble: count must be >= 2");
    if (opts.block_size < 1) throw ConfigError("run_ensemble: block_size must be >= 1");

    const std::size_t L = params.L;
    const std::size_t G = cfg.grid_size();
    const std::size_t blocks = (opts.count + opts.block_size - 1) / opts.block_size;
    const std::size_t workers = std::max<std::size_t>(1, opts.workers);

    auto run_block = [&](std::size_t blk) {
        auto acc = std::make_unique<Accumulator>(G, L);
        const std::size_t lo = blk * opts.block_size;
        const std::size_t hi = std::min(opts.count, lo + opts.block_size);
        std::vector<double> jP(G), jQ(G);
        for (std::size_t i = lo; i < hi; ++i) {
            const PhaseState x0 = sample_one(spec, opts.seed, i);
            try {
                switch (opts.corrections) {
                    case Corrections::none: {
                        acc->add(evolve(x0, params, cfg), params, {}, {});
                        break;
                    }
                    case Corrections::integrated: {
                        const auto rec = evolve(x0, params, cfg);
                        for (std::size_t m = 0; m < G; ++m) {
                            double sp = 0.0, sq = 0.0;
                            for (std::size_t k = 0; k < L; ++k) {
                                sp += rec.cumint_P[m][k];
                                sq += rec.cumint_Q[m][k];
                            }
                            jP[m] = sq;  // P_n pairs with int Q_k
                            jQ[m] = sp;
                        }
                        acc->add(rec, params, jP, jQ);
                        break;
                    }
                    case Corrections::langevin: {
                        const auto lt = evolve_with_langevin_jumps(x0, params, cfg, opts.jump_stride, opts.seed, i,
                                                                   /*keep_events=*/false);
                        acc->add(lt.record, params, lt.ledger.branch_P, lt.ledger.branch_Q);
                        break;
                    }
                }
            } catch (const IntegrationError& e) {
                throw IntegrationError("trajectory " + std::to_string(i) + " (seed " + std::to_string(opts.seed) +
                                           "): " + e.what(),
                                       e.time());
            }
        }
        return acc;
    };

    PairwiseReducer reducer;
    for (std::size_t first = 0; first < blocks; first += workers) {
        const std::size_t n = std::min(workers, blocks - first);
        std::vector<std::unique_ptr<Accumulator>> wave(n);
        if (n == 1) {
            wave[0] = run_block(first);
        } else {
            std::vector<std::exception_ptr> errors(n);
            std::vector<std::thread> threads;
            threads.reserve(n);
            for (std::size_t w = 0; w < n; ++w)
                threads.emplace_back([&, w] {
                    try {
                        wave[w] = run_block(first + w);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            for (auto& t : threads) t.join();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
        }
        for (auto& a : wave) reducer.push(std::move(a));
    }
    const auto acc = reducer.finish();

    MomentSeries out;
    out.times = cfg.grid();
    out.L = L;
    out.ensemble_size = opts.count;
    out.corrections = opts.corrections;
    out.max_number_drift = acc->max_dn;
    out.max_energy_drift = acc->max_de;
    out.mean_I.resize(G * L);
    out.stderr_I.resize(G * L);
    out.mean_II.resize(G * L * L);
    out.jump_corr.assign(G * L * L, 0.0);
    out.mean_h.resize(G * L);
    out.var_h.resize(G * L);

    const double N = acc->count;
    const double jscale = opts.corrections == Corrections::integrated ? jump_prefactor(params)
                          : opts.corrections == Corrections::langevin ? 0.5
                                                                      : 0.0;
    for (std::size_t m = 0; m < G; ++m) {
        for (std::size_t n = 0; n < L; ++n) {
            const double mean = acc->sI[m * L + n] / N;
            const double var = std::max(0.0, acc->sI2[m * L + n] / N - mean * mean);
            out.mean_I[m * L + n] = mean;
            out.stderr_I[m * L + n] = std::sqrt(var * N / (N - 1.0) / N);
            const double hm = acc->sH[m * L + n] / N;
            out.mean_h[m * L + n] = hm;
            out.var_h[m * L + n] = std::max(0.0, acc->sH2[m * L + n] / N - hm * hm);
        }
        const double* pp = &acc->sII[m * acc->P];
        for (std::size_t a = 0; a < L; ++a)
            for (std::size_t b = a; b < L; ++b) {
                const double v = *pp++ / N;
                out.mean_II[(m * L + a) * L + b] = v;
                out.mean_II[(m * L + b) * L + a] = v;
            }
        if (jscale != 0.0) {
            for (std::size_t a = 0; a < L; ++a)
                for (std::size_t b = 0; b < L; ++b)
                    out.jump_corr[(m * L + a) * L + b] =
                        jscale * (acc->sB[m * L + a] + acc->sB[m * L + b]) / N;
        }
    }
    return out;
}

std::vector<double> dispersion(std::size_t a, std::size_t b, const MomentSeries& series) {
    if (a >= series.L || b >= series.L) throw ConfigError("dispersion: site index outside the chain");
    std::vector<double> d(series.size());
    for (std::size_t m = 0; m < d.size(); ++m) d[m] = series.D(m, a, b);
    return d;
}

TwoTimeMoment two_time_moment(std::span<const TrajectoryRecord> trajectories, const ChainParams& params,
                              std::size_t a, std::size_t b, std::size_t m1, std::size_t m2) {
    if (trajectories.empty()) throw ConfigError("two_time_moment: no trajectories");
    TwoTimeMoment out;
    for (const auto& rec : trajectories) {
        if (m1 >= rec.size() || m2 >= rec.size()) throw ConfigError("two_time_moment: grid index out of range");
        const auto& s1 = rec.states[m1];
        const auto& s2 = rec.states[m2];
        out.classical += s1.occupation(a) * s2.occupation(b);
        auto term = [&](const PhaseState& s, std::size_t site, std::size_t m) {
            double sp = 0.0, sq = 0.0;
            for (std::size_t k = 0; k < rec.cumint_P[m].size(); ++k) {
                sp += rec.cumint_P[m][k];
                sq += rec.cumint_Q[m][k];
            }
            return s.P()[site] * sq + s.Q()[site] * sp;
        };
        out.jump_corr += term(s1, a, m1) + term(s2, b, m2);
    }
    const double n = static_cast<double>(trajectories.size());
    out.classical /= n;
    out.jump_corr *= jump_prefactor(params) / n;
    return out;
}

void write_moments_csv(std::ostream& os, const MomentSeries& s) {
    os << "t,m,n,classical,jump_corr,D\n";
    for (std::size_t m = 0; m < s.size(); ++m)
        for (std::size_t a = 0; a < s.L; ++a)
            for (std::size_t b = a; b < s.L; ++b)
                os << io::num(s.times[m]) << ',' << a + 1 << ',' << b + 1 << ',' << io::num(s.D_classical(m, a, b))
                   << ',' << io::num(s.jc(m, a, b)) << ',' << io::num(s.D(m, a, b)) << '\n';
}

std::vector<MomentRow> read_moments_csv(std::istream& is) {
    std::vector<MomentRow> rows;
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,m,n,", 0) != 0) throw ConfigError("moments.csv: missing header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        MomentRow r{};
        char c1, c2, c3, c4, c5;
        if (!(ls >> r.t >> c1 >> r.m >> c2 >> r.n >> c3 >> r.classical >> c4 >> r.jump_corr >> c5 >> r.D))
            throw ConfigError("moments.csv: malformed row '" + line + "'");
        rows.push_back(r);
    }
    return rows;
}

}  // namespace bhtwa
