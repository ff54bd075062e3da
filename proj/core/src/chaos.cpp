#include "bhtwa/chaos.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <numbers>
#include <ostream>

#include "bhtwa/error.hpp"
#include "bhtwa/io.hpp"

namespace bhtwa {

namespace {

// Modified Gram-Schmidt on the columns of V (n x n, column-major); adds the
// log norms to `logs`. Returns false on rank loss.
bool orthonormalize(std::span<double> V, std::size_t n, std::span<double> logs) {
    for (std::size_t c = 0; c < n; ++c) {
        double* vc = V.data() + c * n;
        for (std::size_t p = 0; p < c; ++p) {
            const double* vp = V.data() + p * n;
            double d = 0.0;
            for (std::size_t i = 0; i < n; ++i) d += vp[i] * vc[i];
            for (std::size_t i = 0; i < n; ++i) vc[i] -= d * vp[i];
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += vc[i] * vc[i];
        nrm = std::sqrt(nrm);
        if (!(nrm > 1e-300) || !std::isfinite(nrm)) return false;
        for (std::size_t i = 0; i < n; ++i) vc[i] /= nrm;
        logs[c] += std::log(nrm);
    }
    return true;
}

}  // namespace

FtleResult ftle(const PhaseState& initial, const ChainParams& params, const IntegratorConfig& cfg,
                std::size_t renorm_stride) {
    if (renorm_stride < 1) throw ConfigError("ftle: renorm_stride must be >= 1");
    if (params.L < 2) throw ConfigError("ftle: L must be >= 2");
    if (!(params.J >= 0.0)) throw ConfigError("ftle: J must be >= 0");
    if (initial.sites() != params.L) throw ConfigError("ftle: initial state dimension does not match L");
    cfg.validate();

    const std::size_t n = 2 * params.L;
    const std::size_t N = n + n * n;
    std::vector<double> y(N, 0.0);
    std::copy(initial.flat().begin(), initial.flat().end(), y.begin());
    for (std::size_t c = 0; c < n; ++c) y[n + c * n + c] = 1.0;
    std::vector<double> ws(5 * N);
    std::vector<double> logs(n, 0.0);

    auto f = [&](std::span<const double> z, std::span<double> dz) {
        const auto x = z.first(n);
        drift(x, params, dz.first(n), cfg.ordering);
        for (std::size_t c = 0; c < n; ++c)
            drift_jvp(x, z.subspan(n + c * n, n), params, dz.subspan(n + c * n, n), cfg.ordering);
    };

    const std::size_t steps = cfg.total_steps();
    for (std::size_t s = 1; s <= steps; ++s) {
        rk4_step(std::span<double>(y), cfg.step, f, ws);
        if (s % renorm_stride == 0 || s == steps) {
            if (!orthonormalize(std::span<double>(y).subspan(n), n, logs))
                throw NumericError("ftle: tangent frame lost rank", static_cast<double>(s) * cfg.step);
        }
    }

    FtleResult out;
    out.t_final = static_cast<double>(steps) * cfg.step;
    out.bundle.base = PhaseState(params.L);
    std::copy(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n), out.bundle.base.flat().begin());
    out.bundle.frame.resize(n);
    for (std::size_t c = 0; c < n; ++c)
        out.bundle.frame[c].assign(y.begin() + static_cast<std::ptrdiff_t>(n + c * n),
                                   y.begin() + static_cast<std::ptrdiff_t>(n + (c + 1) * n));
    out.bundle.log_stretches = logs;
    out.exponents.resize(n);
    for (std::size_t c = 0; c < n; ++c) out.exponents[c] = logs[c] / out.t_final;
    std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
    for (double e : out.exponents)
        if (e > 0.0) out.positive_sum += e;
    return out;
}

FtleEnsemble ftle_ensemble(const CoherentStateSpec& spec, const ChainParams& params, const IntegratorConfig& cfg,
                           std::size_t count, std::uint64_t seed, std::size_t renorm_stride) {
    if (count < 1) throw ConfigError("ftle_ensemble: count must be >= 1");
    FtleEnsemble out;
    for (std::size_t i = 0; i < count; ++i)
        out.positive_sums.push_back(ftle(sample_one(spec, seed, i), params, cfg, renorm_stride).positive_sum);
    double s = 0.0, s2 = 0.0;
    for (double v : out.positive_sums) {
        s += v;
        s2 += v * v;
    }
    const double c = static_cast<double>(count);
    out.mean_positive_sum = s / c;
    if (count > 1) out.stderr_positive_sum = std::sqrt(std::max(0.0, (s2 - s * s / c) / (c - 1.0)) / c);
    return out;
}

namespace {

// The FFTW planner is not reentrant.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

Spectrum power_spectrum(const ScalarSeries& signal, Window window) {
    const std::size_t N = signal.size();
    if (N < 256) throw InsufficientDataError("power_spectrum: need at least 256 samples, got " + std::to_string(N));
    if (signal.values.size() != N) throw ConfigError("power_spectrum: times and values differ in length");
    const double dt = (signal.times.back() - signal.times.front()) / static_cast<double>(N - 1);
    if (!(dt > 0.0)) throw ConfigError("power_spectrum: time grid must be increasing");
    for (std::size_t i = 1; i < N; ++i)
        if (std::abs(signal.times[i] - signal.times[i - 1] - dt) > 1e-9 * dt)
            throw ConfigError("power_spectrum: time grid is not uniform");

    double mean = 0.0;
    for (double v : signal.values) mean += v;
    mean /= static_cast<double>(N);

    std::vector<double> w(N, 1.0);
    if (window == Window::hann)
        for (std::size_t i = 0; i < N; ++i)
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(N - 1));
    double w2 = 0.0;
    for (double v : w) w2 += v * v;

    double* in = fftw_alloc_real(N);
    fftw_complex* out = fftw_alloc_complex(N / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(N), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < N; ++i) in[i] = w[i] * (signal.values[i] - mean);
    fftw_execute(plan);

    Spectrum s;
    const std::size_t K = N / 2;
    s.omega.resize(K);
    s.power.resize(K);
    for (std::size_t k = 1; k <= K; ++k) {
        const double re = out[k][0];
        const double im = out[k][1];
        const double one_sided = (k == K && N % 2 == 0) ? 1.0 : 2.0;
        s.omega[k - 1] = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(N) * dt);
        s.power[k - 1] = one_sided * dt * (re * re + im * im) / w2;
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return s;
}

ScalingFit spectral_slope(const Spectrum& s) {
    const std::size_t K = s.omega.size();
    const std::size_t lo = K / 20;
    const std::size_t hi = K / 10;
    if (K < lo + hi + 8) throw InsufficientDataError("spectral_slope: too few bins");
    const double wa = s.omega[lo];
    const double wb = s.omega[K - hi - 1];
    const double mid = std::sqrt(wa * wb);
    const double r = std::sqrt(10.0);
    auto f = fit_loglog(s.omega, s.power, std::max(wa, mid / r), std::min(wb, mid * r));
    f.series_id = "spectrum";
    return f;
}

ScalarSeries sff_from_energies(std::span<const double> energies, std::span<const double> times) {
    if (energies.size() < 2) throw ConfigError("sff: need at least two energies");
    ScalarSeries out;
    out.times.assign(times.begin(), times.end());
    out.label = "sff";
    out.values.resize(times.size());
    const double n = static_cast<double>(energies.size());
    for (std::size_t m = 0; m < times.size(); ++m) {
        double c = 0.0, s = 0.0;
        for (double E : energies) {
            c += std::cos(times[m] * E);
            s += std::sin(times[m] * E);
        }
        out.values[m] = (c * c + s * s) / (n * n);
    }
    return out;
}

ScalarSeries sff(const CoherentStateSpec& spec, const ChainParams& params, std::size_t count, std::uint64_t seed,
                 std::span<const double> times) {
    if (count < 2) throw ConfigError("sff: count must be >= 2");
    params.validate();
    spec.validate();
    std::vector<double> E(count);
    for (std::size_t i = 0; i < count; ++i) E[i] = hamiltonian(sample_one(spec, seed, i), params, Ordering::wigner);
    return sff_from_energies(E, times);
}

Eigen::MatrixXcd alpha_matrix(const PhaseState& s, const ChainParams& params) {
    const std::size_t L = params.L;
    if (s.sites() != L) throw ConfigError("alpha_matrix: state dimension does not match L");
    const auto np = to_number_phase(s);
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
    for (std::size_t j = 0; j + 1 < L; ++j) {
        const std::complex<double> v(0.0, -params.J * std::sin(np.phi[j] - np.phi[j + 1]));
        const auto a = static_cast<Eigen::Index>(j);
        A(a, a + 1) = v;
        A(a + 1, a) = std::conj(v);
    }
    return A;
}

AlphaSeries alpha_transform(const TrajectoryRecord& trajectory, const ChainParams& params) {
    const std::size_t L = params.L;
    const auto Li = static_cast<Eigen::Index>(L);
    const std::size_t G = trajectory.size();
    AlphaSeries out;
    out.times = trajectory.times;
    out.L = L;
    out.alpha_sq.resize(G * L);
    out.eigenvalues.resize(G * L);
    out.min_overlap.assign(G, 1.0);
    out.mixing_entropy_alpha.times = trajectory.times;
    out.mixing_entropy_alpha.label = "mixing_entropy_alpha";
    out.mixing_entropy_alpha.values.resize(G);

    Eigen::MatrixXcd Vprev;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    std::vector<double> a2(L);
    for (std::size_t m = 0; m < G; ++m) {
        const auto& s = trajectory.states[m];
        es.compute(alpha_matrix(s, params));
        if (es.info() != Eigen::Success) throw NumericError("alpha_transform: eigensolver failed", trajectory.times[m]);
        Eigen::MatrixXcd V = es.eigenvectors();
        Eigen::VectorXd lam = es.eigenvalues();

        if (m > 0) {
            const Eigen::MatrixXd O = (Vprev.adjoint() * V).cwiseAbs();
            std::vector<Eigen::Index> perm(L, -1);
            std::vector<bool> used_row(L, false), used_col(L, false);
            double worst = 1.0;
            for (std::size_t k = 0; k < L; ++k) {
                double best = -1.0;
                Eigen::Index bi = 0, bj = 0;
                for (Eigen::Index i = 0; i < Li; ++i) {
                    if (used_row[static_cast<std::size_t>(i)]) continue;
                    for (Eigen::Index j = 0; j < Li; ++j)
                        if (!used_col[static_cast<std::size_t>(j)] && O(i, j) > best) {
                            best = O(i, j);
                            bi = i;
                            bj = j;
                        }
                }
                used_row[static_cast<std::size_t>(bi)] = true;
                used_col[static_cast<std::size_t>(bj)] = true;
                perm[static_cast<std::size_t>(bi)] = bj;
                worst = std::min(worst, best);
            }
            Eigen::MatrixXcd Vt(Li, Li);
            Eigen::VectorXd lt(Li);
            for (Eigen::Index i = 0; i < Li; ++i) {
                Vt.col(i) = V.col(perm[static_cast<std::size_t>(i)]);
                lt(i) = lam(perm[static_cast<std::size_t>(i)]);
            }
            V = Vt;
            lam = lt;
            out.min_overlap[m] = worst;
            if (worst < 0.9) out.crossings.push_back(trajectory.times[m]);
        }

        const double N = s.number();
        if (!(N > 0.0)) throw NumericError("alpha_transform: zero total number", trajectory.times[m]);
        Eigen::VectorXcd a(Li);
        for (std::size_t j = 0; j < L; ++j) a(static_cast<Eigen::Index>(j)) = std::sqrt(s.occupation(j) / N);
        const Eigen::VectorXcd alpha = V.adjoint() * a;
        for (std::size_t n = 0; n < L; ++n) {
            a2[n] = std::norm(alpha(static_cast<Eigen::Index>(n)));
            out.alpha_sq[m * L + n] = a2[n];
            out.eigenvalues[m * L + n] = lam(static_cast<Eigen::Index>(n));
        }
        out.mixing_entropy_alpha.values[m] = mixing_entropy(a2);
        Vprev = std::move(V);
    }
    return out;
}

AlphaPairing alpha_pairing(const AlphaSeries& a) {
    AlphaPairing r;
    const std::size_t L = a.L;
    std::vector<std::size_t> idx(L);
    for (std::size_t m = 0; m < a.times.size(); ++m) {
        for (std::size_t n = 0; n < L; ++n) idx[n] = n;
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return a.ev(m, x) < a.ev(m, y); });
        double norm = 0.0;
        for (std::size_t k = 0; k < L; ++k) {
            const std::size_t p = idx[k], q = idx[L - 1 - k];
            r.eigenvalue_residual = std::max(r.eigenvalue_residual, std::abs(a.ev(m, p) + a.ev(m, q)));
            if (p != q) r.alpha_residual = std::max(r.alpha_residual, std::abs(a.a2(m, p) - a.a2(m, q)));
            norm += a.a2(m, k);
        }
        r.norm_residual = std::max(r.norm_residual, std::abs(norm - 1.0));
    }
    return r;
}

SiteSeries alpha_dispersion(std::span<const AlphaSeries> runs) {
    if (runs.size() < 2) throw ConfigError("alpha_dispersion: need at least two runs");
    const std::size_t L = runs.front().L;
    const std::size_t G = runs.front().times.size();
    std::vector<double> s(G * L, 0.0), s2(G * L, 0.0);
    for (const auto& r : runs) {
        if (r.L != L || r.times.size() != G) throw ConfigError("alpha_dispersion: runs on different grids");
        for (std::size_t i = 0; i < G * L; ++i) {
            s[i] += r.alpha_sq[i];
            s2[i] += r.alpha_sq[i] * r.alpha_sq[i];
        }
    }
    SiteSeries out;
    out.times = runs.front().times;
    out.L = L;
    out.label = "alpha_dispersion";
    out.values.resize(G * L);
    const double c = static_cast<double>(runs.size());
    for (std::size_t i = 0; i < G * L; ++i) out.values[i] = std::max(0.0, s2[i] / c - (s[i] / c) * (s[i] / c));
    return out;
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
    os << "omega,power\n";
    for (std::size_t k = 0; k < s.omega.size(); ++k) os << io::num(s.omega[k]) << ',' << io::num(s.power[k]) << '\n';
}

void write_alpha_csv(std::ostream& os, const AlphaSeries& a) {
    os << "t,n,alpha_sq,eigenvalue\n";
    for (std::size_t m = 0; m < a.times.size(); ++m)
        for (std::size_t n = 0; n < a.L; ++n)
            os << io::num(a.times[m]) << ',' << n + 1 << ',' << io::num(a.a2(m, n)) << ',' << io::num(a.ev(m, n))
               << '\n';
}

}  // namespace bhtwa
