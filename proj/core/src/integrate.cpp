#include "bhtwa/integrate.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "bhtwa/error.hpp"
#include "bhtwa/io.hpp"
#include "bhtwa/wigner.hpp"

namespace bhtwa {

void IntegratorConfig::validate() const {
    if (!(step > 0.0)) throw ConfigError("integrator: step must be > 0");
    if (!(t_final >= step)) throw ConfigError("integrator: t_final must be >= step");
    if (output_stride < 1) throw ConfigError("integrator: output_stride must be >= 1");
    if (!(conservation_tol > 0.0)) throw ConfigError("integrator: conservation_tol must be > 0");
    const double n = t_final / step;
    if (std::abs(n - std::round(n)) > 1e-9 * n)
        throw ConfigError("integrator: t_final must be an integer multiple of step");
}

std::size_t IntegratorConfig::total_steps() const { return static_cast<std::size_t>(std::llround(t_final / step)); }

std::vector<double> IntegratorConfig::grid() const {
    std::vector<double> t(grid_size());
    for (std::size_t m = 0; m < t.size(); ++m) t[m] = static_cast<double>(m * output_stride) * step;
    return t;
}

namespace {

// Sum of magnitudes of the individual Hamiltonian terms; the denominator of
// the relative energy drift so that states with E ~ 0 are still checked.
double energy_scale(std::span<const double> x, const ChainParams& p, Ordering o) {
    const std::size_t L = p.L;
    const double m = std::abs(p.chemical_potential(o));
    double s = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
        const double r = x[j] * x[j] + x[L + j] * x[L + j];
        s += 0.125 * p.U * r * r + 0.5 * m * r;
        if (j + 1 < L) s += p.J * std::abs(x[j] * x[j + 1] + x[L + j] * x[L + j + 1]);
    }
    return s > 0.0 ? s : 1.0;
}

double flat_number(std::span<const double> x) {
    double n = 0.0;
    for (double v : x) n += v * v;
    return 0.5 * n;
}

PhaseState to_state(std::span<const double> x, std::size_t L) {
    PhaseState s(L);
    std::copy(x.begin(), x.end(), s.flat().begin());
    return s;
}

// Shared driver: RK4 + trapezoidal running integrals + conservation checks.
// `on_step(step_index, x)` fires before each internal step (jump hook).
template <class OnStep>
TrajectoryRecord integrate(const PhaseState& initial, const ChainParams& params, const IntegratorConfig& cfg,
                           OnStep&& on_step) {
    params.validate();
    cfg.validate();
    if (initial.sites() != params.L) throw ConfigError("evolve: initial state dimension does not match L");

    const std::size_t L = params.L;
    const std::size_t n = 2 * L;
    const std::size_t steps = cfg.total_steps();
    const double h = cfg.step;

    std::vector<double> x(initial.flat().begin(), initial.flat().end());
    std::vector<double> prev(n);
    std::vector<double> cum(n, 0.0);
    std::vector<double> ws(5 * n);

    const PhaseState x0 = initial;
    const double n0 = flat_number(x);
    const double e0 = hamiltonian(x0, params, cfg.ordering);
    const double escale = energy_scale(x, params, cfg.ordering);

    TrajectoryRecord rec;
    const std::size_t G = cfg.grid_size();
    rec.times.reserve(G);
    rec.states.reserve(G);
    rec.cumint_P.reserve(G);
    rec.cumint_Q.reserve(G);

    auto store = [&](double t) {
        rec.times.push_back(t);
        rec.states.push_back(to_state(x, L));
        rec.cumint_P.emplace_back(cum.begin(), cum.begin() + static_cast<std::ptrdiff_t>(L));
        rec.cumint_Q.emplace_back(cum.begin() + static_cast<std::ptrdiff_t>(L), cum.end());
        const double dn = n0 > 0.0 ? std::abs(flat_number(x) - n0) / n0 : std::abs(flat_number(x));
        const double de = std::abs(hamiltonian(rec.states.back(), params, cfg.ordering) - e0) / escale;
        rec.max_number_drift = std::max(rec.max_number_drift, dn);
        rec.max_energy_drift = std::max(rec.max_energy_drift, de);
        if (!(dn <= cfg.conservation_tol))
            throw IntegrationError("number drift " + io::num(dn) + " exceeds tolerance; reduce the step", t);
        if (!(de <= cfg.conservation_tol))
            throw IntegrationError("energy drift " + io::num(de) + " exceeds tolerance; reduce the step", t);
    };

    auto f = [&](std::span<const double> y, std::span<double> dy) { drift(y, params, dy, cfg.ordering); };

    store(0.0);
    for (std::size_t s = 0; s < steps; ++s) {
        on_step(s, std::span<const double>(x));
        prev = x;
        rk4_step(x, h, f, ws);
        for (std::size_t i = 0; i < n; ++i) cum[i] += 0.5 * h * (prev[i] + x[i]);
        if ((s + 1) % cfg.output_stride == 0) store(static_cast<double>(s + 1) * h);
    }
    return rec;
}

}  // namespace

TrajectoryRecord evolve(const PhaseState& initial, const ChainParams& params, const IntegratorConfig& cfg) {
    return integrate(initial, params, cfg, [](std::size_t, std::span<const double>) {});
}

double JumpEvent::total_weight() const noexcept {
    double w = 0.0;
    for (double v : weight) w += v;
    return w;
}

LangevinTrajectory evolve_with_langevin_jumps(const PhaseState& initial, const ChainParams& params,
                                              const IntegratorConfig& cfg, std::size_t jump_stride,
                                              std::uint64_t seed, std::uint64_t trajectory_index, bool keep_events) {
    if (jump_stride < 1) throw ConfigError("langevin: jump_stride must be >= 1");
    const std::size_t L = params.L;
    const double dtau = static_cast<double>(jump_stride) * cfg.step;
    const double prefactor = params.U / (8.0 * params.hbar_eff) * 2.0 * std::numbers::pi;

    auto rng = make_stream(seed, trajectory_index, stream_purpose::jumps);
    std::normal_distribution<double> normal(0.0, 1.0);

    LangevinTrajectory out;
    out.ledger.dtau = dtau;
    double acc_P = 0.0;
    double acc_Q = 0.0;
    // branch sums valid for grid points after the step that follows each jump
    std::vector<std::pair<double, double>> per_step_acc;

    auto on_step = [&](std::size_t s, std::span<const double> x) {
        if (s % jump_stride == 0) {
            JumpEvent ev;
            ev.tau = static_cast<double>(s) * cfg.step;
            ev.R.resize(L);
            ev.S.resize(L);
            ev.weight.resize(L);
            for (std::size_t k = 0; k < L; ++k) {
                const double R = normal(rng);
                const double S = normal(rng);
                const double P = x[k];
                const double Q = x[L + k];
                const double w = prefactor * (Q * R + P * S) * (R * R + S * S - 4.0);
                ev.R[k] = R;
                ev.S[k] = S;
                ev.weight[k] = w;
                // (R dtau^{1/3})^3 = R^3 dtau
                acc_P += w * R * R * R * dtau;
                acc_Q += w * S * S * S * dtau;
            }
            if (keep_events) out.ledger.events.push_back(std::move(ev));
        }
        if ((s + 1) % cfg.output_stride == 0) per_step_acc.emplace_back(acc_P, acc_Q);
    };

    out.record = integrate(initial, params, cfg, on_step);
    out.ledger.branch_P.reserve(out.record.size());
    out.ledger.branch_Q.reserve(out.record.size());
    out.ledger.branch_P.push_back(0.0);
    out.ledger.branch_Q.push_back(0.0);
    for (auto [p, q] : per_step_acc) {
        out.ledger.branch_P.push_back(p);
        out.ledger.branch_Q.push_back(q);
    }
    return out;
}

GaussHermite gauss_hermite(std::size_t n) {
    if (n < 1) throw ConfigError("gauss_hermite: need at least one node");
    const auto N = static_cast<Eigen::Index>(n);
    // Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index i = 0; i + 1 < N; ++i) T(i, i + 1) = T(i + 1, i) = std::sqrt(static_cast<double>(i + 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    GaussHermite g;
    const double mu0 = std::sqrt(2.0 * std::numbers::pi);
    for (Eigen::Index i = 0; i < N; ++i) {
        g.nodes.push_back(es.eigenvalues()(i));
        const double v = es.eigenvectors()(0, i);
        g.weights.push_back(mu0 * v * v);
    }
    return g;
}

double jump_kernel_integral(int a, int b, std::size_t nodes) {
    if (a < 0 || b < 0) throw ConfigError("jump_kernel_integral: powers must be >= 0");
    const auto g = gauss_hermite(nodes);
    double s = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        for (std::size_t j = 0; j < g.nodes.size(); ++j) {
            const double R = g.nodes[i];
            const double S = g.nodes[j];
            s += g.weights[i] * g.weights[j] * std::pow(R, a) * std::pow(S, b) * (R * R + S * S - 4.0);
        }
    return s;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
    const std::size_t L = rec.sites();
    os << "t";
    for (std::size_t j = 1; j <= L; ++j) os << ",P_" << j;
    for (std::size_t j = 1; j <= L; ++j) os << ",Q_" << j;
    os << '\n';
    for (std::size_t m = 0; m < rec.size(); ++m) {
        os << io::num(rec.times[m]);
        for (double v : rec.states[m].P()) os << ',' << io::num(v);
        for (double v : rec.states[m].Q()) os << ',' << io::num(v);
        os << '\n';
    }
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary trajectory dump assumes a little-endian host");

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

}  // namespace

void write_trajectory_binary(std::ostream& os, const TrajectoryRecord& rec) {
    os.write("BHTW", 4);
    put_u32(os, kTrajectoryBinaryVersion);
    put_u32(os, static_cast<std::uint32_t>(rec.sites()));
    put_u32(os, static_cast<std::uint32_t>(rec.size()));
    for (std::size_t m = 0; m < rec.size(); ++m) {
        put_f64(os, rec.times[m]);
        for (double v : rec.states[m].flat()) put_f64(os, v);
    }
}

TrajectoryRecord read_trajectory_binary(std::istream& is) {
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "BHTW", 4) != 0) throw ConfigError("trajectory dump: bad magic");
    const std::uint32_t version = get_u32(is);
    if (version != kTrajectoryBinaryVersion)
        throw ConfigError("trajectory dump: unsupported version " + std::to_string(version));
    const std::uint32_t L = get_u32(is);
    const std::uint32_t G = get_u32(is);
    TrajectoryRecord rec;
    for (std::uint32_t m = 0; m < G; ++m) {
        rec.times.push_back(get_f64(is));
        PhaseState s(L);
        for (double& v : s.flat()) v = get_f64(is);
        rec.states.push_back(std::move(s));
    }
    if (!is) throw ConfigError("trajectory dump: truncated file");
    return rec;
}

}  // namespace bhtwa
