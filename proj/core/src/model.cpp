#include "bhtwa/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bhtwa/error.hpp"

namespace bhtwa {

void ChainParams::validate() const {
    if (L < 2) throw ConfigError("ChainParams: L must be >= 2, got " + std::to_string(L));
    if (!(J > 0.0)) throw ConfigError("ChainParams: J must be > 0");
    if (!(U >= 0.0)) throw ConfigError("ChainParams: U must be >= 0");
    if (!(hbar_eff > 0.0)) throw ConfigError("ChainParams: hbar_eff must be > 0");
    if (!std::isfinite(mu)) throw ConfigError("ChainParams: mu must be finite");
    if (!open) throw ConfigError("ChainParams: only open (no-flux) chains are supported");
}

ChainParams ChainParams::from_ratios(std::size_t L, double u_over_j, double mu_over_j, double c, double hbar_eff) {
    ChainParams p;
    p.L = L;
    p.c = c;
    p.J = c;
    p.U = u_over_j * c;
    p.mu = mu_over_j * c;
    p.hbar_eff = hbar_eff;
    return p;
}

PhaseState::PhaseState(std::span<const double> P, std::span<const double> Q) : L_(P.size()), x_(2 * P.size()) {
    if (P.size() != Q.size()) throw ConfigError("PhaseState: P and Q lengths differ");
    for (std::size_t j = 0; j < L_; ++j) {
        x_[j] = P[j];
        x_[L_ + j] = Q[j];
    }
}

double PhaseState::number() const noexcept {
    double n = 0.0;
    for (double v : x_) n += v * v;
    return 0.5 * n;
}

double wrap_angle(double a) noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a + std::numbers::pi, two_pi);
    if (w < 0.0) w += two_pi;
    w -= std::numbers::pi;
    // fmod can land exactly on +pi after the shift for inputs like -pi - tiny
    if (w >= std::numbers::pi) w -= two_pi;
    return w;
}

NumberPhaseState to_number_phase(const PhaseState& s) {
    NumberPhaseState out;
    const std::size_t L = s.sites();
    out.I.resize(L);
    out.phi.resize(L);
    for (std::size_t j = 0; j < L; ++j) {
        out.I[j] = s.occupation(j);
        out.phi[j] = wrap_angle(std::atan2(s.P()[j], s.Q()[j]));
    }
    return out;
}

PhaseState to_phase_state(const NumberPhaseState& s) {
    if (s.I.size() != s.phi.size()) throw ConfigError("NumberPhaseState: I and phi lengths differ");
    PhaseState out(s.I.size());
    for (std::size_t j = 0; j < s.I.size(); ++j) {
        if (s.I[j] < 0.0) throw DomainError("NumberPhaseState: negative action");
        const double r = std::sqrt(2.0 * s.I[j]);
        out.P()[j] = r * std::sin(s.phi[j]);
        out.Q()[j] = r * std::cos(s.phi[j]);
    }
    return out;
}

namespace {

void check_dim(std::size_t got, const ChainParams& p) {
    if (got != p.L)
        throw ConfigError("state has " + std::to_string(got) + " sites, parameters expect " + std::to_string(p.L));
}

}  // namespace

double hamiltonian(const PhaseState& s, const ChainParams& p, Ordering ordering) {
    check_dim(s.sites(), p);
    const auto P = s.P();
    const auto Q = s.Q();
    const double m = p.chemical_potential(ordering);
    double h = 0.0;
    for (std::size_t j = 0; j < p.L; ++j) {
        const double r = P[j] * P[j] + Q[j] * Q[j];
        h += 0.125 * p.U * r * r - 0.5 * m * r;
        if (j + 1 < p.L) h -= p.J * (P[j] * P[j + 1] + Q[j] * Q[j + 1]);
    }
    return h;
}

double hamiltonian_number_phase(const NumberPhaseState& s, const ChainParams& p, Ordering ordering) {
    check_dim(s.I.size(), p);
    const double m = p.chemical_potential(ordering);
    double h = 0.0;
    for (std::size_t j = 0; j < p.L; ++j) {
        h += 0.5 * p.U * s.I[j] * s.I[j] - m * s.I[j];
        if (j + 1 < p.L) h -= 2.0 * p.J * std::sqrt(s.I[j] * s.I[j + 1]) * std::cos(s.phi[j] - s.phi[j + 1]);
    }
    return h;
}

void drift(std::span<const double> x, const ChainParams& p, std::span<double> dx, Ordering ordering) noexcept {
    const std::size_t L = p.L;
    const double* P = x.data();
    const double* Q = x.data() + L;
    double* dP = dx.data();
    double* dQ = dx.data() + L;
    const double m = p.chemical_potential(ordering);
    const double J = p.J;
    const double halfU = 0.5 * p.U;
    for (std::size_t j = 0; j < L; ++j) {
        const double qn = (j > 0 ? Q[j - 1] : 0.0) + (j + 1 < L ? Q[j + 1] : 0.0);
        const double pn = (j > 0 ? P[j - 1] : 0.0) + (j + 1 < L ? P[j + 1] : 0.0);
        const double g = halfU * (P[j] * P[j] + Q[j] * Q[j]) - m;
        dP[j] = -J * qn + Q[j] * g;
        dQ[j] = J * pn - P[j] * g;
    }
}

PhaseDerivative drift_pq(const PhaseState& s, const ChainParams& p, Ordering ordering) {
    check_dim(s.sites(), p);
    std::vector<double> dx(2 * p.L);
    drift(s.flat(), p, dx, ordering);
    return {std::vector<double>(dx.begin(), dx.begin() + static_cast<std::ptrdiff_t>(p.L)),
            std::vector<double>(dx.begin() + static_cast<std::ptrdiff_t>(p.L), dx.end())};
}

NumberPhaseDerivative drift_numberphase(const NumberPhaseState& s, const ChainParams& p, Ordering ordering) {
    check_dim(s.I.size(), p);
    const std::size_t L = p.L;
    for (std::size_t j = 0; j < L; ++j)
        if (!(s.I[j] > 0.0))
            throw SingularStateError("drift_numberphase: I_" + std::to_string(j + 1) +
                                     " is zero; use the (P, Q) drift instead");
    const double m = p.chemical_potential(ordering);
    NumberPhaseDerivative d{std::vector<double>(L, 0.0), std::vector<double>(L, 0.0)};
    for (std::size_t j = 0; j < L; ++j) {
        double dI = 0.0;
        double hop = 0.0;
        for (std::size_t k : {j - 1, j + 1}) {
            if (k >= L) continue;  // j - 1 wraps to SIZE_MAX at j == 0
            dI += std::sqrt(s.I[j] * s.I[k]) * std::sin(s.phi[k] - s.phi[j]);
            hop += std::sqrt(s.I[k] / s.I[j]) * std::cos(s.phi[j] - s.phi[k]);
        }
        d.dI[j] = 2.0 * p.J * dI;
        d.dphi[j] = -m + p.U * s.I[j] - p.J * hop;
    }
    return d;
}

void drift_jvp(std::span<const double> x, std::span<const double> v, const ChainParams& p, std::span<double> out,
               Ordering ordering) noexcept {
    const std::size_t L = p.L;
    const double* P = x.data();
    const double* Q = x.data() + L;
    const double* vP = v.data();
    const double* vQ = v.data() + L;
    double* oP = out.data();
    double* oQ = out.data() + L;
    const double m = p.chemical_potential(ordering);
    const double J = p.J;
    const double U = p.U;
    for (std::size_t j = 0; j < L; ++j) {
        const double vqn = (j > 0 ? vQ[j - 1] : 0.0) + (j + 1 < L ? vQ[j + 1] : 0.0);
        const double vpn = (j > 0 ? vP[j - 1] : 0.0) + (j + 1 < L ? vP[j + 1] : 0.0);
        const double g = 0.5 * U * (P[j] * P[j] + Q[j] * Q[j]) - m;
        const double upq = U * P[j] * Q[j];
        oP[j] = -J * vqn + upq * vP[j] + (g + U * Q[j] * Q[j]) * vQ[j];
        oQ[j] = J * vpn - (g + U * P[j] * P[j]) * vP[j] - upq * vQ[j];
    }
}

std::vector<double> local_energy(const PhaseState& s, const ChainParams& p) {
    check_dim(s.sites(), p);
    const auto P = s.P();
    const auto Q = s.Q();
    std::vector<double> h(p.L);
    for (std::size_t j = 0; j < p.L; ++j) {
        const double r = P[j] * P[j] + Q[j] * Q[j];
        h[j] = -0.125 * p.U * r * r - 0.5 * p.mu * r;
        if (j + 1 < p.L) h[j] -= p.J * (P[j] * P[j + 1] + Q[j] * Q[j + 1]);
    }
    return h;
}

}  // namespace bhtwa
