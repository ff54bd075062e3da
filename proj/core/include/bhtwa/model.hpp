#pragma once

// Bose-Hubbard chain in canonical (P, Q) and number-phase (I, phi) variables.
//
// Units: total number is rescaled to 1, energies are in units of 1/t0 with
// the hopping J = c / t0. Sites are 0-based in the C++ API; configuration
// files and CSV outputs use 1-based site numbers.

#include <cstddef>
#include <span>
#include <vector>

namespace bhtwa {

/// Which chemical potential enters the quadratic term: bare mu for the
/// classical Hamiltonian, mu + U for the Weyl-ordered (Wigner) one.
enum class Ordering { classical, wigner };

struct ChainParams {
    std::size_t L = 10;
    double J = 2e-4;
    double U = 2e-5;
    double mu = 1e-5;
    double hbar_eff = 1.0;
    double c = 2e-4;     ///< time-unit ratio, J = c / t0 when built from ratios
    bool open = true;    ///< no-flux edges; periodic chains are not supported

    double mu_tilde() const noexcept { return mu + U; }
    double chemical_potential(Ordering o) const noexcept { return o == Ordering::wigner ? mu_tilde() : mu; }

    /// Throws ConfigError unless L >= 2, J > 0, U >= 0, hbar_eff > 0.
    void validate() const;

    /// Builds parameters from the dimensionless ratios U/J and mu/J with J = c.
    static ChainParams from_ratios(std::size_t L, double u_over_j, double mu_over_j, double c = 2e-4,
                                   double hbar_eff = 1.0);
};

/// One phase-space point. Storage is a flat vector [P_0..P_{L-1}, Q_0..Q_{L-1}]
/// so integrators can treat it as a single ODE state.
class PhaseState {
public:
    PhaseState() = default;
    explicit PhaseState(std::size_t L) : L_(L), x_(2 * L, 0.0) {}
    PhaseState(std::span<const double> P, std::span<const double> Q);

    std::size_t sites() const noexcept { return L_; }

    std::span<double> P() noexcept { return {x_.data(), L_}; }
    std::span<double> Q() noexcept { return {x_.data() + L_, L_}; }
    std::span<const double> P() const noexcept { return {x_.data(), L_}; }
    std::span<const double> Q() const noexcept { return {x_.data() + L_, L_}; }
    std::span<double> flat() noexcept { return x_; }
    std::span<const double> flat() const noexcept { return x_; }

    double occupation(std::size_t j) const noexcept { return 0.5 * (x_[j] * x_[j] + x_[L_ + j] * x_[L_ + j]); }
    /// Sum_j (P_j^2 + Q_j^2) / 2.
    double number() const noexcept;

    friend bool operator==(const PhaseState&, const PhaseState&) = default;

private:
    std::size_t L_ = 0;
    std::vector<double> x_;
};

struct NumberPhaseState {
    std::vector<double> I;
    std::vector<double> phi;  ///< wrapped to [-pi, pi)
};

/// Wraps an angle to [-pi, pi).
double wrap_angle(double a) noexcept;

/// P = sqrt(2I) sin(phi), Q = sqrt(2I) cos(phi).
NumberPhaseState to_number_phase(const PhaseState& s);
PhaseState to_phase_state(const NumberPhaseState& s);

double hamiltonian(const PhaseState& s, const ChainParams& p, Ordering ordering = Ordering::classical);

/// Number-phase form of the Hamiltonian; equals hamiltonian() on converted states.
double hamiltonian_number_phase(const NumberPhaseState& s, const ChainParams& p,
                                Ordering ordering = Ordering::classical);

struct PhaseDerivative {
    std::vector<double> dP;
    std::vector<double> dQ;
};

struct NumberPhaseDerivative {
    std::vector<double> dI;
    std::vector<double> dphi;
};

/// In-place drift on the flat layout; x and dx both have size 2L.
/// dP_j = -J (Q_{j-1} + Q_{j+1}) + Q_j (U/2 (P_j^2 + Q_j^2) - mu_eff)
/// dQ_j =  J (P_{j-1} + P_{j+1}) - P_j (U/2 (P_j^2 + Q_j^2) - mu_eff)
void drift(std::span<const double> x, const ChainParams& p, std::span<double> dx,
           Ordering ordering = Ordering::wigner) noexcept;

PhaseDerivative drift_pq(const PhaseState& s, const ChainParams& p, Ordering ordering = Ordering::wigner);

/// Throws SingularStateError if any I_j == 0.
NumberPhaseDerivative drift_numberphase(const NumberPhaseState& s, const ChainParams& p,
                                        Ordering ordering = Ordering::wigner);

/// Directional derivative of drift() at x along v (analytic Jacobian-vector product).
void drift_jvp(std::span<const double> x, std::span<const double> v, const ChainParams& p, std::span<double> out,
               Ordering ordering = Ordering::wigner) noexcept;

/// Local energy per site,
///   h_j = -J (P_j P_{j+1} + Q_j Q_{j+1}) - U/8 (P_j^2 + Q_j^2)^2 - mu/2 (P_j^2 + Q_j^2),
/// with the bond term dropped at the last site. Note the sign of the quartic
/// term differs from hamiltonian(); the two are not summation-consistent for U != 0.
std::vector<double> local_energy(const PhaseState& s, const ChainParams& p);

}  // namespace bhtwa
