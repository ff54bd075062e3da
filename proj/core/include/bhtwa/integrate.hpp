#pragma once

// Fixed-step RK4 trajectories on a uniform output grid, with running time
// integrals of P and Q for the quantum-jump corrections.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "bhtwa/model.hpp"

namespace bhtwa {

struct IntegratorConfig {
    double step = 0.1;                 ///< internal RK4 step, units of t0
    double t_final = 2e4;
    std::size_t output_stride = 100;   ///< internal steps per stored sample
    double conservation_tol = 1e-6;    ///< relative number / energy drift allowed
    Ordering ordering = Ordering::wigner;

    void validate() const;
    std::size_t total_steps() const;
    /// Number of stored grid points, t = 0 included.
    std::size_t grid_size() const { return total_steps() / output_stride + 1; }
    std::vector<double> grid() const;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<PhaseState> states;
    /// cumint_P[m][k] = int_0^{t_m} P_k(t') dt' (trapezoidal on internal steps)
    std::vector<std::vector<double>> cumint_P;
    std::vector<std::vector<double>> cumint_Q;
    double max_number_drift = 0.0;
    double max_energy_drift = 0.0;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t sites() const noexcept { return states.empty() ? 0 : states.front().sites(); }
};

/// Classical RK4 on the flat state. `ws` must hold 5 * x.size() doubles.
template <class Drift>
void rk4_step(std::span<double> x, double h, Drift&& f, std::span<double> ws) {
    const std::size_t n = x.size();
    double* k1 = ws.data();
    double* k2 = k1 + n;
    double* k3 = k2 + n;
    double* k4 = k3 + n;
    double* tmp = k4 + n;
    f(std::span<const double>(x.data(), n), std::span<double>(k1, n));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    f(std::span<const double>(tmp, n), std::span<double>(k2, n));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    f(std::span<const double>(tmp, n), std::span<double>(k3, n));
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    f(std::span<const double>(tmp, n), std::span<double>(k4, n));
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// Throws IntegrationError carrying the first grid time at which the number
/// or Wigner-energy drift exceeds cfg.conservation_tol.
TrajectoryRecord evolve(const PhaseState& initial, const ChainParams& params, const IntegratorConfig& cfg);

/// One quantum-jump event at time tau: per-site standard normal draws (R_k, S_k)
/// displacing P_k by R_k dtau^{1/3} and Q_k by S_k dtau^{1/3}, with per-site
/// weights w_k = U/(8 hbar) 2 pi (Q_k R_k + P_k S_k)(R_k^2 + S_k^2 - 4).
struct JumpEvent {
    double tau = 0.0;
    std::vector<double> R;
    std::vector<double> S;
    std::vector<double> weight;
    double total_weight() const noexcept;
};

/// Jump events of one trajectory and their accumulated effect on equal-time
/// products. On the output grid,
///   branch_P[m] = sum_{tau_A < t_m} sum_k w_{A,k} dP_{A,k}^3,
///   branch_Q[m] = sum_{tau_A < t_m} sum_k w_{A,k} dQ_{A,k}^3,
/// so the jump estimate of the <I_a I_b> correction at t_m is
///   (P_a + P_b) branch_P / 2 + (Q_a + Q_b) branch_Q / 2.
struct JumpLedger {
    double dtau = 0.0;
    std::vector<JumpEvent> events;
    std::vector<double> branch_P;
    std::vector<double> branch_Q;
};

struct LangevinTrajectory {
    TrajectoryRecord record;
    JumpLedger ledger;
};

/// The record is the jump-free base trajectory; jump displacements live in
/// the ledger branches so one-point functions stay identical to evolve().
/// Set keep_events = false to drop the per-event list and keep only the
/// accumulated branch series.
LangevinTrajectory evolve_with_langevin_jumps(const PhaseState& initial, const ChainParams& params,
                                              const IntegratorConfig& cfg, std::size_t jump_stride,
                                              std::uint64_t seed, std::uint64_t trajectory_index = 0,
                                              bool keep_events = true);

/// Nodes and weights of n-point Gauss-Hermite quadrature for the weight
/// exp(-x^2/2) (Golub-Welsch); weights sum to sqrt(2 pi).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermite gauss_hermite(std::size_t n);

/// int int R^a S^b (R^2 + S^2 - 4) exp(-(R^2 + S^2)/2) dR dS by tensor
/// Gauss-Hermite quadrature. (4, 0) gives the 12 pi jump kernel; moments with
/// a + b <= 2 vanish.
double jump_kernel_integral(int a, int b, std::size_t nodes = 24);

/// CSV with header t,P_1..P_L,Q_1..Q_L.
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec);

/// Binary dump: 16-byte header {"BHTW", u32 version, u32 L, u32 grid length}
/// followed by little-endian doubles t, P_1..P_L, Q_1..Q_L per grid point.
void write_trajectory_binary(std::ostream& os, const TrajectoryRecord& rec);

/// Reads times and states back (running integrals are not stored).
TrajectoryRecord read_trajectory_binary(std::istream& is);

inline constexpr std::uint32_t kTrajectoryBinaryVersion = 1;

}  // namespace bhtwa
