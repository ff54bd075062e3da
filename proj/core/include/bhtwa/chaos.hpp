#pragma once

// Chaos and spectral diagnostics: finite-time Lyapunov exponents, power
// spectra, the semiclassical spectral form factor and the alpha transform.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bhtwa/analysis.hpp"
#include "bhtwa/integrate.hpp"
#include "bhtwa/model.hpp"
#include "bhtwa/observables.hpp"
#include "bhtwa/wigner.hpp"

namespace bhtwa {

/// Base point plus an orthonormal tangent frame (columns of length 2L).
struct TangentBundle {
    PhaseState base;
    std::vector<std::vector<double>> frame;
    std::vector<double> log_stretches;
};

struct FtleResult {
    std::vector<double> exponents;  ///< all 2L, descending
    double positive_sum = 0.0;
    double t_final = 0.0;
    TangentBundle bundle;
};

/// Benettin procedure: the analytic tangent flow is co-integrated with the
/// trajectory by RK4 and re-orthonormalized (modified Gram-Schmidt) every
/// renorm_stride steps. Only J >= 0 is required here, so the decoupled J = 0
/// chain can serve as an integrable control. Throws NumericError on rank loss.
FtleResult ftle(const PhaseState& initial, const ChainParams& params, const IntegratorConfig& cfg,
                std::size_t renorm_stride = 10);

/// Mean positive-exponent sum over `count` Wigner samples.
struct FtleEnsemble {
    double mean_positive_sum = 0.0;
    double stderr_positive_sum = 0.0;
    std::vector<double> positive_sums;
};
FtleEnsemble ftle_ensemble(const CoherentStateSpec& spec, const ChainParams& params, const IntegratorConfig& cfg,
                           std::size_t count, std::uint64_t seed, std::size_t renorm_stride = 10);

enum class Window { none, hann };

struct Spectrum {
    std::vector<double> omega;  ///< angular frequency, 1/t0, bins 1..N/2
    std::vector<double> power;
};

/// One-sided periodogram of the mean-subtracted signal. Requires a uniform
/// grid (ConfigError otherwise) and at least 256 samples.
Spectrum power_spectrum(const ScalarSeries& signal, Window window = Window::hann);

/// Log-log slope over one decade around the geometric mid-frequency, after
/// dropping the lowest 5% and highest 10% of bins.
ScalingFit spectral_slope(const Spectrum& s);

/// |sum_m exp(-i t E_m)|^2 / count^2.
ScalarSeries sff_from_energies(std::span<const double> energies, std::span<const double> times);

/// SFF over Wigner-energies E_m = H_wigner(sample m) at t = 0.
ScalarSeries sff(const CoherentStateSpec& spec, const ChainParams& params, std::size_t count, std::uint64_t seed,
                 std::span<const double> times);

struct AlphaSeries {
    std::vector<double> times;
    std::size_t L = 0;
    std::vector<double> alpha_sq;     ///< [m][n], tracked mode order
    std::vector<double> eigenvalues;  ///< [m][n], tracked mode order
    ScalarSeries mixing_entropy_alpha;
    std::vector<double> min_overlap;  ///< smallest matched overlap per step (1 at m = 0)
    std::vector<double> crossings;    ///< grid times with a matched overlap below 0.9

    double a2(std::size_t m, std::size_t n) const { return alpha_sq[m * L + n]; }
    double ev(std::size_t m, std::size_t n) const { return eigenvalues[m * L + n]; }
};

/// Hermitian tridiagonal A with A_{j,j+1} = -i J sin(phi_j - phi_{j+1}).
Eigen::MatrixXcd alpha_matrix(const PhaseState& s, const ChainParams& params);

/// Diagonalizes A at every grid point, alpha = V^dagger sqrt(I / N) with N
/// the trajectory's total number, and tracks modes by overlap matching.
AlphaSeries alpha_transform(const TrajectoryRecord& trajectory, const ChainParams& params);

struct AlphaPairing {
    double eigenvalue_residual = 0.0;  ///< max |lambda_k + lambda_{L-1-k}| (sorted)
    double alpha_residual = 0.0;       ///< max ||alpha_k|^2 - |alpha_{L-1-k}|^2| (sorted)
    double norm_residual = 0.0;        ///< max |sum_n |alpha_n|^2 - 1|
};
AlphaPairing alpha_pairing(const AlphaSeries& a);

/// Ensemble dispersion of |alpha_n|^2 in tracked order.
SiteSeries alpha_dispersion(std::span<const AlphaSeries> runs);

void write_spectrum_csv(std::ostream& os, const Spectrum& s);
/// t,n,alpha_sq,eigenvalue
void write_alpha_csv(std::ostream& os, const AlphaSeries& a);

}  // namespace bhtwa
