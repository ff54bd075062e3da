#pragma once

// Post-processing of MomentSeries and trajectories: correlation transport
// distance, mixing entropy, temporal variance, local-energy transport.

#include <span>
#include <string>
#include <vector>

#include "bhtwa/ensemble.hpp"
#include "bhtwa/integrate.hpp"

namespace bhtwa {

struct ScalarSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::string label;

    std::size_t size() const noexcept { return times.size(); }
};

/// Per-site series on a grid, values[m * L + n].
struct SiteSeries {
    std::vector<double> times;
    std::size_t L = 0;
    std::vector<double> values;
    std::string label;

    double at(std::size_t m, std::size_t n) const { return values[m * L + n]; }
    ScalarSeries site(std::size_t n) const;
};

/// l(t) = sum_n sum_{l >= 1, n + l < L} l * D_{n, n+l}(t), jump-corrected.
ScalarSeries ctd(const MomentSeries& series);

/// S = -(1/L) sum_n I_n log I_n (natural log, 0 log 0 = 0). The input is
/// renormalized to unit sum first. Entries below -1e-9 throw DomainError.
double mixing_entropy(std::span<const double> occupations);

/// Upper bound log(L) / L.
double mixing_entropy_max(std::size_t L) noexcept;

/// Mixing entropy of the mean occupation profile at every grid point.
/// `vacuum_offset` is subtracted from each <I_n> first (the symmetric-ordering
/// shift (sigma_P^2 + sigma_Q^2)/2); negative results are clamped to zero.
ScalarSeries mixing_entropy_series(const MomentSeries& series, double vacuum_offset = 0.0);

enum class VarianceSignal { dispersion, occupation };

/// var_t = (1/t_f) sum_n [int_0^{t_f} (X_n - N/L)^2 dt] / D_nn(t_f), trapezoidal.
/// X_n = D_nn for VarianceSignal::dispersion, X_n = <I_n> - vacuum_offset for
/// VarianceSignal::occupation. t_final must be a grid time (nearest point used).
/// Throws DomainError when some D_nn(t_f) == 0.
double temporal_variance(const MomentSeries& series, VarianceSignal signal, double t_final, double N = 1.0,
                         double vacuum_offset = 0.0);

/// Same quadrature on an explicit per-site signal with its normalizers.
double temporal_variance(const SiteSeries& X, std::span<const double> norm, double t_final, double N = 1.0);

struct LocalEnergySeries {
    SiteSeries mean;        ///< <h_j>(t)
    SiteSeries dispersion;  ///< <h_j^2> - <h_j>^2 (classical part)
};

/// Ensemble averages of the local energy over stored trajectories.
LocalEnergySeries local_energy_series(std::span<const TrajectoryRecord> trajectories, const ChainParams& params);

/// Same quantities from the accumulators of run_ensemble.
LocalEnergySeries local_energy_series(const MomentSeries& series);

/// t,value
void write_scalar_csv(std::ostream& os, const ScalarSeries& s);
/// t,site,value (1-based sites)
void write_site_csv(std::ostream& os, const SiteSeries& s);

}  // namespace bhtwa
