#pragma once

// TWA ensemble averages with first-order quantum-jump corrections.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bhtwa/integrate.hpp"
#include "bhtwa/model.hpp"
#include "bhtwa/wigner.hpp"

namespace bhtwa {

enum class Corrections { none, integrated, langevin };

std::string to_string(Corrections c);
Corrections corrections_from_string(const std::string& s);

/// Ensemble-averaged one- and two-point functions of the occupations on the
/// output grid. The classical part and the jump correction are kept apart so
/// the pure-TWA result is recoverable from every run.
struct MomentSeries {
    std::vector<double> times;
    std::size_t L = 0;
    std::size_t ensemble_size = 0;
    Corrections corrections = Corrections::none;
    double max_number_drift = 0.0;  ///< worst relative drift over all trajectories
    double max_energy_drift = 0.0;

    std::vector<double> mean_I;     ///< [m][n]
    std::vector<double> stderr_I;   ///< [m][n]
    std::vector<double> mean_II;    ///< [m][a][b], symmetric in (a, b)
    std::vector<double> jump_corr;  ///< [m][a][b], symmetric in (a, b)
    std::vector<double> mean_h;     ///< local energy per site [m][n]
    std::vector<double> var_h;      ///< its ensemble variance [m][n]

    std::size_t size() const noexcept { return times.size(); }
    double I(std::size_t m, std::size_t n) const { return mean_I[m * L + n]; }
    double II(std::size_t m, std::size_t a, std::size_t b) const { return mean_II[(m * L + a) * L + b]; }
    double jc(std::size_t m, std::size_t a, std::size_t b) const { return jump_corr[(m * L + a) * L + b]; }
    /// Jump-corrected connected correlator at grid point m.
    double D(std::size_t m, std::size_t a, std::size_t b) const { return II(m, a, b) + jc(m, a, b) - I(m, a) * I(m, b); }
    /// Classical (pure TWA) connected correlator.
    double D_classical(std::size_t m, std::size_t a, std::size_t b) const { return II(m, a, b) - I(m, a) * I(m, b); }
    std::vector<double> occupations(std::size_t m) const;
};

struct EnsembleOptions {
    std::size_t count = 4096;
    std::uint64_t seed = 1;
    Corrections corrections = Corrections::integrated;
    std::size_t jump_stride = 10;   ///< Langevin jump spacing in internal steps
    std::size_t workers = 1;
    std::size_t block_size = 64;    ///< fixed reduction block; results do not depend on workers
};

/// Prefactor 3 U pi / (4 hbar) of the mixed two-point jump correction.
double jump_prefactor(const ChainParams& p) noexcept;

/// Runs count trajectories sampled from spec. Integration failures are rethrown
/// as IntegrationError naming the failing trajectory index.
MomentSeries run_ensemble(const CoherentStateSpec& spec, const ChainParams& params, const IntegratorConfig& cfg,
                          const EnsembleOptions& opts);

/// D_ab(t) = (<I_a I_b> + jump_corr_ab) - <I_a><I_b> on the whole grid.
std::vector<double> dispersion(std::size_t a, std::size_t b, const MomentSeries& series);

/// Two-time moment <I_a(t_1) I_b(t_2)> at grid indices (m1, m2) from stored
/// trajectories, integrated-jump formulation. Equal-time values agree with
/// run_ensemble(corrections = integrated).
struct TwoTimeMoment {
    double classical = 0.0;
    double jump_corr = 0.0;
};
TwoTimeMoment two_time_moment(std::span<const TrajectoryRecord> trajectories, const ChainParams& params,
                              std::size_t a, std::size_t b, std::size_t m1, std::size_t m2);

/// Long-format CSV: t,m,n,classical,jump_corr,D (1-based sites, m <= n).
void write_moments_csv(std::ostream& os, const MomentSeries& s);

/// One row of moments.csv, as read back by the sweep aggregator.
struct MomentRow {
    double t;
    std::size_t m;
    std::size_t n;
    double classical;
    double jump_corr;
    double D;
};
std::vector<MomentRow> read_moments_csv(std::istream& is);

}  // namespace bhtwa
