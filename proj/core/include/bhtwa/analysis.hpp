#pragma once

// Log-log exponent fits, crossover detection and the classical early-time
// oracle for the dispersion laws.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bhtwa/integrate.hpp"
#include "bhtwa/model.hpp"
#include "bhtwa/observables.hpp"
#include "bhtwa/wigner.hpp"

namespace bhtwa {

struct ScalingFit {
    std::string series_id;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double slope = 0.0;
    double intercept = 0.0;  ///< of log value vs log t
    double stderr_slope = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
    std::optional<double> target;
    double tolerance = 0.0;
    bool verdict = false;  ///< |slope - target| <= tolerance; false without a target
};

/// Early superdiffusive window [e^3, e^7.5] in units of t0.
inline constexpr double kEarlyWindowLo = 20.085536923187668;
inline constexpr double kEarlyWindowHi = 1808.0424144560632;

/// OLS of log y on log x over points with t_lo <= x <= t_hi. Throws
/// InsufficientDataError with fewer than 8 points and DomainError on
/// nonpositive x or y inside the window.
ScalingFit fit_loglog(std::span<const double> x, std::span<const double> y, double t_lo, double t_hi);

ScalingFit fit_exponent(const ScalarSeries& series, double t_lo, double t_hi);

/// Sets target, tolerance and verdict.
ScalingFit judge(ScalingFit fit, double target, double tolerance);

struct CrossoverOptions {
    double window_decades = 0.5;   ///< width of the sliding log-log fit
    double tolerance = 0.2;        ///< allowed |slope - late exponent|
    double stable_decades = 1.0;   ///< required length of the settled regime
};

struct CrossoverResult {
    bool found = false;
    double time = 0.0;                 ///< estimate, valid if found
    bool early_regime_seen = false;    ///< profile came within tolerance of the early exponent first
    std::vector<double> profile_t;     ///< window centers
    std::vector<double> profile_slope;
};

/// Sliding-window slope profile; the crossover is the first window center
/// after which the slope stays within tolerance of late_exponent for
/// stable_decades. A series that never settles gives found = false.
CrossoverResult detect_crossover(const ScalarSeries& series, double early_exponent, double late_exponent = 1.0,
                                 const CrossoverOptions& opts = {});

struct EarlyTimeOptions {
    double epsilon = 1e-8;       ///< seeding occupation of empty sites
    double step = 0.1;
    double t_max = 2e4;
    double signal_factor = 100.0;  ///< window starts once I - I(0) >= signal_factor * epsilon
    std::size_t max_distance = 3;
    Ordering ordering = Ordering::classical;
};

struct SiteExponent {
    std::size_t site = 0;       ///< 0-based
    std::size_t distance = 0;   ///< l, 0 for the filled site
    double predicted = 0.0;     ///< 2 l
    ScalingFit fit;
};

/// One noiseless trajectory from the wavepacket center of a single-site
/// preset with every empty site seeded at occupation epsilon and the same
/// phase. Fits I_{n+-l}(t) - I_{n+-l}(0) on the first decade after the growth
/// exceeds the seeding floor (l = 1..max_distance), and I_n itself over the
/// l = 1 window.
std::vector<SiteExponent> early_time_oracle(const ChainParams& params, const InitialConditionPreset& preset,
                                            const EarlyTimeOptions& opts = {});

}  // namespace bhtwa
