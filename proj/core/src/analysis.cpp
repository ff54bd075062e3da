#include "bhtwa/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "bhtwa/error.hpp"
#include "bhtwa/io.hpp"

namespace bhtwa {

ScalingFit fit_loglog(std::span<const double> x, std::span<const double> y, double t_lo, double t_hi) {
    if (x.size() != y.size()) throw ConfigError("fit: x and y differ in length");
    if (!(t_lo < t_hi)) throw ConfigError("fit: window must satisfy t_lo < t_hi");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < t_lo || x[i] > t_hi) continue;
        if (!(x[i] > 0.0)) throw DomainError("fit: nonpositive abscissa " + io::num(x[i]));
        if (!(y[i] > 0.0)) throw DomainError("fit: nonpositive value " + io::num(y[i]) + " at t = " + io::num(x[i]));
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const std::size_t n = lx.size();
    if (n < 8)
        throw InsufficientDataError("fit: " + std::to_string(n) + " points in [" + io::num(t_lo) + ", " +
                                    io::num(t_hi) + "], need 8");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    ScalingFit f;
    f.t_lo = t_lo;
    f.t_hi = t_hi;
    f.points = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double sse = std::max(0.0, syy - f.slope * sxy);
    f.stderr_slope = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return f;
}

ScalingFit fit_exponent(const ScalarSeries& series, double t_lo, double t_hi) {
    auto f = fit_loglog(series.times, series.values, t_lo, t_hi);
    f.series_id = series.label;
    return f;
}

ScalingFit judge(ScalingFit fit, double target, double tolerance) {
    fit.target = target;
    fit.tolerance = tolerance;
    fit.verdict = std::abs(fit.slope - target) <= tolerance;
    return fit;
}

CrossoverResult detect_crossover(const ScalarSeries& series, double early_exponent, double late_exponent,
                                 const CrossoverOptions& opts) {
    CrossoverResult out;
    const double half = 0.5 * opts.window_decades * std::log(10.0);
    double tmin = 0.0;
    for (double t : series.times)
        if (t > 0.0) {
            tmin = t;
            break;
        }
    if (!(tmin > 0.0)) throw InsufficientDataError("crossover: no positive times");
    const double tmax = series.times.back();

    for (std::size_t i = 0; i < series.size(); ++i) {
        const double t = series.times[i];
        if (!(t > 0.0)) continue;
        const double lo = t * std::exp(-half);
        const double hi = t * std::exp(half);
        if (lo < tmin || hi > tmax) continue;
        try {
            const auto f = fit_loglog(series.times, series.values, lo, hi);
            out.profile_t.push_back(t);
            out.profile_slope.push_back(f.slope);
        } catch (const DomainError&) {
            // windows touching nonpositive values carry no slope information
        }
    }

    const double span = std::pow(10.0, opts.stable_decades);
    for (std::size_t i = 0; i < out.profile_t.size(); ++i) {
        if (std::abs(out.profile_slope[i] - early_exponent) <= opts.tolerance) out.early_regime_seen = true;
        const double t0 = out.profile_t[i];
        if (t0 * span > out.profile_t.back()) break;
        bool stable = true;
        for (std::size_t j = i; j < out.profile_t.size() && out.profile_t[j] <= t0 * span; ++j)
            if (std::abs(out.profile_slope[j] - late_exponent) > opts.tolerance) {
                stable = false;
                break;
            }
        if (stable) {
            out.found = true;
            out.time = t0;
            break;
        }
    }
    return out;
}

std::vector<SiteExponent> early_time_oracle(const ChainParams& params, const InitialConditionPreset& preset,
                                            const EarlyTimeOptions& opts) {
    params.validate();
    preset.validate(params.L);
    if (preset.kind != InitialConditionPreset::Kind::single_site || preset.filled_sites.size() != 1)
        throw ConfigError("early_time_oracle: needs a single-site preset");
    if (!(opts.epsilon > 0.0)) throw ConfigError("early_time_oracle: epsilon must be > 0");

    const std::size_t L = params.L;
    const std::size_t n0 = preset.filled_sites.front();
    auto spec = build_spec(preset, params);
    PhaseState x(L);
    const double a = std::sqrt(2.0 * opts.epsilon);
    for (std::size_t j = 0; j < L; ++j) {
        x.P()[j] = j == n0 ? spec.mean_P[j] : a * std::sin(preset.phase);
        x.Q()[j] = j == n0 ? spec.mean_Q[j] : a * std::cos(preset.phase);
    }

    const std::size_t steps = static_cast<std::size_t>(std::llround(opts.t_max / opts.step));
    std::vector<double> t(steps + 1);
    std::vector<double> I((steps + 1) * L);
    std::vector<double> ws(10 * L);
    auto f = [&](std::span<const double> y, std::span<double> dy) { drift(y, params, dy, opts.ordering); };
    auto record = [&](std::size_t s) {
        t[s] = static_cast<double>(s) * opts.step;
        for (std::size_t j = 0; j < L; ++j) I[s * L + j] = x.occupation(j);
    };
    record(0);
    for (std::size_t s = 1; s <= steps; ++s) {
        rk4_step(x.flat(), opts.step, f, ws);
        record(s);
    }

    auto growth = [&](std::size_t j) {
        std::vector<double> g(steps + 1);
        for (std::size_t s = 0; s <= steps; ++s) g[s] = I[s * L + j] - I[j];
        return g;
    };
    auto window_start = [&](const std::vector<double>& g) -> double {
        for (std::size_t s = 1; s <= steps; ++s)
            if (g[s] >= opts.signal_factor * opts.epsilon) return t[s];
        throw InsufficientDataError("early_time_oracle: growth never exceeds the seeding floor");
    };

    std::vector<SiteExponent> out;
    double first_window = 0.0;
    for (std::size_t l = 1; l <= opts.max_distance; ++l) {
        for (int side : {-1, +1}) {
            const long j = static_cast<long>(n0) + side * static_cast<long>(l);
            if (j < 0 || j >= static_cast<long>(L)) continue;
            const auto g = growth(static_cast<std::size_t>(j));
            const double lo = window_start(g);
            if (l == 1 && first_window == 0.0) first_window = lo;
            SiteExponent e;
            e.site = static_cast<std::size_t>(j);
            e.distance = l;
            e.predicted = 2.0 * static_cast<double>(l);
            e.fit = fit_loglog(t, g, lo, 10.0 * lo);
            e.fit.series_id = "I_" + std::to_string(j + 1);
            out.push_back(e);
        }
    }
    if (first_window > 0.0) {
        std::vector<double> own(steps + 1);
        for (std::size_t s = 0; s <= steps; ++s) own[s] = I[s * L + n0];
        SiteExponent e;
        e.site = n0;
        e.distance = 0;
        e.predicted = 0.0;
        e.fit = fit_loglog(t, own, first_window, 10.0 * first_window);
        e.fit.series_id = "I_" + std::to_string(n0 + 1);
        out.insert(out.begin(), e);
    }
    return out;
}

}  // namespace bhtwa
