#include "bhtwa/observables.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "bhtwa/error.hpp"
#include "bhtwa/io.hpp"

namespace bhtwa {

ScalarSeries SiteSeries::site(std::size_t n) const {
    ScalarSeries s;
    s.times = times;
    s.label = label + "_" + std::to_string(n + 1);
    s.values.resize(times.size());
    for (std::size_t m = 0; m < times.size(); ++m) s.values[m] = at(m, n);
    return s;
}

ScalarSeries ctd(const MomentSeries& series) {
    const std::size_t L = series.L;
    ScalarSeries out;
    out.times = series.times;
    out.label = "ctd";
    out.values.assign(series.size(), 0.0);
    for (std::size_t m = 0; m < series.size(); ++m) {
        double s = 0.0;
        for (std::size_t n = 0; n < L; ++n)
            for (std::size_t l = 1; n + l < L; ++l) s += static_cast<double>(l) * series.D(m, n, n + l);
        out.values[m] = s;
    }
    return out;
}

double mixing_entropy(std::span<const double> occupations) {
    if (occupations.empty()) throw DomainError("mixing_entropy: empty occupation vector");
    double total = 0.0;
    for (double v : occupations) {
        if (!(v >= -1e-9)) throw DomainError("mixing_entropy: negative occupation " + io::num(v));
        total += std::max(v, 0.0);
    }
    if (!(total > 0.0)) throw DomainError("mixing_entropy: occupations sum to zero");
    double s = 0.0;
    for (double v : occupations) {
        const double p = std::max(v, 0.0) / total;
        if (p > 0.0) s -= p * std::log(p);
    }
    return s / static_cast<double>(occupations.size());
}

double mixing_entropy_max(std::size_t L) noexcept { return std::log(static_cast<double>(L)) / static_cast<double>(L); }

ScalarSeries mixing_entropy_series(const MomentSeries& series, double vacuum_offset) {
    ScalarSeries out;
    out.times = series.times;
    out.label = "mixing_entropy";
    out.values.resize(series.size());
    for (std::size_t m = 0; m < series.size(); ++m) {
        auto occ = series.occupations(m);
        for (double& v : occ) v = std::max(v - vacuum_offset, 0.0);
        out.values[m] = mixing_entropy(occ);
    }
    return out;
}

namespace {

std::size_t grid_index(const std::vector<double>& times, double t) {
    if (times.size() < 2) throw InsufficientDataError("temporal_variance: need at least two grid points");
    if (t < times.front() || t > times.back() * (1.0 + 1e-12))
        throw ConfigError("temporal_variance: t_final " + io::num(t) + " outside the grid");
    auto it = std::lower_bound(times.begin(), times.end(), t);
    std::size_t k = static_cast<std::size_t>(it - times.begin());
    if (k == times.size()) --k;
    if (k > 0 && std::abs(times[k - 1] - t) < std::abs(times[k] - t)) --k;
    if (k == 0) throw ConfigError("temporal_variance: t_final must be > 0");
    return k;
}

}  // namespace

double temporal_variance(const SiteSeries& X, std::span<const double> norm, double t_final, double N) {
    const std::size_t k = grid_index(X.times, t_final);
    const std::size_t L = X.L;
    if (norm.size() != L) throw ConfigError("temporal_variance: normalizer length must equal L");
    const double target = N / static_cast<double>(L);
    double total = 0.0;
    for (std::size_t n = 0; n < L; ++n) {
        if (norm[n] == 0.0)
            throw DomainError("temporal_variance: D_nn(t_f) = 0 at site " + std::to_string(n + 1));
        double integral = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
            const double a = X.at(m, n) - target;
            const double b = X.at(m + 1, n) - target;
            integral += 0.5 * (X.times[m + 1] - X.times[m]) * (a * a + b * b);
        }
        total += integral / norm[n];
    }
    return total / X.times[k];
}

double temporal_variance(const MomentSeries& series, VarianceSignal signal, double t_final, double N,
                         double vacuum_offset) {
    const std::size_t L = series.L;
    SiteSeries X;
    X.times = series.times;
    X.L = L;
    X.values.resize(series.size() * L);
    for (std::size_t m = 0; m < series.size(); ++m)
        for (std::size_t n = 0; n < L; ++n)
            X.values[m * L + n] =
                signal == VarianceSignal::dispersion ? series.D(m, n, n) : series.I(m, n) - vacuum_offset;
    const std::size_t k = grid_index(series.times, t_final);
    std::vector<double> norm(L);
    for (std::size_t n = 0; n < L; ++n) norm[n] = series.D(k, n, n);
    return temporal_variance(X, norm, series.times[k], N);
}

LocalEnergySeries local_energy_series(std::span<const TrajectoryRecord> trajectories, const ChainParams& params) {
    if (trajectories.empty()) throw ConfigError("local_energy_series: no trajectories");
    const std::size_t G = trajectories.front().size();
    const std::size_t L = params.L;
    LocalEnergySeries out;
    for (SiteSeries* s : {&out.mean, &out.dispersion}) {
        s->times = trajectories.front().times;
        s->L = L;
        s->values.assign(G * L, 0.0);
    }
    out.mean.label = "local_energy";
    out.dispersion.label = "local_energy_dispersion";
    for (const auto& rec : trajectories) {
        if (rec.size() != G) throw ConfigError("local_energy_series: trajectories on different grids");
        for (std::size_t m = 0; m < G; ++m) {
            const auto h = local_energy(rec.states[m], params);
            for (std::size_t n = 0; n < L; ++n) {
                out.mean.values[m * L + n] += h[n];
                out.dispersion.values[m * L + n] += h[n] * h[n];
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(trajectories.size());
    for (std::size_t i = 0; i < G * L; ++i) {
        out.mean.values[i] *= inv;
        out.dispersion.values[i] = out.dispersion.values[i] * inv - out.mean.values[i] * out.mean.values[i];
    }
    return out;
}

LocalEnergySeries local_energy_series(const MomentSeries& series) {
    LocalEnergySeries out;
    out.mean = {series.times, series.L, series.mean_h, "local_energy"};
    out.dispersion = {series.times, series.L, series.var_h, "local_energy_dispersion"};
    return out;
}

void write_scalar_csv(std::ostream& os, const ScalarSeries& s) {
    os << "t,value\n";
    for (std::size_t m = 0; m < s.size(); ++m) os << io::num(s.times[m]) << ',' << io::num(s.values[m]) << '\n';
}

void write_site_csv(std::ostream& os, const SiteSeries& s) {
    os << "t,site,value\n";
    for (std::size_t m = 0; m < s.times.size(); ++m)
        for (std::size_t n = 0; n < s.L; ++n)
            os << io::num(s.times[m]) << ',' << n + 1 << ',' << io::num(s.at(m, n)) << '\n';
}

}  // namespace bhtwa
