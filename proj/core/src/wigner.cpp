#include "bhtwa/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "bhtwa/error.hpp"

namespace bhtwa {

double CoherentStateSpec::mean_total_number() const noexcept {
    double n = 0.0;
    for (std::size_t j = 0; j < mean_P.size(); ++j) n += 0.5 * (mean_P[j] * mean_P[j] + mean_Q[j] * mean_Q[j]);
    return n + 0.5 * static_cast<double>(mean_P.size()) * (sigma_P * sigma_P + sigma_Q * sigma_Q);
}

void CoherentStateSpec::validate() const {
    if (mean_P.size() != mean_Q.size()) throw ConfigError("CoherentStateSpec: mean_P and mean_Q lengths differ");
    if (mean_P.empty()) throw ConfigError("CoherentStateSpec: empty chain");
    if (!(sigma_P > 0.0) || !(sigma_Q > 0.0)) throw ConfigError("CoherentStateSpec: widths must be positive");
}

void InitialConditionPreset::validate(std::size_t L) const {
    if (kind == Kind::uniform_random) return;
    if (filled_sites.empty()) throw ConfigError("preset: filled_sites is empty");
    if (fill_ratios.size() != filled_sites.size())
        throw ConfigError("preset: need one fill ratio per filled site");
    std::set<std::size_t> seen;
    for (std::size_t s : filled_sites) {
        if (s >= L) throw ConfigError("preset: filled site " + std::to_string(s + 1) + " outside chain of length " +
                                      std::to_string(L));
        if (!seen.insert(s).second) throw ConfigError("preset: duplicate filled site " + std::to_string(s + 1));
    }
    for (double r : fill_ratios)
        if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("preset: fill ratios must be positive");
    if (kind == Kind::single_site && filled_sites.size() != 1)
        throw ConfigError("preset: single-site preset needs exactly one filled site");
}

std::vector<double> target_occupations(const InitialConditionPreset& preset, std::size_t L) {
    preset.validate(L);
    std::vector<double> occ(L, 0.0);
    if (preset.kind == InitialConditionPreset::Kind::uniform_random) {
        auto rng = make_stream(preset.seed, 0, stream_purpose::preset);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double& o : occ) o = u(rng);
    } else {
        for (std::size_t i = 0; i < preset.filled_sites.size(); ++i) occ[preset.filled_sites[i]] = preset.fill_ratios[i];
    }
    double total = 0.0;
    for (double o : occ) total += o;
    for (double& o : occ) o /= total;
    return occ;
}

CoherentStateSpec build_spec(const InitialConditionPreset& preset, const ChainParams& params) {
    const auto occ = target_occupations(preset, params.L);
    CoherentStateSpec spec;
    spec.mean_P.resize(params.L);
    spec.mean_Q.resize(params.L);
    for (std::size_t j = 0; j < params.L; ++j) {
        const double r = std::sqrt(2.0 * occ[j]);
        spec.mean_P[j] = occ[j] > 0.0 ? r * std::sin(preset.phase) : 0.0;
        spec.mean_Q[j] = occ[j] > 0.0 ? r * std::cos(preset.phase) : 0.0;
    }
    return spec;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

PhaseState sample_one(const CoherentStateSpec& spec, std::uint64_t seed, std::uint64_t index) {
    auto rng = make_stream(seed, index, stream_purpose::initial_state);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t L = spec.sites();
    PhaseState s(L);
    auto P = s.P();
    auto Q = s.Q();
    for (std::size_t j = 0; j < L; ++j) {
        P[j] = spec.mean_P[j] + spec.sigma_P * normal(rng);
        Q[j] = spec.mean_Q[j] + spec.sigma_Q * normal(rng);
    }
    if (spec.renormalize_number) {
        const double n = s.number();
        if (n > 0.0) {
            const double scale = 1.0 / std::sqrt(n);
            for (double& v : s.flat()) v *= scale;
        }
    }
    return s;
}

std::vector<PhaseState> sample(const CoherentStateSpec& spec, std::size_t count, std::uint64_t seed) {
    spec.validate();
    if (count < 1) throw ConfigError("sample: count must be >= 1");
    std::vector<PhaseState> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sample_one(spec, seed, i));
    return out;
}

}  // namespace bhtwa
