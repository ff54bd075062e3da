#pragma once

// Gaussian (coherent-state) Wigner distribution and its direct sampling.

#include <cstdint>
#include <random>
#include <vector>

#include "bhtwa/model.hpp"

namespace bhtwa {

/// Centers and widths of the initial Gaussian. Widths are standard deviations
/// of each component, so an empty site carries a mean vacuum occupation of
/// (sigma_P^2 + sigma_Q^2) / 2.
struct CoherentStateSpec {
    std::vector<double> mean_P;
    std::vector<double> mean_Q;
    double sigma_P = 0.70710678118654752;
    double sigma_Q = 0.70710678118654752;
    /// Rescale every sample onto the number shell sum_j I_j = 1.
    bool renormalize_number = false;

    std::size_t sites() const noexcept { return mean_P.size(); }
    /// sum_j (mean_P_j^2 + mean_Q_j^2)/2 + L (sigma_P^2 + sigma_Q^2)/2
    double mean_total_number() const noexcept;
    void validate() const;
};

struct InitialConditionPreset {
    enum class Kind { single_site, multi_site, uniform_random };

    Kind kind = Kind::single_site;
    std::vector<std::size_t> filled_sites{2};  ///< 0-based
    std::vector<double> fill_ratios{1.0};      ///< one positive ratio per filled site
    double phase = 0.0;                        ///< phase of every wavepacket center
    std::uint64_t seed = 0;                    ///< drives the uniform-random fillings

    void validate(std::size_t L) const;
};

/// Target occupations I_n^0 of each site (they sum to 1).
std::vector<double> target_occupations(const InitialConditionPreset& preset, std::size_t L);

/// Places wavepacket centers with mean_P_n^2 + mean_Q_n^2 = 2 I_n^0 at the
/// preset phase (phase 0 puts the whole amplitude in Q).
CoherentStateSpec build_spec(const InitialConditionPreset& preset, const ChainParams& params);

/// Independent RNG stream for (seed, trajectory index, purpose). Streams do
/// not depend on how trajectories are partitioned across workers.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t purpose);

namespace stream_purpose {
inline constexpr std::uint64_t initial_state = 0;
inline constexpr std::uint64_t jumps = 1;
inline constexpr std::uint64_t preset = 2;
}  // namespace stream_purpose

/// Draws sample number `index` of the ensemble with the given seed.
PhaseState sample_one(const CoherentStateSpec& spec, std::uint64_t seed, std::uint64_t index);

/// Direct sampling of W_0 with uniform weights; sample i equals sample_one(spec, seed, i).
std::vector<PhaseState> sample(const CoherentStateSpec& spec, std::size_t count, std::uint64_t seed);

}  // namespace bhtwa
