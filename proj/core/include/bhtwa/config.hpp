#pragma once

// Run configuration: a single JSON document validated against a fixed
// schema. Errors carry the JSON path of the offending field.
//
// Minimal document:
//   {"L": 10, "U/J": 0.1, "mu/J": 0.05, "preset": "single-site:3"}
//
// Sites are 1-based in configuration files.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "bhtwa/analysis.hpp"
#include "bhtwa/chaos.hpp"
#include "bhtwa/ensemble.hpp"
#include "bhtwa/integrate.hpp"
#include "bhtwa/model.hpp"
#include "bhtwa/wigner.hpp"

namespace bhtwa {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct AnalysisConfig {
    std::array<double, 2> fit_window{kEarlyWindowLo, kEarlyWindowHi};
    std::array<double, 2> late_window{0.0, 0.0};  ///< {0, 0}: last decade of the grid
    CrossoverOptions crossover;
    bool vacuum_offset_auto = true;  ///< subtract (sigma_P^2 + sigma_Q^2)/2 from <I_n>
    double vacuum_offset = 0.0;      ///< used when vacuum_offset_auto is false
    double variance_t_final = 0.0;   ///< 0: end of the grid
};

struct ChaosConfig {
    std::size_t ftle_count = 0;
    std::size_t ftle_renorm_stride = 10;
    std::size_t spectrum_site = 0;    ///< 1-based, 0 disables
    Window window = Window::hann;
    std::size_t sff_count = 0;
    std::size_t alpha_trajectories = 0;
};

struct OutputConfig {
    std::size_t trajectories = 0;  ///< number of individual trajectories to dump
    bool binary = false;
};

struct RunConfig {
    double u_over_j = 0.1;
    double mu_over_j = 0.0;
    ChainParams params;
    InitialConditionPreset preset;
    double sigma_P = 0.70710678118654752;
    double sigma_Q = 0.70710678118654752;
    bool renormalize_number = false;
    IntegratorConfig integrator;
    EnsembleOptions ensemble;
    AnalysisConfig analysis;
    ChaosConfig chaos;
    OutputConfig outputs;

    CoherentStateSpec spec() const;
    double vacuum_offset() const;
};

/// Parses and validates a configuration document. Throws ConfigError whose
/// message starts with the JSON path of the first offending field.
RunConfig parse_run_config(std::string_view json_text);

RunConfig load_run_config(const std::string& path);

/// Canonical JSON of every output-affecting field (sorted keys, full
/// precision). Worker count is excluded.
std::string canonical_json(const RunConfig& cfg);

/// FNV-1a 64 over the canonical JSON and the artifact version, as 16 hex digits.
std::string content_hash(const RunConfig& cfg);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace bhtwa
