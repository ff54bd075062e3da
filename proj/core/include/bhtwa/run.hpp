#pragma once

// Run persistence, sweeps, plots and self-checks behind the bhtwa command line.
//
// Run directory layout:
//   manifest.json          configuration, content hash, status, timings
//   moments.csv            t,m,n,classical,jump_corr,D
//   summary.json           final-time digest keyed by the content hash
//   fits.json, fits.md     exponent fits with targets and verdicts
//   observables/*.csv      ctd, mixing entropy, occupations, dispersions, ...
//   chaos/*.csv            ftle, spectrum, sff, alpha (when enabled)
//   trajectories/          optional per-trajectory dumps

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bhtwa/config.hpp"

namespace bhtwa {

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<Corrections> corrections;
};

/// Applies command-line overrides to a parsed configuration.
RunConfig apply_overrides(RunConfig cfg, const RunOverrides& o);

struct RunOutcome {
    std::filesystem::path dir;
    std::string hash;
    bool skipped = false;  ///< directory already held a completed run with this hash
};

/// Output root: BHTWA_OUT_ROOT if set, else ./runs.
std::filesystem::path default_output_root();
/// Worker count: BHTWA_WORKERS if set, else 1.
std::size_t default_workers();

/// sample -> evolve ensemble -> observables -> fits, written under `dir`.
/// A completed run with the same hash is left untouched. Integration
/// failures mark the manifest "failed", keep partial outputs and rethrow.
RunOutcome cmd_run(const RunConfig& cfg, const std::filesystem::path& dir, std::size_t workers = 1);

struct SweepSpec {
    std::string axis;             ///< "U/J" or "L"
    std::vector<double> values;
    std::string base_json;        ///< base configuration document
    std::vector<std::string> point_overrides;  ///< optional merge patch per point, "" for none
};

/// {"base": {...}, "axis": {"name": "U/J", "values": [...]}, "overrides": {"<value>": {...}}}
SweepSpec parse_sweep_spec(std::string_view json_text);

struct SweepPointStatus {
    double value = 0.0;
    std::string dir;
    std::string hash;
    std::string status;  ///< complete | skipped | failed
    std::string error;
};

struct SweepOutcome {
    std::filesystem::path dir;
    std::vector<SweepPointStatus> points;
};

/// Runs every point (resumable: completed points are skipped by hash) with up
/// to `workers` concurrent points, then aggregates from per-point CSVs into
/// aggregate.csv and aggregate.md.
SweepOutcome cmd_sweep(const SweepSpec& spec, const std::filesystem::path& dir, std::size_t workers = 1);

/// Columns of aggregate.csv.
struct SweepRow {
    double value = 0.0;
    double var_t_dispersion = 0.0;
    double var_t_occupation = 0.0;
    double ftle_positive_sum = 0.0;
    double crossover_time = 0.0;  ///< 0 when not found
};
std::vector<SweepRow> aggregate_sweep(const std::filesystem::path& dir, const std::vector<SweepPointStatus>& points);

enum class PlotKind { dispersion, heatmap, spectrum, entropy, all };
PlotKind plot_kind_from_string(const std::string& s);

struct PlotReport {
    std::vector<std::string> written;
    std::vector<std::string> missing;
};

/// Writes SVG figures under dir/plots. Missing series are listed and skipped;
/// a directory without run outputs gets plots/EMPTY_REPORT.txt.
PlotReport cmd_plot(const std::filesystem::path& dir, PlotKind kind);

struct CheckLine {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool gating = true;  ///< informational lines never fail a command
};

/// Jump-kernel quadratures and small numerical self-checks.
std::vector<CheckLine> cmd_validate();

/// Early-time oracle for the configuration's chain and single-site preset.
/// Gating lines: seeding 1e-8, l = 1, 2 and the filled site. The scan over
/// seeding 1e-6 and 1e-10 and the l = 3 fits are informational.
std::vector<CheckLine> cmd_oracle(const RunConfig& cfg);

}  // namespace bhtwa
