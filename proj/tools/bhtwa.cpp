// bhtwa: command-line front end.
//
//   bhtwa run      --config run.json [--out DIR] [--seed N] [--workers N] [--corrections MODE]
//   bhtwa sweep    --config sweep.json [--out DIR] [--workers N]
//   bhtwa plot     --out DIR [--kind dispersion|heatmap|spectrum|entropy|all]
//   bhtwa validate
//   bhtwa oracle   --config run.json
//
// Exit codes: 0 success, 2 invalid input or failed check, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bhtwa/error.hpp"
#include "bhtwa/run.hpp"

namespace fs = std::filesystem;
using namespace bhtwa;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kNumeric = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int print_checks(const std::vector<CheckLine>& lines) {
    bool all = true;
    for (const auto& c : lines) {
        const char* tag = !c.gating ? (c.pass ? "info" : "INFO") : c.pass ? "PASS" : "FAIL";
        std::printf("%s  %-44s value=% .6e expected=% .6e tol=%.3g\n", tag, c.name.c_str(), c.value, c.expected,
                    c.tolerance);
        if (c.gating) all = all && c.pass;
    }
    return all ? kOk : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiclassical Bose-Hubbard chain dynamics (truncated Wigner with jump corrections)"};
    app.require_subcommand(1);

    std::string config, out, corrections, kind = "all";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;

    auto* run = app.add_subcommand("run", "simulate one configuration");
    run->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory (default: $BHTWA_OUT_ROOT or ./runs, then <name>-<hash>)");
    run->add_option("--seed", seed, "master seed");
    run->add_option("--workers", workers, "worker threads (default: $BHTWA_WORKERS or 1)");
    run->add_option("--corrections", corrections, "jump corrections")
        ->check(CLI::IsMember({"none", "integrated", "langevin"}));

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep and aggregate it");
    sweep->add_option("--config", config, "sweep specification (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out, "sweep directory");
    sweep->add_option("--workers", workers, "concurrent workers");

    auto* plot = app.add_subcommand("plot", "write SVG figures for a run directory");
    plot->add_option("--out", out, "run directory")->required();
    plot->add_option("--kind", kind, "figure")->check(CLI::IsMember({"dispersion", "heatmap", "spectrum", "entropy", "all"}));

    auto* validate = app.add_subcommand("validate", "jump-kernel quadratures and numerical self-checks");

    auto* oracle = app.add_subcommand("oracle", "early-time power-law oracle for a single-site configuration");
    oracle->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    try {
        auto nworkers_or_default = [&] {
            const std::size_t n = workers ? *workers : default_workers();
            if (n == 0) throw ConfigError("--workers must be >= 1");
            return n;
        };

        if (*run) {
            const std::size_t nworkers = nworkers_or_default();
            RunOverrides o;
            o.seed = seed;
            o.workers = nworkers;
            if (!corrections.empty()) o.corrections = corrections_from_string(corrections);
            const RunConfig cfg = apply_overrides(load_run_config(config), o);
            const fs::path dir = out.empty() ? default_output_root() / (fs::path(config).stem().string() + "-" +
                                                                        content_hash(cfg).substr(0, 8))
                                             : fs::path(out);
            const auto r = cmd_run(cfg, dir, nworkers);
            std::printf("%s %s hash=%s\n", r.skipped ? "up-to-date" : "complete", r.dir.string().c_str(),
                        r.hash.c_str());
            return kOk;
        }
        if (*sweep) {
            const std::size_t nworkers = nworkers_or_default();
            const auto spec = parse_sweep_spec(read_file(config));
            const fs::path dir = out.empty() ? default_output_root() / fs::path(config).stem() : fs::path(out);
            const auto r = cmd_sweep(spec, dir, nworkers);
            int failed = 0;
            for (const auto& p : r.points) {
                std::printf("%-8s %s=%g %s%s%s\n", p.status.c_str(), spec.axis.c_str(), p.value, p.dir.c_str(),
                            p.error.empty() ? "" : "  ", p.error.c_str());
                failed += p.status == "failed";
            }
            std::printf("aggregate: %s\n", (dir / "aggregate.csv").string().c_str());
            return failed ? kNumeric : kOk;
        }
        if (*plot) {
            const auto rep = cmd_plot(out, plot_kind_from_string(kind));
            for (const auto& w : rep.written) std::printf("written %s\n", w.c_str());
            for (const auto& m : rep.missing) std::printf("missing %s\n", m.c_str());
            return kOk;
        }
        if (*validate) return print_checks(cmd_validate());
        if (*oracle) return print_checks(cmd_oracle(load_run_config(config)));
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInvalid;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInvalid;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kNumeric;
    }
    return kOk;
}
