#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bhtwa/error.hpp"
#include "bhtwa/run.hpp"
#include "helpers.hpp"

using namespace bhtwa;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({"L": 5, "U/J": 1.0, "mu/J": 0.05, "preset": "single-site:2",
    "integrator": {"step": 1.0, "t_final": 2000, "output_stride": 5},
    "ensemble": {"count": 16, "seed": 2, "corrections": "integrated"},
    "chaos": {"ftle_count": 2, "sff_count": 16, "alpha_trajectories": 2, "spectrum_site": 1},
    "outputs": {"trajectories": 2}})";

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("run writes the documented layout and skips a finished rerun") {
    testutil::TempDir tmp("run");
    const auto cfg = parse_run_config(kSmall);
    const auto dir = tmp.path / "r";
    const auto first = cmd_run(cfg, dir);
    CHECK_FALSE(first.skipped);
    CHECK(first.hash == content_hash(cfg));
    for (const char* f : {"manifest.json", "moments.csv", "summary.json", "fits.json", "fits.md",
                          "observables/ctd.csv", "observables/mixing_entropy.csv", "observables/occupation.csv",
                          "observables/temporal_variance.csv", "chaos/ftle.csv", "chaos/sff.csv", "chaos/spectrum.csv",
                          "chaos/alpha.csv", "trajectories/traj_00000.csv", "trajectories/traj_00001.csv"})
        CHECK_MESSAGE(fs::exists(dir / f), f);

    const auto manifest = read_json(dir / "manifest.json");
    CHECK(manifest.at("status") == "complete");
    CHECK(manifest.at("hash") == first.hash);
    CHECK(manifest.at("mean_total_number").get<double>() == doctest::Approx(1.0 + 5 * 0.5));
    CHECK(read_json(dir / "summary.json").contains(first.hash));

    const auto stamp = fs::last_write_time(dir / "moments.csv");
    const auto second = cmd_run(cfg, dir);
    CHECK(second.skipped);
    CHECK(fs::last_write_time(dir / "moments.csv") == stamp);

    // a different configuration in the same directory is recomputed
    RunOverrides o;
    o.seed = 3;
    const auto third = cmd_run(apply_overrides(cfg, o), dir);
    CHECK_FALSE(third.skipped);
    CHECK(third.hash != first.hash);
}

TEST_CASE("moments on disk agree with the in-memory ensemble") {
    testutil::TempDir tmp("moments");
    const auto cfg = parse_run_config(R"({"L": 4, "U/J": 2.0, "preset": "single-site:1",
        "integrator": {"step": 1.0, "t_final": 200, "output_stride": 20},
        "ensemble": {"count": 8, "seed": 5}})");
    cmd_run(cfg, tmp.path);
    const auto ms = run_ensemble(cfg.spec(), cfg.params, cfg.integrator, cfg.ensemble);
    std::ifstream in(tmp.path / "moments.csv");
    const auto rows = read_moments_csv(in);
    REQUIRE(rows.size() == ms.size() * 10);
    for (const auto& r : rows) {
        const auto m = static_cast<std::size_t>(std::llround(r.t / 20.0));
        CHECK(r.D == doctest::Approx(ms.D(m, r.m - 1, r.n - 1)).epsilon(1e-12));
    }
}

TEST_CASE("worker count does not change the outputs") {
    testutil::TempDir tmp("workers");
    const auto cfg = parse_run_config(R"({"L": 4, "U/J": 2.0, "preset": "single-site:1",
        "integrator": {"step": 1.0, "t_final": 200, "output_stride": 20},
        "ensemble": {"count": 130, "seed": 5}})");
    cmd_run(cfg, tmp.path / "a", 1);
    cmd_run(cfg, tmp.path / "b", 3);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(tmp.path / "a/moments.csv") == slurp(tmp.path / "b/moments.csv"));
}

TEST_CASE("plots") {
    testutil::TempDir tmp("plot");
    SUBCASE("empty directory gets a report") {
        const auto rep = cmd_plot(tmp.path, PlotKind::all);
        CHECK(rep.written.empty());
        CHECK(fs::exists(tmp.path / "plots/EMPTY_REPORT.txt"));
    }
    SUBCASE("finished run") {
        cmd_run(parse_run_config(kSmall), tmp.path);
        const auto rep = cmd_plot(tmp.path, PlotKind::all);
        CHECK(rep.written.size() >= 3);
        for (const auto& f : rep.written) CHECK(fs::file_size(tmp.path / f) > 0);
    }
    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(plot_kind_from_string("pie"), ConfigError);
        std::ofstream(tmp.path / "file.txt") << "x";
        CHECK_THROWS_AS(cmd_plot(tmp.path / "file.txt", PlotKind::all), ConfigError);
    }
}

TEST_CASE("sweep specification") {
    const std::string base = R"("base": {"L": 4, "U/J": 1, "preset": "single-site:1",
        "integrator": {"step": 1.0, "t_final": 100, "output_stride": 10}, "ensemble": {"count": 4}})";
    const auto ok = parse_sweep_spec("{" + base + R"(, "axis": {"name": "U/J", "values": [0.5, 2]},
        "overrides": {"2": {"ensemble": {"count": 8}}}})");
    CHECK(ok.axis == "U/J");
    CHECK(ok.values == std::vector<double>{0.5, 2});
    CHECK(ok.point_overrides[0].empty());
    CHECK_FALSE(ok.point_overrides[1].empty());
    CHECK_THROWS_AS(parse_sweep_spec("{" + base + R"(, "axis": {"name": "U/J", "values": []}})"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_spec("{" + base + R"(, "axis": {"name": "U/J", "values": [1, 1]}})"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_spec("{" + base + R"(, "axis": {"name": "J", "values": [1]}})"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_spec("{" + base + R"(, "axis": {"name": "U/J", "values": [1]},
        "overrides": {"3": {}}})"), ConfigError);
    // every point is validated before anything runs
    CHECK_THROWS_AS(parse_sweep_spec("{" + base + R"(, "axis": {"name": "L", "values": [1]}})"), ConfigError);
}

TEST_CASE("sweep runs, resumes and aggregates") {
    testutil::TempDir tmp("sweep");
    const auto spec = parse_sweep_spec(R"({"base": {"L": 4, "U/J": 1, "preset": "single-site:1",
        "integrator": {"step": 1.0, "t_final": 200, "output_stride": 10}, "ensemble": {"count": 4}},
        "axis": {"name": "U/J", "values": [0.5, 2]}})");
    const auto out = cmd_sweep(spec, tmp.path, 2);
    REQUIRE(out.points.size() == 2);
    for (const auto& p : out.points) CHECK(p.status == "complete");
    CHECK(fs::exists(tmp.path / "aggregate.csv"));
    CHECK(fs::exists(tmp.path / "sweep_status.json"));
    const auto rows = aggregate_sweep(tmp.path, out.points);
    CHECK(rows.size() == 2);
    CHECK(rows[0].value == 0.5);
    const auto again = cmd_sweep(spec, tmp.path, 1);
    for (const auto& p : again.points) CHECK(p.status == "skipped");
}

TEST_CASE("environment defaults") {
    ::unsetenv("BHTWA_WORKERS");
    CHECK(default_workers() == 1);
    ::setenv("BHTWA_WORKERS", "3", 1);
    CHECK(default_workers() == 3);
    ::setenv("BHTWA_WORKERS", "lots", 1);
    CHECK_THROWS_AS(default_workers(), ConfigError);
    ::unsetenv("BHTWA_WORKERS");
    ::setenv("BHTWA_OUT_ROOT", "/tmp/somewhere", 1);
    CHECK(default_output_root() == fs::path("/tmp/somewhere"));
    ::unsetenv("BHTWA_OUT_ROOT");
    CHECK(default_output_root() == fs::path("runs"));
}
