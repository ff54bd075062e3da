#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bhtwa/error.hpp"
#include "bhtwa/run.hpp"

using namespace bhtwa;

namespace {

const char* kMinimal = R"({"L": 10, "U/J": 0.1, "mu/J": 0.05, "preset": "single-site:3"})";

std::string error_of(std::string_view text) {
    try {
        parse_run_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("minimal document and defaults") {
    const auto cfg = parse_run_config(kMinimal);
    CHECK(cfg.params.L == 10);
    CHECK(cfg.params.J == doctest::Approx(2e-4));
    CHECK(cfg.params.U == doctest::Approx(2e-5));
    CHECK(cfg.params.mu == doctest::Approx(1e-5));
    CHECK(cfg.preset.kind == InitialConditionPreset::Kind::single_site);
    CHECK(cfg.preset.filled_sites == std::vector<std::size_t>{2});
    CHECK(cfg.sigma_P == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(cfg.integrator.step == doctest::Approx(0.1));
    CHECK(cfg.integrator.t_final == doctest::Approx(2e4));
    CHECK(cfg.vacuum_offset() == doctest::Approx(0.5));
    const auto spec = cfg.spec();
    CHECK(spec.mean_Q[2] == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("preset forms") {
    auto cfg = parse_run_config(R"({"L": 10, "U/J": 1, "preset": "multi-site:3,6,9"})");
    CHECK(cfg.preset.filled_sites == std::vector<std::size_t>{2, 5, 8});
    cfg = parse_run_config(
        R"({"L": 10, "U/J": 1, "preset": {"kind": "multi-site", "sites": [3, 5], "ratios": [1.4142135623730951, 1]}})");
    const auto occ = target_occupations(cfg.preset, 10);
    CHECK(occ[2] / occ[4] == doctest::Approx(std::sqrt(2.0)));
    cfg = parse_run_config(R"({"L": 8, "U/J": 1, "preset": {"kind": "uniform-random", "seed": 4}})");
    CHECK(cfg.preset.kind == InitialConditionPreset::Kind::uniform_random);
    CHECK(cfg.preset.seed == 4);
}

TEST_CASE("errors carry the JSON path") {
    CHECK(starts_with(error_of(R"({"U/J": 1, "preset": "single-site:1"})"), "$.L"));
    CHECK(starts_with(error_of(R"({"L": 1, "U/J": 1, "preset": "single-site:1"})"), "$.L"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": -1, "preset": "single-site:1"})"), "$.U/J"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": 1, "preset": "single-site:5"})"), "$.preset"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": 1, "preset": "blob:1"})"), "$.preset"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": 1, "preset": "single-site:1", "colour": 3})"), "$.colour"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": 1, "preset": "single-site:1", "ensemble": {"count": 1}})"),
                      "$.ensemble.count"));
    CHECK(starts_with(
        error_of(R"({"L": 4, "U/J": 1, "preset": "single-site:1", "ensemble": {"corrections": "both"}})"),
        "$.ensemble.corrections"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": 1, "preset": "single-site:1", "widths": {"sigma_P": 0}})"),
                      "$.widths.sigma_P"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": 1, "preset": "single-site:1",
                                   "integrator": {"step": 1.0, "t_final": 10.5}})"),
                      "$.integrator"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": 1, "preset": "single-site:1", "outputs": {"format": "xml"}})"),
                      "$.outputs.format"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": 1, "preset": "single-site:1",
                                   "chaos": {"spectrum_site": 9}})"),
                      "$.chaos.spectrum_site"));
    CHECK(starts_with(error_of(R"({"L": 4, "U/J": 1, "preset": "single-site:1",
                                   "integrator": {"step": 1.0, "t_final": 100, "output_stride": 1},
                                   "chaos": {"spectrum_site": 2}})"),
                      "$.chaos.spectrum_site"));
    CHECK(!error_of("{not json").empty());
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("content hash") {
    const auto a = parse_run_config(kMinimal);
    CHECK(content_hash(a) == content_hash(parse_run_config(kMinimal)));
    CHECK(content_hash(a).size() == 16);
    // key order and formatting do not matter
    const auto b = parse_run_config(R"({"preset":"single-site:3","mu/J":0.05,"U/J":0.1,"L":10})");
    CHECK(content_hash(a) == content_hash(b));
    auto c = a;
    c.ensemble.workers = 8;
    CHECK(content_hash(a) == content_hash(c));
    c.ensemble.seed = 99;
    CHECK(content_hash(a) != content_hash(c));
    const auto d = parse_run_config(R"({"L": 10, "U/J": 0.2, "mu/J": 0.05, "preset": "single-site:3"})");
    CHECK(content_hash(a) != content_hash(d));
    // the description is not an output-affecting field
    const auto e = parse_run_config(R"({"L": 10, "U/J": 0.1, "mu/J": 0.05, "preset": "single-site:3",
                                        "description": "x"})");
    CHECK(content_hash(a) == content_hash(e));
}

TEST_CASE("canonical json round trips") {
    const auto a = parse_run_config(R"({"L": 6, "U/J": 2, "mu/J": 0.1,
        "preset": {"kind": "multi-site", "sites": [2, 4], "ratios": [2, 1]},
        "integrator": {"step": 1.0, "t_final": 100, "output_stride": 5},
        "ensemble": {"count": 64, "seed": 3, "corrections": "langevin", "jump_stride": 4}})");
    const auto b = parse_run_config(canonical_json(a));
    CHECK(canonical_json(a) == canonical_json(b));
    CHECK(content_hash(a) == content_hash(b));
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("overrides") {
    const auto a = parse_run_config(kMinimal);
    RunOverrides o;
    o.seed = 17;
    o.corrections = Corrections::none;
    const auto b = apply_overrides(a, o);
    CHECK(b.ensemble.seed == 17);
    CHECK(b.ensemble.corrections == Corrections::none);
    CHECK(content_hash(a) != content_hash(b));
}

TEST_CASE("every recipe parses") {
    std::size_t runs = 0, sweeps = 0;
    for (const auto& entry : std::filesystem::directory_iterator(BHTWA_RECIPES)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        const auto text = slurp(entry.path());
        if (text.find("\"axis\"") != std::string::npos) {
            CHECK_NOTHROW(parse_sweep_spec(text));
            ++sweeps;
        } else {
            CHECK_NOTHROW(load_run_config(entry.path().string()));
            ++runs;
        }
    }
    CHECK(runs >= 10);
    CHECK(sweeps >= 2);
}
