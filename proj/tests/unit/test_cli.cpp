#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string output;
};

Result sh(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + BHTWA_CLI + " " + args + " 2>&1";
    Result r;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, p)) r.output += buf;
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

struct Scratch {
    fs::path dir = fs::temp_directory_path() / ("bhtwa_cli_" + std::to_string(std::random_device{}()));
    Scratch() { fs::create_directories(dir); }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return dir / name;
    }
};

const char* kTiny = R"({"L": 4, "U/J": 1.0, "preset": "single-site:1",
    "integrator": {"step": 1.0, "t_final": 100, "output_stride": 10}, "ensemble": {"count": 4}})";

}  // namespace

TEST_CASE("validate succeeds") {
    const auto r = sh("validate");
    CHECK(r.code == 0);
    CHECK(r.output.find("FAIL") == std::string::npos);
    CHECK(r.output.find("kernel R^4") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(sh("").code == 2);
    CHECK(sh("frobnicate").code == 2);
    CHECK(sh("run").code == 2);
    CHECK(sh("run --config /nonexistent.json").code == 2);
    Scratch s;
    const auto cfg = s.write("tiny.json", kTiny);
    CHECK(sh("run --config " + cfg.string() + " --corrections maybe").code == 2);
    CHECK(sh("run --config " + cfg.string() + " --workers 0 --out " + (s.dir / "w").string()).code == 2);
    CHECK(sh("plot --out " + s.dir.string() + " --kind pie").code == 2);
}

TEST_CASE("invalid configuration exits with 2 and names the field") {
    Scratch s;
    const auto cfg = s.write("bad.json", R"({"L": 4, "U/J": 1.0, "preset": "single-site:9"})");
    const auto r = sh("run --config " + cfg.string() + " --out " + (s.dir / "out").string());
    CHECK(r.code == 2);
    CHECK(r.output.find("$.preset") != std::string::npos);
}

TEST_CASE("numerical failure exits with 3") {
    Scratch s;
    const auto cfg = s.write("drift.json", R"({"L": 4, "U/J": 10.0, "preset": "single-site:1",
        "integrator": {"step": 1.0, "t_final": 1000, "output_stride": 10, "conservation_tol": 1e-300},
        "ensemble": {"count": 2}})");
    const auto out = s.dir / "out";
    CHECK(sh("run --config " + cfg.string() + " --out " + out.string()).code == 3);
    std::ifstream m(out / "manifest.json");
    std::string text((std::istreambuf_iterator<char>(m)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"failed\"") != std::string::npos);
}

TEST_CASE("run, rerun, plot") {
    Scratch s;
    const auto cfg = s.write("tiny.json", kTiny);
    const auto out = s.dir / "out";
    auto r = sh("run --config " + cfg.string() + " --out " + out.string() + " --seed 4 --corrections none");
    CHECK(r.code == 0);
    CHECK(r.output.rfind("complete", 0) == 0);
    r = sh("run --config " + cfg.string() + " --out " + out.string() + " --seed 4 --corrections none --workers 2");
    CHECK(r.code == 0);
    CHECK(r.output.rfind("up-to-date", 0) == 0);
    CHECK(sh("plot --out " + out.string()).code == 0);
    CHECK(fs::exists(out / "plots"));
}

TEST_CASE("output root and workers come from the environment") {
    Scratch s;
    const auto cfg = s.write("tiny.json", kTiny);
    const auto root = s.dir / "root";
    const auto r = sh("run --config " + cfg.string(), "BHTWA_OUT_ROOT=" + root.string() + " BHTWA_WORKERS=2");
    CHECK(r.code == 0);
    bool found = false;
    for (const auto& e : fs::directory_iterator(root)) found = found || e.path().filename().string().rfind("tiny-", 0) == 0;
    CHECK(found);
    CHECK(sh("run --config " + cfg.string(), "BHTWA_OUT_ROOT=" + root.string() + " BHTWA_WORKERS=x").code == 2);
}

TEST_CASE("sweep") {
    Scratch s;
    const auto spec = s.write("sw.json", std::string(R"({"base": )") + kTiny +
                                             R"(, "axis": {"name": "L", "values": [3, 4]}})");
    const auto r = sh("sweep --config " + spec.string() + " --out " + (s.dir / "sw").string());
    CHECK(r.code == 0);
    CHECK(fs::exists(s.dir / "sw/aggregate.csv"));
    CHECK(fs::exists(s.dir / "sw/points/L=3"));
}

TEST_CASE("oracle on the shipped recipe") {
    const auto r = sh(std::string("oracle --config ") + BHTWA_RECIPES + "/oracle_single_site.json");
    CHECK(r.code == 0);
    CHECK(r.output.find("FAIL") == std::string::npos);
    CHECK(r.output.find("l=2") != std::string::npos);
    // multi-site presets are rejected
    CHECK(sh(std::string("oracle --config ") + BHTWA_RECIPES + "/three_sites.json").code == 2);
}
