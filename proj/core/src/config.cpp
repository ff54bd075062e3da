#include "bhtwa/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "bhtwa/error.hpp"

namespace bhtwa {

using nlohmann::json;

CoherentStateSpec RunConfig::spec() const {
    auto s = build_spec(preset, params);
    s.sigma_P = sigma_P;
    s.sigma_Q = sigma_Q;
    s.renormalize_number = renormalize_number;
    return s;
}

double RunConfig::vacuum_offset() const {
    return analysis.vacuum_offset_auto ? 0.5 * (sigma_P * sigma_P + sigma_Q * sigma_Q) : analysis.vacuum_offset;
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path + "." + key; }

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || it.key() == k;
        if (!ok) fail(join(path, it.key()), "unknown field");
    }
}

double number(const json& j, const std::string& path, const char* key, double def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_number()) fail(join(path, key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(join(path, key), "must be finite");
    return d;
}

double required_number(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(join(path, key), "required field is missing");
    return number(j, path, key, 0.0);
}

std::uint64_t unsigned_int(const json& j, const std::string& path, const char* key, std::uint64_t def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(join(path, key), "expected a nonnegative integer");
}

bool boolean(const json& j, const std::string& path, const char* key, bool def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_boolean()) fail(join(path, key), "expected true or false");
    return j.at(key).get<bool>();
}

std::string string(const json& j, const std::string& path, const char* key, const std::string& def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_string()) fail(join(path, key), "expected a string");
    return j.at(key).get<std::string>();
}

std::array<double, 2> window(const json& j, const std::string& path, const char* key, std::array<double, 2> def,
                             bool allow_auto = false) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(join(path, key), "expected [t_lo, t_hi]");
    std::array<double, 2> w{v[0].get<double>(), v[1].get<double>()};
    if (allow_auto && w[0] == 0.0 && w[1] == 0.0) return w;
    if (!(w[0] >= 0.0 && w[0] < w[1])) fail(join(path, key), "window must satisfy 0 <= t_lo < t_hi");
    return w;
}

std::vector<std::size_t> parse_site_list(const std::string& text, const std::string& path) {
    std::vector<std::size_t> sites;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t pos = 0;
            const long v = std::stol(tok, &pos);
            if (pos != tok.size() || v < 1) throw std::invalid_argument(tok);
            sites.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            fail(path, "bad site number '" + tok + "'");
        }
    }
    return sites;
}

InitialConditionPreset::Kind preset_kind(const std::string& s, const std::string& path) {
    if (s == "single-site") return InitialConditionPreset::Kind::single_site;
    if (s == "multi-site") return InitialConditionPreset::Kind::multi_site;
    if (s == "uniform-random") return InitialConditionPreset::Kind::uniform_random;
    fail(path, "unknown preset kind '" + s + "' (single-site|multi-site|uniform-random)");
}

const char* preset_kind_name(InitialConditionPreset::Kind k) {
    switch (k) {
        case InitialConditionPreset::Kind::single_site: return "single-site";
        case InitialConditionPreset::Kind::multi_site: return "multi-site";
        case InitialConditionPreset::Kind::uniform_random: return "uniform-random";
    }
    return "single-site";
}

InitialConditionPreset parse_preset(const json& j, const std::string& path, std::size_t L) {
    InitialConditionPreset p;
    std::vector<std::size_t> sites;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        const auto colon = s.find(':');
        p.kind = preset_kind(s.substr(0, colon), path);
        if (colon != std::string::npos) sites = parse_site_list(s.substr(colon + 1), path);
        p.fill_ratios.assign(sites.size(), 1.0);
    } else {
        require_object(j, path);
        check_keys(j, path, {"kind", "sites", "ratios", "phase", "seed"});
        p.kind = preset_kind(string(j, path, "kind", "single-site"), join(path, "kind"));
        if (j.contains("sites")) {
            const auto& v = j.at("sites");
            if (!v.is_array()) fail(join(path, "sites"), "expected an array of site numbers");
            for (std::size_t i = 0; i < v.size(); ++i) {
                const auto ip = join(path, "sites") + "[" + std::to_string(i) + "]";
                if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 1) fail(ip, "expected a site number >= 1");
                sites.push_back(static_cast<std::size_t>(v[i].get<std::int64_t>()));
            }
        } else if (p.kind == InitialConditionPreset::Kind::single_site) {
            sites = {3};
        }
        if (j.contains("ratios")) {
            const auto& v = j.at("ratios");
            if (!v.is_array()) fail(join(path, "ratios"), "expected an array of positive numbers");
            p.fill_ratios.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number()) fail(join(path, "ratios") + "[" + std::to_string(i) + "]", "expected a number");
                p.fill_ratios.push_back(v[i].get<double>());
            }
        } else {
            p.fill_ratios.assign(sites.size(), 1.0);
        }
        p.phase = number(j, path, "phase", 0.0);
        p.seed = unsigned_int(j, path, "seed", 0);
    }
    if (p.kind == InitialConditionPreset::Kind::single_site && sites.size() != 1)
        fail(path, "single-site preset needs exactly one site");
    if (p.kind != InitialConditionPreset::Kind::uniform_random && sites.empty())
        fail(path, "preset needs at least one filled site");
    p.filled_sites.clear();
    for (std::size_t s : sites) {
        if (s > L) fail(path, "site " + std::to_string(s) + " outside 1.." + std::to_string(L));
        p.filled_sites.push_back(s - 1);
    }
    try {
        p.validate(L);
    } catch (const ConfigError& e) {
        fail(path, e.what());
    }
    return p;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("$: not valid JSON: ") + e.what());
    }
    const std::string P = "$";
    require_object(root, P);
    check_keys(root, P,
               {"L", "U/J", "mu/J", "c", "hbar_eff", "preset", "widths", "integrator", "ensemble", "analysis", "chaos",
                "outputs", "description"});

    RunConfig cfg;
    if (!root.contains("L")) fail("$.L", "required field is missing");
    if (!root.at("L").is_number_integer()) fail("$.L", "expected an integer");
    const auto L = root.at("L").get<std::int64_t>();
    if (L < 2) fail("$.L", "chain needs L >= 2, got " + std::to_string(L));
    cfg.u_over_j = required_number(root, P, "U/J");
    if (cfg.u_over_j < 0.0) fail("$.U/J", "must be >= 0");
    cfg.mu_over_j = number(root, P, "mu/J", 0.0);
    const double c = number(root, P, "c", 2e-4);
    if (!(c > 0.0)) fail("$.c", "must be > 0");
    const double hbar = number(root, P, "hbar_eff", 1.0);
    if (!(hbar > 0.0)) fail("$.hbar_eff", "must be > 0");
    cfg.params = ChainParams::from_ratios(static_cast<std::size_t>(L), cfg.u_over_j, cfg.mu_over_j, c, hbar);

    if (root.contains("preset"))
        cfg.preset = parse_preset(root.at("preset"), "$.preset", cfg.params.L);
    else
        cfg.preset = parse_preset(json("single-site:3"), "$.preset", cfg.params.L);

    if (root.contains("widths")) {
        const auto& w = root.at("widths");
        const std::string p = "$.widths";
        require_object(w, p);
        check_keys(w, p, {"sigma_P", "sigma_Q", "renormalize_number"});
        cfg.sigma_P = number(w, p, "sigma_P", cfg.sigma_P);
        cfg.sigma_Q = number(w, p, "sigma_Q", cfg.sigma_Q);
        if (!(cfg.sigma_P > 0.0)) fail(join(p, "sigma_P"), "must be > 0");
        if (!(cfg.sigma_Q > 0.0)) fail(join(p, "sigma_Q"), "must be > 0");
        cfg.renormalize_number = boolean(w, p, "renormalize_number", false);
    }

    if (root.contains("integrator")) {
        const auto& g = root.at("integrator");
        const std::string p = "$.integrator";
        require_object(g, p);
        check_keys(g, p, {"step", "t_final", "output_stride", "conservation_tol", "ordering"});
        auto& ic = cfg.integrator;
        ic.step = number(g, p, "step", ic.step);
        ic.t_final = number(g, p, "t_final", ic.t_final);
        ic.output_stride = unsigned_int(g, p, "output_stride", ic.output_stride);
        ic.conservation_tol = number(g, p, "conservation_tol", ic.conservation_tol);
        const auto o = string(g, p, "ordering", "wigner");
        if (o == "wigner")
            ic.ordering = Ordering::wigner;
        else if (o == "classical")
            ic.ordering = Ordering::classical;
        else
            fail(join(p, "ordering"), "expected wigner or classical");
    }
    try {
        cfg.integrator.validate();
    } catch (const ConfigError& e) {
        fail("$.integrator", e.what());
    }

    if (root.contains("ensemble")) {
        const auto& e = root.at("ensemble");
        const std::string p = "$.ensemble";
        require_object(e, p);
        check_keys(e, p, {"count", "seed", "corrections", "jump_stride", "block_size"});
        auto& en = cfg.ensemble;
        en.count = unsigned_int(e, p, "count", en.count);
        en.seed = unsigned_int(e, p, "seed", en.seed);
        try {
            en.corrections = corrections_from_string(string(e, p, "corrections", "integrated"));
        } catch (const ConfigError& ex) {
            fail(join(p, "corrections"), ex.what());
        }
        en.jump_stride = unsigned_int(e, p, "jump_stride", en.jump_stride);
        en.block_size = unsigned_int(e, p, "block_size", en.block_size);
    }
    if (cfg.ensemble.count < 2) fail("$.ensemble.count", "must be >= 2");
    if (cfg.ensemble.jump_stride < 1) fail("$.ensemble.jump_stride", "must be >= 1");
    if (cfg.ensemble.block_size < 1) fail("$.ensemble.block_size", "must be >= 1");

    if (root.contains("analysis")) {
        const auto& a = root.at("analysis");
        const std::string p = "$.analysis";
        require_object(a, p);
        check_keys(a, p, {"fit_window", "late_window", "crossover", "vacuum_offset", "variance_t_final"});
        auto& an = cfg.analysis;
        an.fit_window = window(a, p, "fit_window", an.fit_window);
        an.late_window = window(a, p, "late_window", an.late_window, true);
        if (a.contains("crossover")) {
            const auto& c2 = a.at("crossover");
            const auto cp = join(p, "crossover");
            require_object(c2, cp);
            check_keys(c2, cp, {"window_decades", "tolerance", "stable_decades"});
            an.crossover.window_decades = number(c2, cp, "window_decades", an.crossover.window_decades);
            an.crossover.tolerance = number(c2, cp, "tolerance", an.crossover.tolerance);
            an.crossover.stable_decades = number(c2, cp, "stable_decades", an.crossover.stable_decades);
            if (!(an.crossover.window_decades > 0.0)) fail(join(cp, "window_decades"), "must be > 0");
            if (!(an.crossover.tolerance > 0.0)) fail(join(cp, "tolerance"), "must be > 0");
            if (!(an.crossover.stable_decades > 0.0)) fail(join(cp, "stable_decades"), "must be > 0");
        }
        if (a.contains("vacuum_offset")) {
            const auto& v = a.at("vacuum_offset");
            if (v.is_string() && v.get<std::string>() == "auto") {
                an.vacuum_offset_auto = true;
            } else if (v.is_number()) {
                an.vacuum_offset_auto = false;
                an.vacuum_offset = v.get<double>();
            } else {
                fail(join(p, "vacuum_offset"), "expected \"auto\" or a number");
            }
        }
        an.variance_t_final = number(a, p, "variance_t_final", 0.0);
        if (an.variance_t_final < 0.0 || an.variance_t_final > cfg.integrator.t_final)
            fail(join(p, "variance_t_final"), "must lie in [0, t_final]");
    }

    if (root.contains("chaos")) {
        const auto& c2 = root.at("chaos");
        const std::string p = "$.chaos";
        require_object(c2, p);
        check_keys(c2, p, {"ftle_count", "ftle_renorm_stride", "spectrum_site", "window", "sff_count",
                           "alpha_trajectories"});
        auto& ch = cfg.chaos;
        ch.ftle_count = unsigned_int(c2, p, "ftle_count", 0);
        ch.ftle_renorm_stride = unsigned_int(c2, p, "ftle_renorm_stride", 10);
        if (ch.ftle_renorm_stride < 1) fail(join(p, "ftle_renorm_stride"), "must be >= 1");
        ch.spectrum_site = unsigned_int(c2, p, "spectrum_site", 0);
        if (ch.spectrum_site > cfg.params.L) fail(join(p, "spectrum_site"), "outside the chain");
        if (ch.spectrum_site > 0) {
            const double samples = cfg.integrator.t_final / (cfg.integrator.step * cfg.integrator.output_stride) + 1;
            if (samples < 256) fail(join(p, "spectrum_site"), "spectrum needs at least 256 stored samples");
        }
        const auto w = string(c2, p, "window", "hann");
        if (w == "hann")
            ch.window = Window::hann;
        else if (w == "none")
            ch.window = Window::none;
        else
            fail(join(p, "window"), "expected hann or none");
        ch.sff_count = unsigned_int(c2, p, "sff_count", 0);
        if (ch.sff_count == 1) fail(join(p, "sff_count"), "must be 0 or >= 2");
        ch.alpha_trajectories = unsigned_int(c2, p, "alpha_trajectories", 0);
        if (ch.alpha_trajectories > cfg.ensemble.count) fail(join(p, "alpha_trajectories"), "exceeds ensemble count");
    }

    if (root.contains("outputs")) {
        const auto& o = root.at("outputs");
        const std::string p = "$.outputs";
        require_object(o, p);
        check_keys(o, p, {"trajectories", "format"});
        cfg.outputs.trajectories = unsigned_int(o, p, "trajectories", 0);
        if (cfg.outputs.trajectories > cfg.ensemble.count) fail(join(p, "trajectories"), "exceeds ensemble count");
        const auto f = string(o, p, "format", "csv");
        if (f == "csv")
            cfg.outputs.binary = false;
        else if (f == "binary")
            cfg.outputs.binary = true;
        else
            fail(join(p, "format"), "expected csv or binary");
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string canonical_json(const RunConfig& cfg) {
    json j;
    j["L"] = cfg.params.L;
    j["U/J"] = cfg.u_over_j;
    j["mu/J"] = cfg.mu_over_j;
    j["c"] = cfg.params.c;
    j["hbar_eff"] = cfg.params.hbar_eff;
    json pr;
    pr["kind"] = preset_kind_name(cfg.preset.kind);
    json sites = json::array();
    for (std::size_t s : cfg.preset.filled_sites) sites.push_back(s + 1);
    pr["sites"] = sites;
    pr["ratios"] = cfg.preset.fill_ratios;
    pr["phase"] = cfg.preset.phase;
    pr["seed"] = cfg.preset.seed;
    j["preset"] = pr;
    j["widths"] = {{"sigma_P", cfg.sigma_P}, {"sigma_Q", cfg.sigma_Q}, {"renormalize_number", cfg.renormalize_number}};
    const auto& ic = cfg.integrator;
    j["integrator"] = {{"step", ic.step},
                       {"t_final", ic.t_final},
                       {"output_stride", ic.output_stride},
                       {"conservation_tol", ic.conservation_tol},
                       {"ordering", ic.ordering == Ordering::wigner ? "wigner" : "classical"}};
    const auto& en = cfg.ensemble;
    j["ensemble"] = {{"count", en.count},
                     {"seed", en.seed},
                     {"corrections", to_string(en.corrections)},
                     {"jump_stride", en.jump_stride},
                     {"block_size", en.block_size}};
    const auto& an = cfg.analysis;
    json a;
    a["fit_window"] = an.fit_window;
    a["late_window"] = an.late_window;
    a["crossover"] = {{"window_decades", an.crossover.window_decades},
                      {"tolerance", an.crossover.tolerance},
                      {"stable_decades", an.crossover.stable_decades}};
    if (an.vacuum_offset_auto)
        a["vacuum_offset"] = "auto";
    else
        a["vacuum_offset"] = an.vacuum_offset;
    a["variance_t_final"] = an.variance_t_final;
    j["analysis"] = a;
    const auto& ch = cfg.chaos;
    j["chaos"] = {{"ftle_count", ch.ftle_count},
                  {"ftle_renorm_stride", ch.ftle_renorm_stride},
                  {"spectrum_site", ch.spectrum_site},
                  {"window", ch.window == Window::hann ? "hann" : "none"},
                  {"sff_count", ch.sff_count},
                  {"alpha_trajectories", ch.alpha_trajectories}};
    j["outputs"] = {{"trajectories", cfg.outputs.trajectories}, {"format", cfg.outputs.binary ? "binary" : "csv"}};
    return j.dump();
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string content_hash(const RunConfig& cfg) {
    return fnv1a_hex(canonical_json(cfg) + "\n" + kArtifactVersion);
}

}  // namespace bhtwa
