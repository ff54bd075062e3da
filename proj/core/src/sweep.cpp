#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bhtwa/error.hpp"
#include "bhtwa/io.hpp"
#include "bhtwa/run.hpp"
#include "csv.hpp"

namespace bhtwa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string value_label(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

std::string point_dir_name(const std::string& axis, double v) {
    return (axis == "U/J" ? std::string("UJ") : axis) + "=" + value_label(v);
}

json point_document(const SweepSpec& spec, std::size_t i) {
    json doc = json::parse(spec.base_json);
    if (spec.axis == "L") {
        const double v = spec.values[i];
        if (v != std::floor(v) || v < 2) throw ConfigError("$.axis.values[" + std::to_string(i) + "]: L must be an integer >= 2");
        doc["L"] = static_cast<std::int64_t>(v);
    } else {
        doc["U/J"] = spec.values[i];
    }
    if (i < spec.point_overrides.size() && !spec.point_overrides[i].empty())
        doc.merge_patch(json::parse(spec.point_overrides[i]));
    return doc;
}

double optional_number(const std::function<double()>& f) {
    try {
        return f();
    } catch (const std::exception&) {
        return std::nan("");
    }
}

}  // namespace

SweepSpec parse_sweep_spec(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("$: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("$: expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "base" && it.key() != "axis" && it.key() != "overrides" && it.key() != "description")
            throw ConfigError("$." + it.key() + ": unknown field");
    if (!j.contains("base") || !j["base"].is_object()) throw ConfigError("$.base: expected an object");
    if (!j.contains("axis") || !j["axis"].is_object()) throw ConfigError("$.axis: expected an object");
    const auto& ax = j["axis"];
    SweepSpec s;
    s.axis = ax.value("name", "");
    if (s.axis != "U/J" && s.axis != "L") throw ConfigError("$.axis.name: must be \"U/J\" or \"L\"");
    if (!ax.contains("values") || !ax["values"].is_array()) throw ConfigError("$.axis.values: expected an array");
    if (ax["values"].empty()) throw ConfigError("$.axis.values: sweep axis is empty");
    std::set<std::string> seen;
    for (const auto& v : ax["values"]) {
        if (!v.is_number()) throw ConfigError("$.axis.values: expected numbers");
        const double d = v.get<double>();
        if (!seen.insert(value_label(d)).second) throw ConfigError("$.axis.values: duplicate value " + value_label(d));
        s.values.push_back(d);
    }
    s.base_json = j["base"].dump();
    s.point_overrides.assign(s.values.size(), "");
    if (j.contains("overrides")) {
        if (!j["overrides"].is_object()) throw ConfigError("$.overrides: expected an object");
        for (auto it = j["overrides"].begin(); it != j["overrides"].end(); ++it) {
            bool matched = false;
            for (std::size_t i = 0; i < s.values.size(); ++i)
                if (value_label(s.values[i]) == it.key()) {
                    s.point_overrides[i] = it.value().dump();
                    matched = true;
                }
            if (!matched) throw ConfigError("$.overrides." + it.key() + ": not a value on the axis");
        }
    }
    // validate every point before running any of them
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        try {
            parse_run_config(point_document(s, i).dump());
        } catch (const ConfigError& e) {
            throw ConfigError("point " + s.axis + "=" + value_label(s.values[i]) + ": " + e.what());
        }
    }
    return s;
}

SweepOutcome cmd_sweep(const SweepSpec& spec, const fs::path& dir, std::size_t workers) {
    if (spec.values.empty()) throw ConfigError("$.axis.values: sweep axis is empty");
    fs::create_directories(dir / "points");
    SweepOutcome out{dir, {}};
    out.points.resize(spec.values.size());
    std::vector<RunConfig> configs;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        configs.push_back(parse_run_config(point_document(spec, i).dump()));
        out.points[i].value = spec.values[i];
        out.points[i].dir = (fs::path("points") / point_dir_name(spec.axis, spec.values[i])).string();
        out.points[i].hash = content_hash(configs.back());
    }

    workers = std::max<std::size_t>(1, workers);
    const std::size_t concurrent = std::min(workers, spec.values.size());
    const std::size_t inner = std::max<std::size_t>(1, workers / concurrent);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            auto& p = out.points[i];
            try {
                const auto r = cmd_run(configs[i], dir / p.dir, inner);
                p.status = r.skipped ? "skipped" : "complete";
            } catch (const std::exception& e) {
                p.status = "failed";
                p.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < concurrent; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    json st = json::array();
    for (const auto& p : out.points)
        st.push_back({{"value", p.value}, {"dir", p.dir}, {"hash", p.hash}, {"status", p.status}, {"error", p.error}});
    {
        std::ofstream f(dir / "sweep_status.json");
        f << json{{"axis", spec.axis}, {"points", st}}.dump(2);
    }
    aggregate_sweep(dir, out.points);
    return out;
}

std::vector<SweepRow> aggregate_sweep(const fs::path& dir, const std::vector<SweepPointStatus>& points) {
    std::vector<SweepRow> rows;
    for (const auto& p : points) {
        if (p.status == "failed") continue;
        const fs::path pd = dir / p.dir;
        SweepRow r;
        r.value = p.value;
        r.var_t_dispersion = optional_number([&] {
            const auto t = csv::read(pd / "observables" / "temporal_variance.csv");
            for (std::size_t i = 0; i < t.rows.size(); ++i)
                if (t.rows[i][0] == "dispersion" && t.rows[i][1] == "full") return t.num(i, 3);
            return std::nan("");
        });
        r.var_t_occupation = optional_number([&] {
            const auto t = csv::read(pd / "observables" / "temporal_variance.csv");
            for (std::size_t i = 0; i < t.rows.size(); ++i)
                if (t.rows[i][0] == "occupation" && t.rows[i][1] == "full") return t.num(i, 3);
            return std::nan("");
        });
        r.ftle_positive_sum = optional_number([&] {
            const auto v = csv::read(pd / "chaos" / "ftle_sum.csv").numbers("positive_sum");
            double s = 0.0;
            for (double x : v) s += x;
            return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
        });
        r.crossover_time = optional_number([&] {
            const auto t = csv::read(pd / "observables" / "crossover.csv");
            for (std::size_t i = 0; i < t.rows.size(); ++i)
                if (t.rows[i][0] == "D_mean_empty") return t.rows[i][1] == "1" ? t.num(i, 2) : 0.0;
            return std::nan("");
        });
        rows.push_back(r);
    }

    std::ofstream c(dir / "aggregate.csv");
    c << "value,var_t_dispersion,var_t_occupation,ftle_positive_sum,crossover_time\n";
    for (const auto& r : rows)
        c << io::num(r.value) << ',' << io::num(r.var_t_dispersion) << ',' << io::num(r.var_t_occupation) << ','
          << io::num(r.ftle_positive_sum) << ',' << io::num(r.crossover_time) << '\n';

    std::ofstream m(dir / "aggregate.md");
    m << "| value | var_t (D) | var_t (I) | FTLE sum | crossover t |\n|---|---|---|---|---|\n";
    m << std::setprecision(4);
    for (const auto& r : rows)
        m << "| " << r.value << " | " << r.var_t_dispersion << " | " << r.var_t_occupation << " | "
          << r.ftle_positive_sum << " | " << r.crossover_time << " |\n";
    return rows;
}

}  // namespace bhtwa
