#include "bhtwa/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "bhtwa/error.hpp"
#include "bhtwa/io.hpp"
#include "bhtwa/observables.hpp"

namespace bhtwa {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig apply_overrides(RunConfig cfg, const RunOverrides& o) {
    if (o.seed) cfg.ensemble.seed = *o.seed;
    if (o.corrections) cfg.ensemble.corrections = *o.corrections;
    if (o.workers) cfg.ensemble.workers = *o.workers;
    return cfg;
}

fs::path default_output_root() {
    if (const char* r = std::getenv("BHTWA_OUT_ROOT"); r && *r) return r;
    return "runs";
}

std::size_t default_workers() {
    if (const char* w = std::getenv("BHTWA_WORKERS"); w && *w) {
        try {
            const long v = std::stol(w);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        throw ConfigError("BHTWA_WORKERS must be a positive integer, got '" + std::string(w) + "'");
    }
    return 1;
}

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << text;
}

template <class F>
void write_file(const fs::path& p, F&& body) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    body(out);
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    return json::parse(in);
}

// Distance to the nearest filled site; 0 everywhere for the uniform preset.
std::vector<std::size_t> distances(const RunConfig& cfg) {
    const std::size_t L = cfg.params.L;
    std::vector<std::size_t> d(L, 0);
    if (cfg.preset.kind == InitialConditionPreset::Kind::uniform_random) return d;
    for (std::size_t n = 0; n < L; ++n) {
        std::size_t best = L;
        for (std::size_t f : cfg.preset.filled_sites) best = std::min(best, n > f ? n - f : f - n);
        d[n] = best;
    }
    return d;
}

struct FitRecord {
    ScalingFit fit;
    std::string error;
};

FitRecord try_fit(const ScalarSeries& s, double lo, double hi, std::optional<double> target, double tol) {
    FitRecord r;
    try {
        r.fit = fit_exponent(s, lo, hi);
        if (target) r.fit = judge(r.fit, *target, tol);
    } catch (const DomainError& e) {
        r.fit.series_id = s.label;
        r.fit.t_lo = lo;
        r.fit.t_hi = hi;
        if (target) {
            r.fit.target = target;
            r.fit.tolerance = tol;
        }
        r.error = e.what();
    }
    return r;
}

ScalarSeries dispersion_series(const MomentSeries& ms, std::size_t a, std::size_t b) {
    ScalarSeries s;
    s.times = ms.times;
    s.values = dispersion(a, b, ms);
    s.label = a == b ? "D_" + std::to_string(a + 1) : "D_" + std::to_string(a + 1) + "_" + std::to_string(b + 1);
    return s;
}

json fit_json(const FitRecord& r) {
    json j;
    j["series_id"] = r.fit.series_id;
    j["window"] = {r.fit.t_lo, r.fit.t_hi};
    if (r.error.empty()) {
        j["slope"] = r.fit.slope;
        j["stderr"] = r.fit.stderr_slope;
        j["r_squared"] = r.fit.r_squared;
        j["points"] = r.fit.points;
    } else {
        j["slope"] = nullptr;
        j["error"] = r.error;
    }
    if (r.fit.target) {
        j["target"] = *r.fit.target;
        j["tolerance"] = r.fit.tolerance;
        j["verdict"] = r.error.empty() && r.fit.verdict ? "pass" : "fail";
    } else {
        j["target"] = nullptr;
        j["verdict"] = nullptr;
    }
    return j;
}

std::string fits_markdown(const std::vector<FitRecord>& fits, const std::string& hash) {
    std::ostringstream os;
    os << "# Exponent fits (" << hash << ")\n\n";
    os << "| series | window | slope | stderr | target | verdict |\n";
    os << "|---|---|---|---|---|---|\n";
    for (const auto& r : fits) {
        os << "| " << r.fit.series_id << " | [" << std::setprecision(4) << r.fit.t_lo << ", " << r.fit.t_hi << "] | ";
        if (r.error.empty())
            os << std::fixed << std::setprecision(3) << r.fit.slope << " | " << r.fit.stderr_slope << " | ";
        else
            os << "n/a | n/a | ";
        os.unsetf(std::ios::floatfield);
        if (r.fit.target)
            os << *r.fit.target << " +- " << r.fit.tolerance << " | " << (r.error.empty() && r.fit.verdict ? "pass" : "fail");
        else
            os << "- | -";
        if (!r.error.empty()) os << " (" << r.error << ")";
        os << " |\n";
    }
    return os.str();
}

std::array<double, 2> late_window(const RunConfig& cfg, const std::vector<double>& times) {
    if (cfg.analysis.late_window[1] > 0.0) return cfg.analysis.late_window;
    return {times.back() / 10.0, times.back()};
}

json base_manifest(const RunConfig& cfg, const std::string& hash, std::size_t workers) {
    json m;
    m["artifact"] = "bhtwa";
    m["version"] = kArtifactVersion;
    m["hash"] = hash;
    m["config"] = json::parse(canonical_json(cfg));
    m["mean_total_number"] = cfg.spec().mean_total_number();
    m["workers"] = workers;
    return m;
}

}  // namespace

RunOutcome cmd_run(const RunConfig& cfg_in, const fs::path& dir, std::size_t workers) {
    RunConfig cfg = cfg_in;
    cfg.ensemble.workers = std::max<std::size_t>(1, workers);
    const std::string hash = content_hash(cfg);
    RunOutcome outcome{dir, hash, false};

    const fs::path manifest_path = dir / "manifest.json";
    if (fs::exists(manifest_path)) {
        try {
            const auto m = read_json(manifest_path);
            if (m.value("hash", "") == hash && m.value("status", "") == "complete") {
                outcome.skipped = true;
                return outcome;
            }
        } catch (const json::exception&) {
            // unreadable manifest: rerun
        }
    }

    fs::create_directories(dir / "observables");
    json manifest = base_manifest(cfg, hash, cfg.ensemble.workers);
    manifest["status"] = "running";
    manifest["started_utc"] = utc_now();
    write_text(manifest_path, manifest.dump(2));
    const auto t_start = std::chrono::steady_clock::now();
    std::vector<std::string> files;

    try {
        const auto spec = cfg.spec();
        const MomentSeries ms = run_ensemble(spec, cfg.params, cfg.integrator, cfg.ensemble);
        const std::size_t L = ms.L;
        const auto dist = distances(cfg);
        const double vac = cfg.vacuum_offset();

        write_file(dir / "moments.csv", [&](std::ostream& os) { write_moments_csv(os, ms); });
        files.push_back("moments.csv");

        SiteSeries occ{ms.times, L, ms.mean_I, "occupation"};
        SiteSeries disp{ms.times, L, {}, "dispersion"};
        disp.values.resize(ms.size() * L);
        for (std::size_t m = 0; m < ms.size(); ++m)
            for (std::size_t n = 0; n < L; ++n) disp.values[m * L + n] = ms.D(m, n, n);
        const auto ctd_series = ctd(ms);
        const auto entropy = mixing_entropy_series(ms, vac);
        const auto energy = local_energy_series(ms);

        auto obs = [&](const std::string& name, auto&& writer) {
            write_file(dir / "observables" / name, writer);
            files.push_back("observables/" + name);
        };
        obs("occupation.csv", [&](std::ostream& os) { write_site_csv(os, occ); });
        obs("dispersion.csv", [&](std::ostream& os) { write_site_csv(os, disp); });
        obs("ctd.csv", [&](std::ostream& os) { write_scalar_csv(os, ctd_series); });
        obs("mixing_entropy.csv", [&](std::ostream& os) { write_scalar_csv(os, entropy); });
        obs("local_energy.csv", [&](std::ostream& os) { write_site_csv(os, energy.mean); });
        obs("local_energy_dispersion.csv", [&](std::ostream& os) { write_site_csv(os, energy.dispersion); });

        // temporal variance, both readings, over the whole run and the early window
        const double t_full = cfg.analysis.variance_t_final > 0.0 ? cfg.analysis.variance_t_final : ms.times.back();
        const double t_early = std::min(cfg.analysis.fit_window[1], ms.times.back());
        json var_json;
        obs("temporal_variance.csv", [&](std::ostream& os) {
            os << "reading,window,t_final,value\n";
            for (auto [reading, sig] : {std::pair{"dispersion", VarianceSignal::dispersion},
                                        std::pair{"occupation", VarianceSignal::occupation}}) {
                for (auto [wname, tf] : {std::pair{"full", t_full}, std::pair{"early", t_early}}) {
                    double v = std::nan("");
                    try {
                        v = temporal_variance(ms, sig, tf, 1.0, vac);
                    } catch (const std::exception&) {
                    }
                    os << reading << ',' << wname << ',' << io::num(tf) << ',' << io::num(v) << '\n';
                    var_json[std::string(reading) + "_" + wname] = std::isfinite(v) ? json(v) : json(nullptr);
                }
            }
        });

        // crossover on the mean dispersion of the initially empty sites
        const auto lw = late_window(cfg, ms.times);
        ScalarSeries mean_empty;
        mean_empty.times = ms.times;
        mean_empty.label = "D_mean_empty";
        mean_empty.values.assign(ms.size(), 0.0);
        std::size_t empties = 0;
        for (std::size_t n = 0; n < L; ++n)
            if (dist[n] > 0) {
                ++empties;
                for (std::size_t m = 0; m < ms.size(); ++m) mean_empty.values[m] += ms.D(m, n, n);
            }
        if (empties > 0)
            for (double& v : mean_empty.values) v /= static_cast<double>(empties);
        json cross_json;
        obs("crossover.csv", [&](std::ostream& os) {
            os << "series,found,time,log_time\n";
            auto emit = [&](const ScalarSeries& s, double early) {
                CrossoverResult c;
                try {
                    c = detect_crossover(s, early, 1.0, cfg.analysis.crossover);
                } catch (const DomainError&) {
                }
                os << s.label << ',' << (c.found ? 1 : 0) << ',' << io::num(c.found ? c.time : 0.0) << ','
                   << io::num(c.found ? std::log(c.time) : 0.0) << '\n';
                if (s.label == "D_mean_empty") cross_json = {{"found", c.found}, {"time", c.found ? c.time : 0.0}};
            };
            if (empties > 0) emit(mean_empty, 1.0);
            for (std::size_t n = 0; n < L; ++n)
                if (dist[n] > 0) emit(dispersion_series(ms, n, n), static_cast<double>(dist[n]));
        });

        // exponent fits
        std::vector<FitRecord> fits;
        const auto [flo, fhi] = cfg.analysis.fit_window;
        for (std::size_t n = 0; n < L; ++n) {
            const auto s = dispersion_series(ms, n, n);
            if (cfg.preset.kind == InitialConditionPreset::Kind::uniform_random)
                fits.push_back(try_fit(s, flo, fhi, 0.0, 0.1));
            else if (dist[n] > 0)
                fits.push_back(try_fit(s, flo, fhi, static_cast<double>(dist[n]), 0.15));
            else
                fits.push_back(try_fit(s, flo, fhi, std::nullopt, 0.0));
        }
        if (cfg.preset.kind != InitialConditionPreset::Kind::uniform_random)
            for (std::size_t a = 0; a < L; ++a)
                for (std::size_t b = a + 1; b < L; ++b)
                    if (dist[a] > 0 && dist[b] > 0)
                        fits.push_back(try_fit(dispersion_series(ms, a, b), flo, fhi,
                                               static_cast<double>(std::min(dist[a], dist[b])), 0.2));
        fits.push_back(try_fit(ctd_series, flo, fhi, 2.0, 0.1));
        if (empties > 0) fits.push_back(try_fit(mean_empty, lw[0], lw[1], 1.0, 0.15));

        // chaos diagnostics
        json chaos_json;
        if (cfg.chaos.ftle_count > 0 || cfg.chaos.spectrum_site > 0 || cfg.chaos.sff_count > 0 ||
            cfg.chaos.alpha_trajectories > 0)
            fs::create_directories(dir / "chaos");
        if (cfg.chaos.ftle_count > 0) {
            std::vector<FtleResult> res;
            for (std::size_t i = 0; i < cfg.chaos.ftle_count; ++i)
                res.push_back(ftle(sample_one(spec, cfg.ensemble.seed, i), cfg.params, cfg.integrator,
                                   cfg.chaos.ftle_renorm_stride));
            double mean = 0.0;
            write_file(dir / "chaos" / "ftle.csv", [&](std::ostream& os) {
                os << "sample,k,exponent\n";
                for (std::size_t i = 0; i < res.size(); ++i)
                    for (std::size_t k = 0; k < res[i].exponents.size(); ++k)
                        os << i << ',' << k + 1 << ',' << io::num(res[i].exponents[k]) << '\n';
            });
            write_file(dir / "chaos" / "ftle_sum.csv", [&](std::ostream& os) {
                os << "sample,positive_sum\n";
                for (std::size_t i = 0; i < res.size(); ++i) {
                    os << i << ',' << io::num(res[i].positive_sum) << '\n';
                    mean += res[i].positive_sum / static_cast<double>(res.size());
                }
            });
            files.push_back("chaos/ftle.csv");
            files.push_back("chaos/ftle_sum.csv");
            chaos_json["ftle_positive_sum_mean"] = mean;
        }
        if (cfg.chaos.spectrum_site > 0) {
            const std::size_t site = cfg.chaos.spectrum_site - 1;
            const auto rec = evolve(sample_one(spec, cfg.ensemble.seed, 0), cfg.params, cfg.integrator);
            ScalarSeries sig;
            sig.times = rec.times;
            sig.label = "I_" + std::to_string(site + 1);
            for (const auto& s : rec.states) sig.values.push_back(s.occupation(site));
            const auto sp = power_spectrum(sig, cfg.chaos.window);
            write_file(dir / "chaos" / "spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, sp); });
            files.push_back("chaos/spectrum.csv");
            FitRecord r;
            try {
                r.fit = judge(spectral_slope(sp), -2.0, 0.2);
            } catch (const DomainError& e) {
                r.error = e.what();
            }
            r.fit.series_id = "spectrum_" + sig.label;
            fits.push_back(r);
        }
        if (cfg.chaos.sff_count > 0) {
            const auto s = sff(spec, cfg.params, cfg.chaos.sff_count, cfg.ensemble.seed, ms.times);
            write_file(dir / "chaos" / "sff.csv", [&](std::ostream& os) { write_scalar_csv(os, s); });
            files.push_back("chaos/sff.csv");
        }
        if (cfg.chaos.alpha_trajectories > 0) {
            std::vector<AlphaSeries> runs;
            for (std::size_t i = 0; i < cfg.chaos.alpha_trajectories; ++i)
                runs.push_back(alpha_transform(
                    evolve(sample_one(spec, cfg.ensemble.seed, i), cfg.params, cfg.integrator), cfg.params));
            write_file(dir / "chaos" / "alpha.csv", [&](std::ostream& os) { write_alpha_csv(os, runs.front()); });
            files.push_back("chaos/alpha.csv");
            const auto pr = alpha_pairing(runs.front());
            chaos_json["alpha_norm_residual"] = pr.norm_residual;
            chaos_json["alpha_eigenvalue_pair_residual"] = pr.eigenvalue_residual;
            chaos_json["alpha_pair_residual"] = pr.alpha_residual;
            if (runs.size() >= 2) {
                const auto ad = alpha_dispersion(runs);
                write_file(dir / "chaos" / "alpha_dispersion.csv", [&](std::ostream& os) { write_site_csv(os, ad); });
                files.push_back("chaos/alpha_dispersion.csv");
                for (std::size_t n = 0; n < L; ++n) {
                    auto s = ad.site(n);
                    fits.push_back(try_fit(s, flo, fhi, 0.0, 0.2));
                }
            }
        }

        json fits_arr = json::array();
        for (const auto& r : fits) fits_arr.push_back(fit_json(r));
        write_text(dir / "fits.json", json{{"hash", hash}, {"fits", fits_arr}}.dump(2));
        write_text(dir / "fits.md", fits_markdown(fits, hash));
        files.push_back("fits.json");
        files.push_back("fits.md");

        // per-trajectory dumps
        if (cfg.outputs.trajectories > 0) {
            fs::create_directories(dir / "trajectories");
            for (std::size_t i = 0; i < cfg.outputs.trajectories; ++i) {
                const auto rec = evolve(sample_one(spec, cfg.ensemble.seed, i), cfg.params, cfg.integrator);
                std::ostringstream name;
                name << "traj_" << std::setw(5) << std::setfill('0') << i << (cfg.outputs.binary ? ".bin" : ".csv");
                const auto p = dir / "trajectories" / name.str();
                if (cfg.outputs.binary) {
                    std::ofstream out(p, std::ios::binary);
                    write_trajectory_binary(out, rec);
                } else {
                    std::ofstream out(p);
                    write_trajectory_csv(out, rec);
                }
                files.push_back("trajectories/" + name.str());
            }
        }

        json summary;
        summary["hash"] = hash;
        summary["L"] = L;
        summary["ensemble_size"] = ms.ensemble_size;
        summary["corrections"] = to_string(ms.corrections);
        summary["t_final"] = ms.times.back();
        summary["max_number_drift"] = ms.max_number_drift;
        summary["max_energy_drift"] = ms.max_energy_drift;
        summary["vacuum_offset"] = vac;
        const std::size_t last = ms.size() - 1;
        summary["final_occupation"] = ms.occupations(last);
        std::vector<double> dfin(L);
        for (std::size_t n = 0; n < L; ++n) dfin[n] = ms.D(last, n, n);
        summary["final_dispersion"] = dfin;
        summary["mixing_entropy"] = {{"initial", entropy.values.front()},
                                     {"final", entropy.values.back()},
                                     {"max", mixing_entropy_max(L)}};
        summary["ctd_final"] = ctd_series.values.back();
        summary["temporal_variance"] = var_json;
        summary["crossover"] = cross_json;
        if (!chaos_json.is_null()) summary["chaos"] = chaos_json;
        write_text(dir / "summary.json", json{{hash, summary}}.dump(2));
        files.push_back("summary.json");
    } catch (const std::exception& e) {
        manifest["status"] = "failed";
        manifest["error"] = e.what();
        manifest["partial_outputs"] = files;
        manifest["finished_utc"] = utc_now();
        write_text(manifest_path, manifest.dump(2));
        throw;
    }

    manifest["status"] = "complete";
    manifest["outputs"] = files;
    manifest["finished_utc"] = utc_now();
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_text(manifest_path, manifest.dump(2));
    return outcome;
}

}  // namespace bhtwa
