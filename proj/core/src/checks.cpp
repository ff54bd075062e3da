#include <cmath>
#include <numbers>
#include <sstream>

#include "bhtwa/error.hpp"
#include "bhtwa/run.hpp"

namespace bhtwa {

namespace {

CheckLine line(std::string name, double value, double expected, double tol, bool relative = false) {
    const double err = std::abs(value - expected);
    const double bound = relative ? tol * std::abs(expected) : tol;
    return {std::move(name), value, expected, tol, err <= bound};
}

PhaseState probe_state(std::size_t L) {
    PhaseState s(L);
    for (std::size_t j = 0; j < L; ++j) {
        s.P()[j] = 0.3 * std::sin(1.7 * j + 0.2);
        s.Q()[j] = 0.4 * std::cos(0.9 * j - 0.5);
    }
    return s;
}

}  // namespace

std::vector<CheckLine> cmd_validate() {
    std::vector<CheckLine> out;
    constexpr double pi = std::numbers::pi;

    out.push_back(line("kernel R^4 (12 pi)", jump_kernel_integral(4, 0), 12.0 * pi, 1e-6, true));
    out.push_back(line("kernel S^4 (12 pi)", jump_kernel_integral(0, 4), 12.0 * pi, 1e-6, true));
    for (auto [a, b] : {std::pair{1, 0}, {0, 1}, {2, 0}, {0, 2}, {1, 1}}) {
        std::ostringstream n;
        n << "kernel R^" << a << " S^" << b;
        out.push_back(line(n.str(), jump_kernel_integral(a, b), 0.0, 1e-10));
    }

    // drift against central differences of the Weyl-ordered Hamiltonian
    const auto p = ChainParams::from_ratios(6, 1.0, 0.5);
    const auto s = probe_state(6);
    const auto d = drift_pq(s, p, Ordering::wigner);
    double worst = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
        const double h = 1e-6;
        auto shifted = [&](std::size_t idx, double by) {
            PhaseState t = s;
            t.flat()[idx] += by;
            return hamiltonian(t, p, Ordering::wigner);
        };
        const double dHdP = (shifted(j, h) - shifted(j, -h)) / (2 * h);
        const double dHdQ = (shifted(6 + j, h) - shifted(6 + j, -h)) / (2 * h);
        worst = std::max({worst, std::abs(d.dP[j] - dHdQ), std::abs(d.dQ[j] + dHdP)});
        scale = std::max({scale, std::abs(d.dP[j]), std::abs(d.dQ[j])});
    }
    out.push_back(line("drift vs dH (relative)", worst / scale, 0.0, 1e-6));

    const double h_pq = hamiltonian(s, p);
    const double h_np = hamiltonian_number_phase(to_number_phase(s), p);
    out.push_back(line("H canonical vs number-phase", h_np - h_pq, 0.0, 1e-12 * std::abs(h_pq) + 1e-18));

    IntegratorConfig ic;
    ic.t_final = 200.0;
    ic.output_stride = 100;
    const auto rec = evolve(s, p, ic);
    out.push_back(line("number drift over 2000 steps", rec.max_number_drift, 0.0, 1e-10));
    out.push_back(line("energy drift over 2000 steps", rec.max_energy_drift, 0.0, 1e-8));

    InitialConditionPreset preset;
    preset.filled_sites = {2};
    const auto spec = build_spec(preset, p);
    const bool same = sample_one(spec, 7, 3) == sample_one(spec, 7, 3);
    const bool differ = !(sample_one(spec, 7, 3) == sample_one(spec, 7, 4));
    out.push_back({"sampling deterministic per (seed, index)", same && differ ? 1.0 : 0.0, 1.0, 0.0, same && differ});
    return out;
}

std::vector<CheckLine> cmd_oracle(const RunConfig& cfg) {
    if (cfg.preset.kind != InitialConditionPreset::Kind::single_site)
        throw ConfigError("$.preset: the early-time oracle needs a single-site preset");
    std::vector<CheckLine> out;
    for (double eps : {1e-8, 1e-6, 1e-10}) {
        EarlyTimeOptions o;
        o.epsilon = eps;
        o.step = cfg.integrator.step;
        o.max_distance = 3;
        for (const auto& e : early_time_oracle(cfg.params, cfg.preset, o)) {
            std::ostringstream n;
            n << "eps=" << eps << " site " << e.site + 1 << " l=" << e.distance;
            CheckLine c = e.distance == 0 ? line(n.str() + " (filled, I_n)", e.fit.slope, 0.0, 0.1)
                                          : line(n.str(), e.fit.slope, e.predicted, 0.1 * e.predicted);
            c.gating = eps == 1e-8 && e.distance <= 2;
            out.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace bhtwa
