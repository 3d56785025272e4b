#include "commands.hpp"

#include "phbt/calibration.hpp"
#include "phbt/constants.hpp"
#include "phbt/errors.hpp"
#include "phbt/gaussian_bound.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace phbt::cli {

namespace {

json window_ns(const counting::Window& w) { return json::array({w.begin * 1e9, w.end * 1e9}); }

trajectories::SimulationOptions simulation_options(const ScenarioConfig& config)
{
    trajectories::SimulationOptions options;
    options.tree.dim = config.run.dim;
    options.tree.grid_points = config.run.grid_points;
    options.tree.herald_window = config.run.herald_window;
    options.tree.read_window = config.run.read_window;
    options.threads = config.run.threads;
    return options;
}

trajectories::ClickRecord simulate(const ScenarioConfig& config, const dynamics::HeatingModel& heating)
{
    return trajectories::simulate_cycles(config.device, config.schedule, heating, config.detectors,
                                         config.run.splitter_ratio, config.run.n_cycles,
                                         config.run.seed, simulation_options(config));
}

inference::G2Estimate estimate(const trajectories::ClickRecord& record, const ScenarioConfig& config,
                               std::int64_t delta_n)
{
    return inference::estimate_g2(record, herald_window(config), read_window(config),
                                  config.run.herald_policy, delta_n);
}

}  // namespace

ScenarioConfig with_overrides(const json& doc, const Overrides& overrides)
{
    json patched = doc;
    if (overrides.seed || overrides.cycles || overrides.dim) {
        if (!patched.contains("run")) patched["run"] = json::object();
        if (!patched["run"].is_object()) return parse_config(patched);  // reports the type error
        if (overrides.seed) patched["run"]["seed"] = *overrides.seed;
        if (overrides.cycles) patched["run"]["n_cycles"] = *overrides.cycles;
        if (overrides.dim) patched["run"]["dim"] = *overrides.dim;
    }
    return parse_config(patched);
}

json cmd_predict(const ScenarioConfig& config)
{
    const auto heating = resolve_heating(config);
    counting::PredictOptions options;
    options.dim = config.run.dim;
    options.herald_window = config.run.herald_window;
    options.read_window = config.run.read_window;
    const auto p = counting::predict(config.device, config.schedule, heating.model,
                                     herald_efficiency(config), options);
    return json{{"g2", p.g2},
                {"heralded_occupation", p.heralded_occupation},
                {"click_prob", p.click_prob},
                {"unconditional_occupation", p.unconditional_occupation},
                {"heating_scale", heating.scale},
                {"herald_window_ns", window_ns(p.herald_window)},
                {"read_window_ns", window_ns(p.read_window)},
                {"params_echo", config.source}};
}

json cmd_simulate(const ScenarioConfig& config, const std::filesystem::path& out)
{
    const auto heating = resolve_heating(config);
    auto record = simulate(config, heating.model);
    json meta = config.source;
    meta["run"]["seed"] = config.run.seed;
    meta["run"]["n_cycles"] = config.run.n_cycles;
    record.metadata = json{{"scenario", meta}, {"heating_scale", heating.scale}}.dump();
    trajectories::write_record(record, out);

    std::uint64_t heralds[2] = {0, 0};
    const auto hw = herald_window(config);
    std::uint64_t last_cycle[2] = {~0ULL, ~0ULL};
    for (const auto& e : record.events) {
        const auto d = static_cast<std::size_t>(e.detector - 1);
        if (!hw.contains(e.time()) || last_cycle[d] == e.cycle) continue;
        last_cycle[d] = e.cycle;
        ++heralds[d];
    }
    return json{{"out", out.string()},
                {"metadata", trajectories::metadata_path(out).string()},
                {"cycles", record.cycles},
                {"seed", record.seed},
                {"events", record.events.size()},
                {"herald_cycles_d1", heralds[0]},
                {"herald_cycles_d2", heralds[1]},
                {"heating_scale", heating.scale}};
}

json estimate_to_json(const inference::G2Estimate& e)
{
    return json{{"g2", e.value},         {"sigma_plus", e.sigma_plus}, {"sigma_minus", e.sigma_minus},
                {"n_heralds", e.n_heralds}, {"c1", e.c1},              {"c2", e.c2},
                {"c12", e.c12},          {"p_value", e.p_value_classical}};
}

json cmd_estimate(const std::filesystem::path& record_path, const std::optional<ScenarioConfig>& config,
                  const EstimateOptions& options)
{
    const auto record = trajectories::read_record(record_path);
    ScenarioConfig scenario;
    if (config) {
        scenario = *config;
    } else {
        json meta;
        try {
            meta = json::parse(record.metadata);
        } catch (const json::exception& e) {
            throw IoError(std::string("record metadata: ") + e.what());
        }
        if (!meta.contains("scenario")) {
            throw ConfigError("record sidecar carries no scenario; pass --config for the windows");
        }
        scenario = parse_config(meta.at("scenario"));
    }
    const auto policy = options.policy.value_or(scenario.run.herald_policy);
    const auto delta_n = options.delta_n.value_or(scenario.run.delta_n);
    const auto est = inference::estimate_g2(record, herald_window(scenario), read_window(scenario),
                                            policy, delta_n);
    return estimate_to_json(est);
}

json cmd_calibrate(const json& inputs)
{
    const ObjectReader r(inputs, "$");
    if (r.has("schema") && (!inputs.at("schema").is_number_integer() || inputs.at("schema").get<int>() != 1)) {
        throw ConfigError("$.schema: unsupported schema version (expected 1)");
    }
    const double c_red = r.number("C_r");
    const double c_blue = r.number("C_b");
    const double eta_sum = r.number("eta_sum");
    const double probe = r.number("E_probe_fJ") * 1e-15;
    auto device = dynamics::DeviceParams::reference();
    if (r.has("device")) {
        json wrapped{{"schema", 1},
                     {"device", r.child("device")},
                     {"schedule", {{"pump_energy_fJ", 1.0}, {"read_energy_fJ", 1.0}, {"delay_ns", 200.0}}},
                     {"detectors", json::array({{{"eta", 0.0}}, {{"eta", 0.0}}})}};
        device = parse_config(wrapped).device;
    }
    std::optional<calibration::EfficiencyChain> chain;
    if (r.has("efficiency")) {
        const ObjectReader e(r.child("efficiency"), "$.efficiency");
        const json& counts = e.child("counts_per_pulse");
        if (!counts.is_array() || counts.size() != 2 || !counts[0].is_number() || !counts[1].is_number()) {
            throw ConfigError("$.efficiency.counts_per_pulse: expected two numbers");
        }
        chain = calibration::efficiency_chain(e.number("eta_fc"), e.number("eta_dev"),
                                              {counts[0].get<double>(), counts[1].get<double>()},
                                              e.number("photons_per_pulse"));
        e.finish();
    }
    r.finish();

    const auto s = calibration::solve_sideband(c_red, c_blue, eta_sum, probe, device);
    if (s.small_p_violated) {
        std::cerr << "warning: scattering probability above 0.1, small-p relations are inaccurate\n";
    }
    json out{{"n_th", s.n_th},
             {"p_b", s.p_b},
             {"p_r", s.p_r},
             {"g0_over_2pi_kHz", s.g0 / constants::two_pi / 1e3}};
    if (chain) {
        out["efficiency"] = {{"eta_fc", chain->eta_fc},
                             {"eta_dev", chain->eta_dev},
                             {"eta_trans_qe", chain->eta_trans_qe},
                             {"eta_total", chain->eta_total}};
    }
    return out;
}

json cmd_gaussian_bound(const BoundOptions& options)
{
    gaussianbound::MinimizeOptions m;
    m.theta = options.free_phase ? gaussianbound::ThetaConstraint::free
                                 : gaussianbound::ThetaConstraint::twice_phi;
    m.occupation_window = options.window;
    m.dim = options.dim;
    const auto r = gaussianbound::minimize_gaussian_g2(options.n_init, m);
    return json{{"g2_min", r.g2_min},
                {"alpha_mag", r.params.alpha_mag},
                {"alpha_phase", r.params.alpha_phase},
                {"squeeze_mag", r.params.squeeze_mag},
                {"squeeze_phase", r.params.squeeze_phase},
                {"occupation", r.occupation},
                {"constrained", r.constrained},
                {"n_init", options.n_init}};
}

SweepAxis sweep_axis_from_string(const std::string& text)
{
    if (text == "delta_n") return SweepAxis::delta_n;
    if (text == "n_init") return SweepAxis::n_init;
    throw ConfigError("--axis must be delta_n or n_init, got '" + text + "'");
}

std::vector<SweepRow> cmd_sweep(const ScenarioConfig& config, SweepAxis axis,
                                const std::vector<double>& values)
{
    if (values.empty()) throw ConfigError("sweep needs at least one axis value");
    std::vector<SweepRow> rows;
    const auto heating = resolve_heating(config);
    if (axis == SweepAxis::delta_n) {
        for (double v : values) {
            if (std::floor(v) != v) throw ConfigError("delta_n sweep values must be integers");
        }
        const auto record = simulate(config, heating.model);
        for (double v : values) {
            const auto e = estimate(record, config, static_cast<std::int64_t>(v));
            rows.push_back({v, e.value, e.sigma_minus, e.sigma_plus});
        }
        return rows;
    }
    for (double v : values) {
        if (!(v >= 0.0)) throw ConfigError("n_init sweep values must be >= 0");
        const auto record = simulate(config, heating.model.with_initial_occupation(v));
        const auto e = estimate(record, config, config.run.delta_n);
        rows.push_back({v, e.value, e.sigma_minus, e.sigma_plus});
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "axis_value,g2,sigma_minus,sigma_plus\n";
    char line[160];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", r.axis_value, r.g2,
                      r.sigma_minus, r.sigma_plus);
        out << line;
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json sweep_to_json(SweepAxis axis, const std::vector<SweepRow>& rows)
{
    json list = json::array();
    for (const auto& r : rows) {
        list.push_back({{"axis_value", r.axis_value},
                        {"g2", r.g2},
                        {"sigma_minus", r.sigma_minus},
                        {"sigma_plus", r.sigma_plus}});
    }
    return json{{"axis", axis == SweepAxis::delta_n ? "delta_n" : "n_init"}, {"rows", list}};
}

}  // namespace phbt::cli
