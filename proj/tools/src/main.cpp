// phbt: predict, simulate, estimate, calibrate, gaussian-bound, sweep.
// Exit codes: 0 ok, 2 config, 3 numeric, 4 I/O.

#include "commands.hpp"

#include "phbt/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

using phbt::cli::json;

void emit(const json& result, const std::string& out_path)
{
    std::cout << result.dump() << '\n';
    if (out_path.empty()) return;
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw phbt::IoError("cannot open '" + out_path + "' for writing");
    out << result.dump(2) << '\n';
    if (!out) throw phbt::IoError("write failed for '" + out_path + "'");
}

std::vector<double> parse_list(const std::string& text, const char* what)
{
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw phbt::ConfigError(std::string(what) + ": cannot parse '" + item + "' as a number");
        }
    }
    return values;
}

int fail(int code, const std::string& message)
{
    std::cerr << "phbt: " << message << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Heralded single-phonon simulator and analysis toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    std::uint64_t cycles = 0;
    int dim = 0;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config_path, "Scenario config (JSON, schema 1)");
        if (config_required) opt->required();
        sub->add_option("--out", out_path, "Output path");
        sub->add_option("--seed", seed, "Override run.seed");
        sub->add_option("--cycles", cycles, "Override run.n_cycles");
        sub->add_option("--dim", dim, "Override run.dim (Fock levels)");
    };

    auto* predict = app.add_subcommand("predict", "Predict heralded g2(0) for a scenario");
    add_common(predict, true);
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic click record");
    add_common(simulate, true);
    simulate->get_option("--out")->required();

    auto* estimate = app.add_subcommand("estimate", "Estimate g2 from a click record");
    add_common(estimate, false);
    std::string record_path;
    std::string policy_text;
    std::int64_t delta_n = 0;
    estimate->add_option("--record", record_path, "Click record CSV")->required();
    estimate->add_option("--policy", policy_text, "Herald detector policy: D1, D2 or either");
    auto* delta_opt = estimate->add_option("--delta-n", delta_n, "Cycle offset for the second read");

    auto* calibrate = app.add_subcommand("calibrate", "Invert sideband counts into n_th, p_b, p_r, g0");
    add_common(calibrate, true);

    auto* bound = app.add_subcommand("gaussian-bound", "Minimize g2 over displaced squeezed thermal states");
    add_common(bound, false);
    phbt::cli::BoundOptions bound_options;
    std::string theta_text = "twice_phi";
    std::string window_text;
    bound->add_option("--n-init", bound_options.n_init, "Initial thermal occupation");
    bound->add_option("--theta", theta_text, "Phase constraint: twice_phi or free");
    bound->add_option("--window", window_text, "Occupation window lo,hi");

    auto* sweep = app.add_subcommand("sweep", "Tabulate g2 estimates along an axis");
    add_common(sweep, true);
    std::string axis_text;
    std::string values_text;
    sweep->add_option("--axis", axis_text, "delta_n or n_init")->required();
    sweep->add_option("--values", values_text, "Comma-separated axis values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        phbt::cli::Overrides overrides;
        if (!app.got_subcommand(bound) && !app.got_subcommand(calibrate)) {
            for (auto* sub : {predict, simulate, estimate, sweep}) {
                if (!app.got_subcommand(sub)) continue;
                if (sub->count("--seed") > 0) overrides.seed = seed;
                if (sub->count("--cycles") > 0) overrides.cycles = cycles;
                if (sub->count("--dim") > 0) overrides.dim = dim;
            }
        }
        auto scenario = [&] {
            return phbt::cli::with_overrides(phbt::cli::read_json(config_path), overrides);
        };

        if (app.got_subcommand(predict)) {
            emit(phbt::cli::cmd_predict(scenario()), out_path);
        } else if (app.got_subcommand(simulate)) {
            emit(phbt::cli::cmd_simulate(scenario(), out_path), "");
        } else if (app.got_subcommand(estimate)) {
            std::optional<phbt::cli::ScenarioConfig> config;
            if (!config_path.empty()) config = scenario();
            phbt::cli::EstimateOptions options;
            if (!policy_text.empty()) options.policy = phbt::inference::herald_policy_from_string(policy_text);
            if (delta_opt->count() > 0) options.delta_n = delta_n;
            emit(phbt::cli::cmd_estimate(record_path, config, options), out_path);
        } else if (app.got_subcommand(calibrate)) {
            emit(phbt::cli::cmd_calibrate(phbt::cli::read_json(config_path)), out_path);
        } else if (app.got_subcommand(bound)) {
            if (theta_text == "free") {
                bound_options.free_phase = true;
            } else if (theta_text != "twice_phi") {
                throw phbt::ConfigError("--theta must be twice_phi or free");
            }
            if (!window_text.empty()) {
                const auto w = parse_list(window_text, "--window");
                if (w.size() != 2 || !(w[0] >= 0.0 && w[1] > w[0])) {
                    throw phbt::ConfigError("--window expects lo,hi with 0 <= lo < hi");
                }
                bound_options.window = std::pair{w[0], w[1]};
            }
            if (bound->count("--dim") > 0) bound_options.dim = dim;
            emit(phbt::cli::cmd_gaussian_bound(bound_options), out_path);
        } else if (app.got_subcommand(sweep)) {
            const auto axis = phbt::cli::sweep_axis_from_string(axis_text);
            std::vector<double> values;
            if (!values_text.empty()) {
                values = parse_list(values_text, "--values");
            } else if (axis == phbt::cli::SweepAxis::delta_n) {
                values = {0, 1, 2, 3, 4, 5};
            } else {
                values = {0.2, 0.5, 1.0, 2.0};
            }
            const auto rows = phbt::cli::cmd_sweep(scenario(), axis, values);
            if (!out_path.empty()) phbt::cli::write_sweep_csv(rows, out_path);
            emit(phbt::cli::sweep_to_json(axis, rows), "");
        }
    } catch (const phbt::ConfigError& e) {
        return fail(kExitConfig, e.what());
    } catch (const phbt::NumericError& e) {
        return fail(kExitNumeric, e.what());
    } catch (const phbt::IoError& e) {
        return fail(kExitIo, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(kExitIo, e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
    return 0;
}
