#pragma once

#include "config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace phbt::cli {

/// Overrides shared by the scenario-driven subcommands.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> cycles;
    std::optional<int> dim;
};

/// Apply command-line overrides to a parsed config document and re-validate.
[[nodiscard]] ScenarioConfig with_overrides(const json& doc, const Overrides& overrides);

[[nodiscard]] json cmd_predict(const ScenarioConfig& config);
[[nodiscard]] json cmd_simulate(const ScenarioConfig& config, const std::filesystem::path& out);

struct EstimateOptions {
    std::optional<inference::HeraldPolicy> policy;
    std::optional<std::int64_t> delta_n;
};
/// Windows and defaults come from `config` when given, else from the record sidecar.
[[nodiscard]] json cmd_estimate(const std::filesystem::path& record_path,
                                const std::optional<ScenarioConfig>& config,
                                const EstimateOptions& options);
[[nodiscard]] json estimate_to_json(const inference::G2Estimate& estimate);

[[nodiscard]] json cmd_calibrate(const json& inputs);

struct BoundOptions {
    double n_init = 0.2;
    bool free_phase = false;
    std::optional<std::pair<double, double>> window;
    int dim = hilbert::kDefaultDim;
};
[[nodiscard]] json cmd_gaussian_bound(const BoundOptions& options);

enum class SweepAxis { delta_n, n_init };
[[nodiscard]] SweepAxis sweep_axis_from_string(const std::string& text);

struct SweepRow {
    double axis_value = 0.0;
    double g2 = 0.0;
    double sigma_minus = 0.0;
    double sigma_plus = 0.0;
};
[[nodiscard]] std::vector<SweepRow> cmd_sweep(const ScenarioConfig& config, SweepAxis axis,
                                              const std::vector<double>& values);
/// Header `axis_value,g2,sigma_minus,sigma_plus`.
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
[[nodiscard]] json sweep_to_json(SweepAxis axis, const std::vector<SweepRow>& rows);

}  // namespace phbt::cli
