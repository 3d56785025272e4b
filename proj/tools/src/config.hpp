#pragma once

// Scenario configuration: JSON with `schema: 1`, unit-suffixed keys, strict key sets.

#include "phbt/counting.hpp"
#include "phbt/dynamics.hpp"
#include "phbt/inference.hpp"
#include "phbt/trajectories.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace phbt::cli {

using nlohmann::json;

/// Influx shape: constant rates switched on at the pump and read envelope starts.
/// With calibrate_read_occupancy set, both rates are rescaled by one common factor
/// until the count-based unconditional read occupation equals the target.
struct HeatingConfig {
    double n_init = 0.0;
    double bath_n = 0.0;
    double pump_influx = 0.0;  // phonons/s
    double read_influx = 0.0;  // phonons/s
    std::optional<double> calibrate_read_occupancy;

    [[nodiscard]] dynamics::HeatingModel shape(const dynamics::PulseSchedule& schedule) const;
};

struct RunConfig {
    std::uint64_t n_cycles = 100'000;
    std::uint64_t seed = 1;
    std::uint64_t max_cycles = 100'000'000;
    int dim = hilbert::kDefaultDim;
    double splitter_ratio = 0.5;
    inference::HeraldPolicy herald_policy = inference::HeraldPolicy::d1;
    std::int64_t delta_n = 0;
    std::optional<counting::Window> herald_window;
    std::optional<counting::Window> read_window;
    int grid_points = 96;
    unsigned threads = 0;
};

struct ScenarioConfig {
    dynamics::DeviceParams device;
    dynamics::PulseSchedule schedule;
    HeatingConfig heating;
    std::array<trajectories::DetectorModel, 2> detectors;
    RunConfig run;
    json source;  // the validated input, echoed into outputs
};

/// Throws ConfigError with a `$.path.to.field` prefix on any violation.
[[nodiscard]] ScenarioConfig parse_config(const json& doc);
[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path& path);
[[nodiscard]] json read_json(const std::filesystem::path& path);

/// Heating model after the optional calibration step, with the scale applied.
struct ResolvedHeating {
    dynamics::HeatingModel model;
    double scale = 1.0;
};
[[nodiscard]] ResolvedHeating resolve_heating(const ScenarioConfig& config);

[[nodiscard]] counting::Window herald_window(const ScenarioConfig& config);
[[nodiscard]] counting::Window read_window(const ScenarioConfig& config);

/// Herald efficiency seen by the predict path for the configured policy.
[[nodiscard]] double herald_efficiency(const ScenarioConfig& config);

/// Strict object reader used by every config block.
class ObjectReader {
public:
    ObjectReader(const json& object, std::string path);

    [[nodiscard]] bool has(const char* key) const;
    [[nodiscard]] double number(const char* key) const;
    [[nodiscard]] double number_or(const char* key, double fallback) const;
    [[nodiscard]] std::uint64_t count_or(const char* key, std::uint64_t fallback) const;
    [[nodiscard]] std::int64_t integer_or(const char* key, std::int64_t fallback) const;
    [[nodiscard]] std::string string_or(const char* key, const std::string& fallback) const;
    [[nodiscard]] bool boolean_or(const char* key, bool fallback) const;
    [[nodiscard]] const json& child(const char* key) const;
    [[nodiscard]] std::string path_of(const char* key) const;
    /// Reject keys that were never read.
    void finish() const;

private:
    const json& object_;
    std::string path_;
    mutable std::vector<std::string> seen_;
};

}  // namespace phbt::cli
