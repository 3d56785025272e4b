#pragma once

// Synthetic click records: per-cycle outcomes drawn from the counting module's
// window-level probability tree, then passed through a detector model.

#include "phbt/counting.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace phbt::trajectories {

enum class WindowTag : std::uint8_t { pump, read };

[[nodiscard]] const char* to_string(WindowTag tag);
[[nodiscard]] WindowTag window_tag_from_string(const std::string& text);

struct DetectorModel {
    double eta = 0.0;        // total detection efficiency at a 50:50 splitter
    double dark_rate = 0.0;  // 1/s
    double dead_time = 0.0;  // s
    bool paralyzable = false;

    void validate(const char* what) const;
};

struct ClickEvent {
    std::uint64_t cycle = 0;
    int detector = 1;   // 1 or 2
    std::int64_t t_ps = 0;  // timestamp within the cycle, picoseconds
    WindowTag window = WindowTag::pump;

    [[nodiscard]] double time() const { return static_cast<double>(t_ps) * 1e-12; }
    friend bool operator==(const ClickEvent&, const ClickEvent&) = default;
};

struct ClickRecord {
    std::uint64_t cycles = 0;
    std::uint64_t seed = 0;
    double period = 0.0;  // T_r in seconds
    std::vector<ClickEvent> events;
    std::string metadata = "{}";  // JSON object text echoed into the sidecar

    /// Timestamps within [0, T_r), cycles in range, events time-ordered within a cycle.
    void validate() const;
};

/// Counter-based SplitMix64 stream: one independent sequence per (seed, cycle, lane).
class CycleRng {
public:
    using result_type = std::uint64_t;

    CycleRng(std::uint64_t seed, std::uint64_t cycle, std::uint64_t lane = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();
    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform();

private:
    std::uint64_t state_;
};

/// Non-paralyzable dead time after Bernoulli(eta) thinning. Events must be ordered
/// by (cycle, time); the dead time restarts each cycle (T_r is microseconds).
[[nodiscard]] std::vector<ClickEvent> apply_detector(const std::vector<ClickEvent>& ideal_events,
                                                     const DetectorModel& detector,
                                                     std::uint64_t seed);

struct SimulationOptions {
    counting::TreeOptions tree;
    unsigned threads = 0;  // 0: hardware concurrency
};

/// Draw n_cycles from a precomputed tree. Detector efficiencies are already inside
/// the tree; only dark counts and dead time are applied here.
[[nodiscard]] ClickRecord simulate_cycles(const counting::CycleTree& tree,
                                          const std::array<DetectorModel, 2>& detectors,
                                          double period, std::uint64_t n_cycles,
                                          std::uint64_t seed, unsigned threads = 0);

/// Efficiencies per detector behind a splitter with ratio r (fraction to D1):
/// 2r·η1 and 2(1−r)·η2, so the nominal η_i hold at 50:50.
[[nodiscard]] std::array<double, 2> split_efficiencies(const std::array<DetectorModel, 2>& detectors,
                                                       double splitter_ratio);

[[nodiscard]] ClickRecord simulate_cycles(const dynamics::DeviceParams& device,
                                          const dynamics::PulseSchedule& schedule,
                                          const dynamics::HeatingModel& heating,
                                          const std::array<DetectorModel, 2>& detectors,
                                          double splitter_ratio, std::uint64_t n_cycles,
                                          std::uint64_t seed,
                                          const SimulationOptions& options = {});

/// CSV `cycle,detector,t_ns,window` plus `<stem>.meta.json` next to it.
void write_record(const ClickRecord& record, const std::filesystem::path& csv_path);
[[nodiscard]] ClickRecord read_record(const std::filesystem::path& csv_path);
[[nodiscard]] std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

}  // namespace phbt::trajectories
