#include "phbt/trajectories.hpp"

#include "phbt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

namespace phbt::trajectories {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::int64_t to_ps(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 1e12)); }

bool event_order(const ClickEvent& a, const ClickEvent& b)
{
    if (a.cycle != b.cycle) return a.cycle < b.cycle;
    if (a.t_ps != b.t_ps) return a.t_ps < b.t_ps;
    return a.detector < b.detector;
}

// Outcome table flattened over (herald, read) masks, skipping the empty outcome.
struct OutcomeTable {
    std::array<double, 15> cumulative{};
    std::array<std::pair<unsigned, unsigned>, 15> outcome{};
    double total = 0.0;

    explicit OutcomeTable(const counting::CycleTree& tree)
    {
        std::size_t k = 0;
        for (unsigned h = 0; h < 4; ++h) {
            for (unsigned r = 0; r < 4; ++r) {
                if (h == 0 && r == 0) continue;
                total += tree.joint[h][r];
                cumulative[k] = total;
                outcome[k] = {h, r};
                ++k;
            }
        }
        if (total > 1.0) throw NumericError("simulate_cycles: click probabilities exceed one");
    }
};

struct DarkCounts {
    std::array<std::poisson_distribution<int>, 2> herald;
    std::array<std::poisson_distribution<int>, 2> read;
    std::array<bool, 2> active{};
};

void generate_chunk(const counting::CycleTree& tree, const OutcomeTable& table,
                    const std::array<DetectorModel, 2>& detectors, std::uint64_t seed,
                    std::uint64_t first, std::uint64_t last, std::vector<ClickEvent>& out)
{
    DarkCounts dark;
    for (int d = 0; d < 2; ++d) {
        const double rate = detectors[d].dark_rate;
        dark.active[d] = rate > 0.0;
        dark.herald[d] = std::poisson_distribution<int>(std::max(rate * tree.herald_window.length(), 1e-300));
        dark.read[d] = std::poisson_distribution<int>(std::max(rate * tree.read_window.length(), 1e-300));
    }
    std::vector<ClickEvent> cycle_events;
    std::array<std::int64_t, 2> blind_until{};
    for (std::uint64_t cycle = first; cycle < last; ++cycle) {
        CycleRng rng(seed, cycle);
        cycle_events.clear();
        const double u = rng.uniform();
        if (u < table.total) {
            const auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), u);
            const auto [h, r] = table.outcome[static_cast<std::size_t>(it - table.cumulative.begin())];
            for (int d = 0; d < 2; ++d) {
                if ((h >> d) & 1u) {
                    cycle_events.push_back({cycle, d + 1, to_ps(tree.herald_profile.sample(rng.uniform())),
                                            WindowTag::pump});
                }
            }
            if (r == 3u) {
                auto [t1, t2] = tree.read_correlation[h].sample(rng.uniform(), rng.uniform(), rng.uniform());
                if (rng.uniform() < 0.5) std::swap(t1, t2);
                cycle_events.push_back({cycle, 1, to_ps(t1), WindowTag::read});
                cycle_events.push_back({cycle, 2, to_ps(t2), WindowTag::read});
            } else if (r != 0u) {
                const int d = r == 1u ? 1 : 2;
                cycle_events.push_back({cycle, d, to_ps(tree.read_profile[h].sample(rng.uniform())),
                                        WindowTag::read});
            }
        }
        for (int d = 0; d < 2; ++d) {
            if (!dark.active[d]) continue;
            CycleRng dark_rng(seed, cycle, 1 + static_cast<std::uint64_t>(d));
            const int nh = dark.herald[d](dark_rng);
            for (int k = 0; k < nh; ++k) {
                const double t = tree.herald_window.begin + dark_rng.uniform() * tree.herald_window.length();
                cycle_events.push_back({cycle, d + 1, to_ps(t), WindowTag::pump});
            }
            const int nr = dark.read[d](dark_rng);
            for (int k = 0; k < nr; ++k) {
                const double t = tree.read_window.begin + dark_rng.uniform() * tree.read_window.length();
                cycle_events.push_back({cycle, d + 1, to_ps(t), WindowTag::read});
            }
        }
        if (cycle_events.empty()) continue;
        std::sort(cycle_events.begin(), cycle_events.end(), event_order);

        // Non-paralyzable dead time per detector within the cycle.
        blind_until = {std::numeric_limits<std::int64_t>::min(), std::numeric_limits<std::int64_t>::min()};
        for (const auto& e : cycle_events) {
            const auto d = static_cast<std::size_t>(e.detector - 1);
            if (e.t_ps < blind_until[d]) continue;
            blind_until[d] = e.t_ps + to_ps(detectors[d].dead_time);
            out.push_back(e);
        }
    }
}

}  // namespace

const char* to_string(WindowTag tag) { return tag == WindowTag::pump ? "pump" : "read"; }

WindowTag window_tag_from_string(const std::string& text)
{
    if (text == "pump") return WindowTag::pump;
    if (text == "read") return WindowTag::read;
    throw IoError("unknown window tag '" + text + "'");
}

void DetectorModel::validate(const char* what) const
{
    std::ostringstream msg;
    if (!(eta >= 0.0 && eta <= 1.0)) msg << what << ".eta must lie in [0, 1]";
    else if (!(dark_rate >= 0.0)) msg << what << ".dark_rate must be >= 0";
    else if (!(dead_time >= 0.0)) msg << what << ".dead_time must be >= 0";
    else if (paralyzable) msg << what << ": paralyzable dead time is not supported";
    else return;
    throw ConfigError(msg.str());
}

void ClickRecord::validate() const
{
    const auto period_ps = to_ps(period);
    for (std::size_t k = 0; k < events.size(); ++k) {
        const auto& e = events[k];
        if (e.cycle >= cycles) throw IoError("ClickRecord: event cycle index out of range");
        if (e.detector != 1 && e.detector != 2) throw IoError("ClickRecord: detector must be 1 or 2");
        if (e.t_ps < 0 || (period_ps > 0 && e.t_ps >= period_ps)) {
            throw IoError("ClickRecord: timestamp outside [0, T_r)");
        }
        if (k > 0) {
            const auto& prev = events[k - 1];
            if (prev.cycle > e.cycle || (prev.cycle == e.cycle && prev.t_ps > e.t_ps)) {
                throw IoError("ClickRecord: events are not time-ordered");
            }
        }
    }
}

CycleRng::CycleRng(std::uint64_t seed, std::uint64_t cycle, std::uint64_t lane)
    : state_(mix(seed + kGolden * (mix(cycle) + kGolden * (lane + 1))))
{
}

CycleRng::result_type CycleRng::operator()()
{
    state_ += kGolden;
    return mix(state_);
}

double CycleRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::vector<ClickEvent> apply_detector(const std::vector<ClickEvent>& ideal_events,
                                       const DetectorModel& detector, std::uint64_t seed)
{
    detector.validate("detector");
    std::vector<ClickEvent> out;
    std::int64_t blind_until = 0;
    std::uint64_t current_cycle = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t index_in_cycle = 0;
    const std::int64_t dead = to_ps(detector.dead_time);
    for (std::size_t k = 0; k < ideal_events.size(); ++k) {
        const auto& e = ideal_events[k];
        if (k > 0 && event_order(e, ideal_events[k - 1])) {
            throw ConfigError("apply_detector: events must be time-ordered");
        }
        if (e.cycle != current_cycle) {
            current_cycle = e.cycle;
            index_in_cycle = 0;
            blind_until = std::numeric_limits<std::int64_t>::min();
        }
        CycleRng rng(seed, e.cycle, 16 + index_in_cycle++);
        if (!(rng.uniform() < detector.eta)) continue;
        if (e.t_ps < blind_until) continue;
        blind_until = e.t_ps + dead;
        out.push_back(e);
    }
    return out;
}

ClickRecord simulate_cycles(const counting::CycleTree& tree,
                            const std::array<DetectorModel, 2>& detectors, double period,
                            std::uint64_t n_cycles, std::uint64_t seed, unsigned threads)
{
    if (n_cycles < 1) throw ConfigError("simulate_cycles: n_cycles must be >= 1");
    detectors[0].validate("detectors[0]");
    detectors[1].validate("detectors[1]");
    if (!(period > tree.read_window.end)) {
        throw ConfigError("simulate_cycles: period must exceed the read window");
    }
    const OutcomeTable table(tree);

    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, (n_cycles + 99'999) / 100'000));
    workers = std::max(1u, workers);
    std::vector<std::vector<ClickEvent>> parts(workers);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::uint64_t chunk = (n_cycles + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::uint64_t first = std::min(n_cycles, w * chunk);
        const std::uint64_t last = std::min(n_cycles, first + chunk);
        pool.emplace_back([&, w, first, last] {
            try {
                generate_chunk(tree, table, detectors, seed, first, last, parts[w]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    ClickRecord record;
    record.cycles = n_cycles;
    record.seed = seed;
    record.period = period;
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    record.events.reserve(total);
    for (auto& p : parts) record.events.insert(record.events.end(), p.begin(), p.end());
    return record;
}

std::array<double, 2> split_efficiencies(const std::array<DetectorModel, 2>& detectors,
                                         double splitter_ratio)
{
    if (!(splitter_ratio > 0.0 && splitter_ratio < 1.0)) {
        throw ConfigError("splitter_ratio must lie in (0, 1)");
    }
    const double e1 = 2.0 * splitter_ratio * detectors[0].eta;
    const double e2 = 2.0 * (1.0 - splitter_ratio) * detectors[1].eta;
    if (e1 > 1.0 || e2 > 1.0) throw ConfigError("splitter_ratio pushes an efficiency above one");
    return {e1, e2};
}

ClickRecord simulate_cycles(const dynamics::DeviceParams& device,
                            const dynamics::PulseSchedule& schedule,
                            const dynamics::HeatingModel& heating,
                            const std::array<DetectorModel, 2>& detectors, double splitter_ratio,
                            std::uint64_t n_cycles, std::uint64_t seed,
                            const SimulationOptions& options)
{
    detectors[0].validate("detectors[0]");
    detectors[1].validate("detectors[1]");
    const auto eff = split_efficiencies(detectors, splitter_ratio);
    const auto tree = counting::cycle_tree(device, schedule, heating, eff[0], eff[1], options.tree);
    return simulate_cycles(tree, detectors, schedule.period, n_cycles, seed, options.threads);
}

}  // namespace phbt::trajectories
