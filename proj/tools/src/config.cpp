#include "config.hpp"

#include "phbt/constants.hpp"
#include "phbt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace phbt::cli {

namespace {

constexpr double kFemto = 1e-15;
constexpr double kNano = 1e-9;
constexpr double kMicro = 1e-6;

[[noreturn]] void fail(const std::string& path, const std::string& message)
{
    throw ConfigError(path + ": " + message);
}

void require_positive(const ObjectReader& r, const char* key, double value)
{
    if (!(value > 0.0)) fail(r.path_of(key), "must be > 0");
}

void require_non_negative(const ObjectReader& r, const char* key, double value)
{
    if (!(value >= 0.0)) fail(r.path_of(key), "must be >= 0");
}

dynamics::DeviceParams parse_device(const json& node, const std::string& path)
{
    const ObjectReader r(node, path);
    auto device = dynamics::DeviceParams::reference();
    const double two_pi = constants::two_pi;
    device.g0 = two_pi * 1e3 * r.number_or("g0_over_2pi_kHz", device.g0 / two_pi / 1e3);
    device.kappa = two_pi * 1e6 * r.number_or("kappa_over_2pi_MHz", device.kappa / two_pi / 1e6);
    device.kappa_e =
        two_pi * 1e6 * r.number_or("kappa_e_over_2pi_MHz", device.kappa_e / two_pi / 1e6);
    device.omega_m =
        two_pi * 1e9 * r.number_or("omega_m_over_2pi_GHz", device.omega_m / two_pi / 1e9);
    if (r.has("wavelength_nm")) {
        const double nm = r.number("wavelength_nm");
        require_positive(r, "wavelength_nm", nm);
        device.omega_c = dynamics::DeviceParams::omega_c_from_wavelength(nm * kNano);
    }
    const double qm = r.number_or("Q_m", device.omega_m / device.gamma);
    require_positive(r, "Q_m", qm);
    device.gamma = device.omega_m / qm;
    r.finish();
    for (const char* key : {"g0_over_2pi_kHz", "kappa_over_2pi_MHz", "kappa_e_over_2pi_MHz",
                            "omega_m_over_2pi_GHz"}) {
        if (r.has(key)) require_positive(r, key, r.number(key));
    }
    try {
        device.validate();
    } catch (const ConfigError& e) {
        fail(path, e.what());
    }
    return device;
}

double pulse_energy(const ObjectReader& r, const dynamics::DeviceParams& device,
                    const char* energy_key, const char* prob_key, bool blue)
{
    const bool by_energy = r.has(energy_key);
    const bool by_prob = r.has(prob_key);
    if (by_energy == by_prob) {
        fail(r.path_of(energy_key), std::string("give exactly one of ") + energy_key + " or " + prob_key);
    }
    if (by_energy) {
        const double e = r.number(energy_key);
        require_positive(r, energy_key, e);
        return e * kFemto;
    }
    const double p = r.number(prob_key);
    if (!(p > 0.0 && p < 1.0)) fail(r.path_of(prob_key), "must lie in (0, 1)");
    const double x = blue ? std::log1p(p) : -std::log1p(-p);
    return dynamics::energy_for_exponent(device, x);
}

dynamics::PulseSchedule parse_schedule(const json& node, const std::string& path,
                                       const dynamics::DeviceParams& device)
{
    const ObjectReader r(node, path);
    const double pump = pulse_energy(r, device, "pump_energy_fJ", "pump_p_b", true);
    const double read = pulse_energy(r, device, "read_energy_fJ", "read_p_r", false);
    const double fwhm = r.number_or("fwhm_ns", 32.0);
    const double delay = r.number("delay_ns");
    const double period = r.number_or("period_us", 50.0);
    require_positive(r, "fwhm_ns", fwhm);
    require_positive(r, "delay_ns", delay);
    require_positive(r, "period_us", period);
    r.finish();
    try {
        return dynamics::PulseSchedule::make(pump, read, fwhm * kNano, delay * kNano, period * kMicro);
    } catch (const ConfigError& e) {
        fail(path, e.what());
    }
}

HeatingConfig parse_heating(const json& node, const std::string& path)
{
    const ObjectReader r(node, path);
    HeatingConfig h;
    h.n_init = r.number_or("n_init", 0.0);
    h.bath_n = r.number_or("bath_n", 0.0);
    h.pump_influx = r.number_or("pump_influx_per_us", 0.0) / kMicro;
    h.read_influx = r.number_or("read_influx_per_us", 0.0) / kMicro;
    require_non_negative(r, "n_init", h.n_init);
    require_non_negative(r, "bath_n", h.bath_n);
    require_non_negative(r, "pump_influx_per_us", h.pump_influx);
    require_non_negative(r, "read_influx_per_us", h.read_influx);
    if (r.has("calibrate_read_occupancy")) {
        const double target = r.number("calibrate_read_occupancy");
        require_non_negative(r, "calibrate_read_occupancy", target);
        if (!(h.pump_influx + h.read_influx > 0.0)) {
            fail(r.path_of("calibrate_read_occupancy"), "needs a non-zero influx shape to scale");
        }
        h.calibrate_read_occupancy = target;
    }
    r.finish();
    return h;
}

trajectories::DetectorModel parse_detector(const json& node, const std::string& path)
{
    const ObjectReader r(node, path);
    trajectories::DetectorModel d;
    d.eta = r.number("eta");
    d.dark_rate = r.number_or("dark_rate_Hz", 0.0);
    d.dead_time = r.number_or("dead_time_ns", 0.0) * kNano;
    d.paralyzable = r.boolean_or("paralyzable", false);
    if (!(d.eta >= 0.0 && d.eta <= 1.0)) fail(r.path_of("eta"), "must lie in [0, 1]");
    require_non_negative(r, "dark_rate_Hz", d.dark_rate);
    require_non_negative(r, "dead_time_ns", d.dead_time);
    if (d.paralyzable) fail(r.path_of("paralyzable"), "only non-paralyzable dead time is supported");
    r.finish();
    return d;
}

std::optional<counting::Window> parse_window(const ObjectReader& r, const char* key)
{
    if (!r.has(key)) return std::nullopt;
    const json& node = r.child(key);
    if (!node.is_array() || node.size() != 2 || !node[0].is_number() || !node[1].is_number()) {
        fail(r.path_of(key), "expected [begin_ns, end_ns]");
    }
    counting::Window w{node[0].get<double>() * kNano, node[1].get<double>() * kNano};
    if (!(w.begin >= 0.0 && w.end > w.begin)) fail(r.path_of(key), "needs 0 <= begin < end");
    return w;
}

RunConfig parse_run(const json& node, const std::string& path)
{
    const ObjectReader r(node, path);
    RunConfig run;
    run.n_cycles = r.count_or("n_cycles", run.n_cycles);
    run.seed = r.count_or("seed", run.seed);
    run.max_cycles = r.count_or("max_cycles", run.max_cycles);
    run.dim = static_cast<int>(r.count_or("dim", static_cast<std::uint64_t>(run.dim)));
    run.splitter_ratio = r.number_or("splitter_ratio", run.splitter_ratio);
    try {
        run.herald_policy = inference::herald_policy_from_string(r.string_or("herald_policy", "D1"));
    } catch (const ConfigError& e) {
        fail(r.path_of("herald_policy"), e.what());
    }
    run.delta_n = r.integer_or("delta_n", 0);
    run.herald_window = parse_window(r, "herald_window_ns");
    run.read_window = parse_window(r, "read_window_ns");
    run.grid_points = static_cast<int>(r.count_or("grid_points", static_cast<std::uint64_t>(run.grid_points)));
    run.threads = static_cast<unsigned>(r.count_or("threads", 0));
    if (run.n_cycles < 1) fail(r.path_of("n_cycles"), "must be >= 1");
    if (run.dim < 4 || run.dim > 400) fail(r.path_of("dim"), "must lie in [4, 400]");
    if (!(run.splitter_ratio > 0.0 && run.splitter_ratio < 1.0)) {
        fail(r.path_of("splitter_ratio"), "must lie in (0, 1)");
    }
    if (run.grid_points < 8) fail(r.path_of("grid_points"), "must be >= 8");
    r.finish();
    return run;
}

}  // namespace

ObjectReader::ObjectReader(const json& object, std::string path)
    : object_(object), path_(std::move(path))
{
    if (!object_.is_object()) fail(path_, "expected an object");
}

bool ObjectReader::has(const char* key) const
{
    const bool present = object_.contains(key);
    if (present) seen_.emplace_back(key);
    return present;
}

std::string ObjectReader::path_of(const char* key) const { return path_ + "." + key; }

double ObjectReader::number(const char* key) const
{
    if (!has(key)) fail(path_of(key), "required field missing");
    const auto& v = object_.at(key);
    if (!v.is_number()) fail(path_of(key), "expected a number");
    const double value = v.get<double>();
    if (!std::isfinite(value)) fail(path_of(key), "must be finite");
    return value;
}

double ObjectReader::number_or(const char* key, double fallback) const
{
    return object_.contains(key) ? number(key) : fallback;
}

std::uint64_t ObjectReader::count_or(const char* key, std::uint64_t fallback) const
{
    if (!has(key)) return fallback;
    const auto& v = object_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
        // Allow 1e7-style literals when they are exact non-negative integers.
        const double d = v.get<double>();
        if (d >= 0.0 && d < 1.8e19 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
    }
    fail(path_of(key), "expected a non-negative integer");
}

std::int64_t ObjectReader::integer_or(const char* key, std::int64_t fallback) const
{
    if (!has(key)) return fallback;
    const auto& v = object_.at(key);
    if (!v.is_number_integer()) fail(path_of(key), "expected an integer");
    return v.get<std::int64_t>();
}

std::string ObjectReader::string_or(const char* key, const std::string& fallback) const
{
    if (!has(key)) return fallback;
    const auto& v = object_.at(key);
    if (!v.is_string()) fail(path_of(key), "expected a string");
    return v.get<std::string>();
}

bool ObjectReader::boolean_or(const char* key, bool fallback) const
{
    if (!has(key)) return fallback;
    const auto& v = object_.at(key);
    if (!v.is_boolean()) fail(path_of(key), "expected true or false");
    return v.get<bool>();
}

const json& ObjectReader::child(const char* key) const
{
    if (!has(key)) fail(path_of(key), "required field missing");
    return object_.at(key);
}

void ObjectReader::finish() const
{
    for (const auto& item : object_.items()) {
        if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end()) {
            fail(path_ + "." + item.key(), "unknown key");
        }
    }
}

dynamics::HeatingModel HeatingConfig::shape(const dynamics::PulseSchedule& schedule) const
{
    return dynamics::HeatingModel::from_onsets(n_init, bath_n,
                                               {{schedule.pump.envelope.begin(), pump_influx},
                                                {schedule.read.envelope.begin(), read_influx}},
                                               schedule.period);
}

ScenarioConfig parse_config(const json& doc)
{
    const ObjectReader r(doc, "$");
    if (!r.has("schema")) fail("$.schema", "required field missing (expected 1)");
    if (!doc.at("schema").is_number_integer() || doc.at("schema").get<int>() != 1) {
        fail("$.schema", "unsupported schema version (expected 1)");
    }
    ScenarioConfig config;
    config.device = r.has("device") ? parse_device(r.child("device"), "$.device")
                                    : dynamics::DeviceParams::reference();
    config.schedule = parse_schedule(r.child("schedule"), "$.schedule", config.device);
    config.heating = r.has("heating") ? parse_heating(r.child("heating"), "$.heating") : HeatingConfig{};
    const json& dets = r.child("detectors");
    if (!dets.is_array() || dets.size() != 2) fail("$.detectors", "expected an array of two detectors");
    for (std::size_t i = 0; i < 2; ++i) {
        config.detectors[i] = parse_detector(dets[i], "$.detectors[" + std::to_string(i) + "]");
    }
    config.run = r.has("run") ? parse_run(r.child("run"), "$.run") : RunConfig{};
    r.finish();
    if (config.run.n_cycles > config.run.max_cycles) {
        fail("$.run.n_cycles", "exceeds run.max_cycles = " + std::to_string(config.run.max_cycles) +
                                   "; split the run over seeds or raise max_cycles");
    }
    config.source = doc;
    return config;
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
}

ScenarioConfig load_config(const std::filesystem::path& path) { return parse_config(read_json(path)); }

ResolvedHeating resolve_heating(const ScenarioConfig& config)
{
    const auto shape = config.heating.shape(config.schedule);
    if (!config.heating.calibrate_read_occupancy) return {shape, 1.0};
    counting::PredictOptions options;
    options.dim = config.run.dim;
    options.herald_window = config.run.herald_window;
    options.read_window = config.run.read_window;
    const auto cal = counting::calibrate_heating(config.device, config.schedule, shape,
                                                 *config.heating.calibrate_read_occupancy, options);
    return {cal.heating, cal.scale};
}

counting::Window herald_window(const ScenarioConfig& config)
{
    return config.run.herald_window.value_or(counting::default_herald_window(config.schedule));
}

counting::Window read_window(const ScenarioConfig& config)
{
    return config.run.read_window.value_or(counting::default_read_window(config.schedule));
}

double herald_efficiency(const ScenarioConfig& config)
{
    const auto eff = trajectories::split_efficiencies(config.detectors, config.run.splitter_ratio);
    switch (config.run.herald_policy) {
    case inference::HeraldPolicy::d1: return eff[0];
    case inference::HeraldPolicy::d2: return eff[1];
    case inference::HeraldPolicy::either: return std::min(1.0, eff[0] + eff[1]);
    }
    return eff[0];
}

}  // namespace phbt::cli
