#pragma once

// Photon-counting decomposition: heralded states, intensities, correlations and
// the per-cycle click-probability tree used by the trajectory generator.

#include "phbt/dynamics.hpp"

#include <array>
#include <optional>
#include <vector>

namespace phbt::counting {

using dynamics::DensityMatrix;
using dynamics::DeviceParams;
using dynamics::HeatingModel;
using dynamics::Matrix;
using dynamics::Pulse;
using dynamics::PulseSchedule;
using dynamics::ReducedModel;

struct Window {
    double begin = 0.0;
    double end = 0.0;

    [[nodiscard]] double length() const { return end - begin; }
    [[nodiscard]] bool contains(double t) const { return t >= begin && t <= end; }
    void validate(const char* what) const;
};

/// Herald window: pump centre − 2 FWHM to pump centre + min(2 FWHM, t_d/2).
[[nodiscard]] Window default_herald_window(const PulseSchedule& schedule);
/// Read window: read centre − min(2 FWHM, t_d/2) to read centre + 2 FWHM.
[[nodiscard]] Window default_read_window(const PulseSchedule& schedule);

struct HeraldResult {
    DensityMatrix state;      // ρ_click at window.end
    double click_prob = 0.0;  // P(≥1 detection in the window)
    Window window;
};

/// Herald on ≥1 detection of `monitor` (T − S), starting from `initial` at t0.
/// Uses the populations fast path when `initial` is diagonal.
[[nodiscard]] HeraldResult herald(const DensityMatrix& initial, double t0,
                                  const ReducedModel& model, const dynamics::Monitor& monitor);

/// Single-pulse convenience: the state is given at the start of the pump support.
[[nodiscard]] HeraldResult herald(const DensityMatrix& initial, const DeviceParams& device,
                                  const Pulse& pump, const HeatingModel& heating,
                                  double detect_eff, const Window& window);

/// Same as herald() but always on the full density matrix (validation route).
[[nodiscard]] HeraldResult herald_dense(const DensityMatrix& initial, double t0,
                                        const ReducedModel& model,
                                        const dynamics::Monitor& monitor);

/// Normalized weight p(t) on a window, tabulated on a uniform grid.
class EffectivePulseShape {
public:
    /// Pulse envelope restricted to `window`, optionally passed through a
    /// single-pole low-pass of the given bandwidth (rad/s) first.
    static EffectivePulseShape from_pulse(const Pulse& pulse, const Window& window,
                                          std::optional<double> filter_bandwidth = {},
                                          int samples = 2001);
    static EffectivePulseShape flat(const Window& window, int samples = 2001);

    [[nodiscard]] double value(double t) const;
    [[nodiscard]] const Window& window() const { return window_; }
    [[nodiscard]] std::optional<double> filter_bandwidth() const { return bandwidth_; }
    [[nodiscard]] const std::vector<double>& samples() const { return values_; }

private:
    EffectivePulseShape(Window window, std::vector<double> values, std::optional<double> bw);

    Window window_;
    std::vector<double> values_;
    double step_ = 0.0;
    std::optional<double> bandwidth_;
};

/// Piecewise-linear density on a uniform grid, used for timestamp sampling.
struct TimeProfile {
    double begin = 0.0;
    double step = 0.0;
    std::vector<double> values;
    std::vector<double> cumulative;  // filled by finalize()

    void finalize();
    [[nodiscard]] double integral() const;
    /// Inverse-CDF draw from u ∈ [0, 1). Requires finalize().
    [[nodiscard]] double sample(double u) const;
};

/// Ordered two-time density G(t1, t2) for t1 ≤ t2 on a uniform grid.
struct CorrelationGrid {
    double begin = 0.0;
    double step = 0.0;
    int points = 0;
    std::vector<double> values;  // row-major, values[i * points + j], zero for j < i

    std::vector<double> cumulative;  // per-cell mass, filled by finalize()

    [[nodiscard]] double at(int i, int j) const
    {
        return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(points) +
                      static_cast<std::size_t>(j)];
    }
    void finalize();
    /// Ordered pair (t1 ≤ t2) from a cell selector and two in-cell uniforms.
    [[nodiscard]] std::pair<double, double> sample(double u_cell, double u1, double u2) const;
};

/// Detection of the read (red) pulse: jumps bρb† at rate efficiency·Γ₋(t). Without a
/// read pulse the rate is the constant `efficiency` (1/s), which models a weak probe.
class Readout {
public:
    Readout(ReducedModel model, std::optional<std::size_t> read_pulse, double efficiency = 1.0);

    [[nodiscard]] double rate(double t) const;
    [[nodiscard]] const ReducedModel& model() const { return model_; }

    /// ⟨I(t)⟩ for a state given at t0 ≤ t.
    [[nodiscard]] double intensity(const DensityMatrix& rho, double t0, double t) const;
    /// ⟨:I(t1) I(t2):⟩ for t0 ≤ t1 ≤ t2.
    [[nodiscard]] double correlation(const DensityMatrix& rho, double t0, double t1,
                                     double t2) const;

    [[nodiscard]] TimeProfile intensity_profile(const Matrix& rho, double t0, const Window& window,
                                                int samples) const;
    [[nodiscard]] CorrelationGrid correlation_grid(const Matrix& rho, double t0,
                                                   const Window& window, int samples) const;

    struct Averages {
        double g2 = 0.0;
        double mean_occupation = 0.0;   // ∫ p ⟨N⟩
        double count_occupation = 0.0;  // ∫ rate⟨N⟩ / (1 − e^{−∫rate}), as C/(η p_r) would read
    };
    /// Pulse-averaged ⟨:N N:⟩ / ⟨N⟩² over the shape window (τ = 0).
    [[nodiscard]] Averages g2_observed(const DensityMatrix& rho, double t0,
                                       const EffectivePulseShape& shape) const;
    /// τ = Δn·T_r for Δn ≠ 0: cycles are independent, each re-heralded from the same
    /// initial state, so the average factorizes into a product of marginals.
    [[nodiscard]] double g2_observed_separate_cycles(const DensityMatrix& herald_cycle,
                                                     const DensityMatrix& later_cycle, double t0,
                                                     const EffectivePulseShape& shape) const;

private:
    ReducedModel model_;
    std::optional<std::size_t> read_;
    double efficiency_;
};

/// Free-function wrappers; the state is given at t0 = start of the read support.
[[nodiscard]] double intensity(const DensityMatrix& state_at_click, const DeviceParams& device,
                               const Pulse& read, const HeatingModel& heating, double t,
                               double efficiency = 1.0);
[[nodiscard]] double correlation(const DensityMatrix& state_at_click, const DeviceParams& device,
                                 const Pulse& read, const HeatingModel& heating, double t1,
                                 double t2, double efficiency = 1.0);
[[nodiscard]] double g2_observed(const DensityMatrix& state_at_click, const DeviceParams& device,
                                 const Pulse& read, const HeatingModel& heating,
                                 const EffectivePulseShape& shape, double tau = 0.0);

struct PredictOptions {
    int dim = hilbert::kDefaultDim;
    std::optional<Window> herald_window;
    std::optional<Window> read_window;
    std::optional<double> filter_bandwidth;
};

struct Prediction {
    double g2 = 0.0;
    double heralded_occupation = 0.0;  // count-based occupation after a herald
    double click_prob = 0.0;
    double unconditional_occupation = 0.0;  // count-based occupation without a herald
    Window herald_window;
    Window read_window;
};

/// herald → g2_observed(τ = 0) for one pulse schedule. The initial state is thermal
/// at heating.n_init() at the cycle origin.
[[nodiscard]] Prediction predict(const DeviceParams& device, const PulseSchedule& schedule,
                                 const HeatingModel& heating, double detect_eff,
                                 const PredictOptions& options = {});
[[nodiscard]] double predict_g2(const DeviceParams& device, const PulseSchedule& schedule,
                                const HeatingModel& heating, double detect_eff);

/// Count-based unconditional read occupation, i.e. what C_r/(η_sum p_r) measures.
[[nodiscard]] double unconditional_read_occupation(const DeviceParams& device,
                                                   const PulseSchedule& schedule,
                                                   const HeatingModel& heating,
                                                   const PredictOptions& options = {});

/// Scale the heating influx so unconditional_read_occupation equals `target`.
/// The occupation is affine in the scale, so two evaluations suffice.
struct HeatingCalibration {
    HeatingModel heating;
    double scale = 0.0;
    double occupation = 0.0;
};
[[nodiscard]] HeatingCalibration calibrate_heating(const DeviceParams& device,
                                                   const PulseSchedule& schedule,
                                                   const HeatingModel& shape, double target,
                                                   const PredictOptions& options = {});

/// Outcome of one detection window for two detectors, as a bit mask:
/// bit 0 = D1 clicked (≥1), bit 1 = D2 clicked.
using Outcome = unsigned;

struct CycleTree {
    Window herald_window;
    Window read_window;
    /// joint[h][r]: probability of herald outcome h and read outcome r in one cycle.
    std::array<std::array<double, 4>, 4> joint{};
    /// Herald-window intensity shape (all outcomes), for timestamps.
    TimeProfile herald_profile;
    /// Read-window intensity and two-time correlation conditioned on the herald outcome.
    std::array<TimeProfile, 4> read_profile;
    std::array<CorrelationGrid, 4> read_correlation;
};

struct TreeOptions {
    int dim = hilbert::kDefaultDim;
    int grid_points = 96;
    std::optional<Window> herald_window;
    std::optional<Window> read_window;
};

/// Exact ≥1-click outcome probabilities per cycle for detectors with efficiencies
/// eta1, eta2 (already including the splitter), from the branch equations
/// dX_E/dt = L X_E − Σ_{j∉E} J_j X_E + Σ_{i∈E} J_i X_{E∖i}.
[[nodiscard]] CycleTree cycle_tree(const DeviceParams& device, const PulseSchedule& schedule,
                                   const HeatingModel& heating, double eta1, double eta2,
                                   const TreeOptions& options = {});

}  // namespace phbt::counting
