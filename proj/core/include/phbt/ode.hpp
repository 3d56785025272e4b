#pragma once

// Embedded Dormand–Prince 5(4) integrator for complex linear systems.

#include <Eigen/Dense>

#include <functional>
#include <span>

namespace phbt::ode {

using Vector = Eigen::VectorXcd;
using Rhs = std::function<void(double t, const Vector& y, Vector& dydt)>;
using StepHook = std::function<void(Vector& y)>;

struct Options {
    double rtol = 1e-8;
    double atol = 1e-10;
    /// Initial step; 0 picks one from the interval length.
    double initial_step = 0.0;
    /// Largest step allowed; 0 means unbounded.
    double max_step = 0.0;
    long max_steps = 2'000'000;
};

struct Stats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evaluations = 0;
};

/// Adaptive integrator that remembers its step size across calls.
///
/// Breakpoints are points where the right-hand side may be discontinuous;
/// steps never straddle them.
class Integrator {
public:
    Integrator(Rhs rhs, Options options, StepHook hook = {});

    /// Advance y from t0 to t1 (t1 >= t0). Throws NumericError on step underflow.
    void advance(Vector& y, double t0, double t1, std::span<const double> breakpoints = {});

    [[nodiscard]] const Stats& stats() const { return stats_; }

private:
    void advance_smooth(Vector& y, double t0, double t1);

    Rhs rhs_;
    Options options_;
    StepHook hook_;
    double step_ = 0.0;
    Stats stats_;
    Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, next_;
    bool have_fsal_ = false;
};

}  // namespace phbt::ode
