#include "phbt/ode.hpp"

#include "phbt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phbt::ode {

namespace {

// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

}  // namespace

Integrator::Integrator(Rhs rhs, Options options, StepHook hook)
    : rhs_(std::move(rhs)), options_(options), hook_(std::move(hook))
{
    if (!(options_.rtol > 0.0) || !(options_.atol > 0.0)) {
        throw ConfigError("Integrator: tolerances must be positive");
    }
}

void Integrator::advance(Vector& y, double t0, double t1, std::span<const double> breakpoints)
{
    if (t1 < t0) throw ConfigError("Integrator::advance: t1 must be >= t0");
    double t = t0;
    for (double bp : breakpoints) {
        if (bp > t && bp < t1) {
            advance_smooth(y, t, bp);
            t = bp;
        }
    }
    advance_smooth(y, t, t1);
}

void Integrator::advance_smooth(Vector& y, double t0, double t1)
{
    const double span = t1 - t0;
    if (span <= 0.0) return;

    const auto n = y.size();
    for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &next_}) {
        if (v->size() != n) v->resize(n);
    }

    double h = step_ > 0.0 ? step_ : (options_.initial_step > 0.0 ? options_.initial_step : span / 100.0);
    if (options_.max_step > 0.0) h = std::min(h, options_.max_step);
    const double h_min = 1e-13 * std::max(std::abs(t0), std::abs(t1)) + 1e-300;

    double t = t0;
    rhs_(t, y, k1_);
    ++stats_.rhs_evaluations;

    long steps = 0;
    while (t < t1) {
        if (++steps > options_.max_steps) {
            throw NumericError("Integrator: exceeded maximum number of steps");
        }
        bool last = false;
        if (t + h >= t1 || t1 - (t + h) < h_min) {
            h = t1 - t;
            last = true;
        }

        tmp_ = y + h * a21 * k1_;
        rhs_(t + c2 * h, tmp_, k2_);
        tmp_ = y + h * (a31 * k1_ + a32 * k2_);
        rhs_(t + c3 * h, tmp_, k3_);
        tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        rhs_(t + c4 * h, tmp_, k4_);
        tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        rhs_(t + c5 * h, tmp_, k5_);
        tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        rhs_(t + h, tmp_, k6_);
        next_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        rhs_(t + h, next_, k7_);
        stats_.rhs_evaluations += 6;

        tmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double magnitude = std::sqrt(std::max(std::norm(y(i)), std::norm(next_(i))));
            const double scale = options_.atol + options_.rtol * magnitude;
            sum += std::norm(tmp_(i)) / (scale * scale);
        }
        const double err = n > 0 ? std::sqrt(sum / static_cast<double>(n)) : 0.0;

        if (err <= 1.0) {
            t = last ? t1 : t + h;
            y.swap(next_);
            ++stats_.accepted;
            if (hook_) {
                hook_(y);
                rhs_(t, y, k1_);
                ++stats_.rhs_evaluations;
            } else {
                k1_.swap(k7_);
            }
            const double factor =
                err == 0.0 ? kMaxFactor
                           : std::clamp(kSafety * std::pow(err, -0.2), kMinFactor, kMaxFactor);
            if (!last) {
                h *= factor;
                step_ = h;
            } else {
                step_ = std::max(step_, h * factor);
            }
            if (options_.max_step > 0.0) h = std::min(h, options_.max_step);
        } else {
            ++stats_.rejected;
            h *= std::max(kMinFactor, kSafety * std::pow(err, -0.2));
            if (h < h_min) {
                std::ostringstream msg;
                msg << "Integrator: step size underflow at t=" << t << " (h=" << h << ")";
                throw NumericError(msg.str());
            }
        }
    }
}

}  // namespace phbt::ode
