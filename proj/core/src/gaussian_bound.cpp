#include "phbt/gaussian_bound.hpp"

#include "phbt/constants.hpp"
#include "phbt/errors.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

namespace phbt::gaussianbound {

namespace {

constexpr double kMinOccupation = 1e-6;
constexpr double kInfeasible = std::numeric_limits<double>::infinity();

struct Evaluator {
    double n_init;
    const MinimizeOptions& options;

    [[nodiscard]] GaussianParams params(const std::array<double, 3>& x) const
    {
        GaussianParams p;
        p.alpha_mag = x[0];
        p.squeeze_mag = x[1];
        p.alpha_phase = 0.0;
        p.squeeze_phase = options.theta == ThetaConstraint::free ? x[2] : 0.0;
        return p;
    }

    /// nullopt when the state leaks or has no occupation.
    [[nodiscard]] std::optional<GaussianMoments> moments(const std::array<double, 3>& x) const
    {
        try {
            const auto m = gaussian_moments(n_init, params(x), options.dim);
            return m;
        } catch (const TruncationError&) {
            return std::nullopt;
        } catch (const UndefinedError&) {
            return std::nullopt;
        }
    }

    [[nodiscard]] bool feasible(const GaussianMoments& m) const
    {
        if (!(m.occupation > kMinOccupation)) return false;
        if (options.occupation_window) {
            const auto [lo, hi] = *options.occupation_window;
            if (!(m.occupation > lo && m.occupation < hi)) return false;
        }
        return true;
    }

    /// g2 at a feasible point, +inf otherwise.
    [[nodiscard]] double objective(const std::array<double, 3>& x) const
    {
        const auto m = moments(x);
        return m && feasible(*m) ? m->g2 : kInfeasible;
    }
};

double wrap_phase(double theta)
{
    theta = std::fmod(theta, constants::two_pi);
    return theta < 0.0 ? theta + constants::two_pi : theta;
}

}  // namespace

GaussianMoments gaussian_moments(double n_init, const GaussianParams& params, int dim)
{
    if (!(n_init >= 0.0)) throw ConfigError("gaussian_g2: n_init must be >= 0");
    params.validate();
    auto rho = hilbert::thermal(n_init, dim);
    rho.require_healthy("gaussian_g2 initial state");
    if (params.squeeze_mag > 0.0) rho = hilbert::apply_squeeze(rho, params.xi());
    if (params.alpha_mag > 0.0) rho = hilbert::apply_displacement(rho, params.alpha());
    rho.require_healthy("gaussian_g2");
    return {hilbert::g2_zero(rho), hilbert::mean_number(rho)};
}

double gaussian_g2(double n_init, const GaussianParams& params, int dim)
{
    return gaussian_moments(n_init, params, dim).g2;
}

BoundResult minimize_gaussian_g2(double n_init, const MinimizeOptions& options)
{
    if (!(n_init >= 0.0)) throw ConfigError("minimize_gaussian_g2: n_init must be >= 0");
    if (options.alpha_points < 2 || options.squeeze_points < 2 || options.phase_points < 1) {
        throw ConfigError("minimize_gaussian_g2: grid needs at least 2 points per axis");
    }
    if (!(options.refine_step > 0.0)) throw ConfigError("minimize_gaussian_g2: refine_step must be > 0");
    if (options.occupation_window) {
        const auto [lo, hi] = *options.occupation_window;
        if (!(lo >= 0.0 && hi > lo)) throw ConfigError("occupation window must satisfy 0 <= lo < hi");
    }
    const bool free_phase = options.theta == ThetaConstraint::free;
    const int phases = free_phase ? options.phase_points : 1;
    const double da = options.alpha_max / (options.alpha_points - 1);
    const double dr = options.squeeze_max / (options.squeeze_points - 1);
    const double dphi = constants::two_pi / phases;
    const Evaluator eval{n_init, options};

    const std::size_t total = static_cast<std::size_t>(options.alpha_points) *
                              static_cast<std::size_t>(options.squeeze_points) *
                              static_cast<std::size_t>(phases);
    auto point = [&](std::size_t index) {
        const auto ph = static_cast<int>(index % static_cast<std::size_t>(phases));
        const auto rest = index / static_cast<std::size_t>(phases);
        const auto ir = static_cast<int>(rest % static_cast<std::size_t>(options.squeeze_points));
        const auto ia = static_cast<int>(rest / static_cast<std::size_t>(options.squeeze_points));
        return std::array<double, 3>{ia * da, ir * dr, ph * dphi};
    };

    // Grid unitaries are shared across points: one exponential per axis value.
    const int big = options.dim + hilbert::kGuardLevels;
    std::vector<hilbert::Matrix> displacements(static_cast<std::size_t>(options.alpha_points));
    std::vector<hilbert::Matrix> squeezes(static_cast<std::size_t>(options.squeeze_points * phases));
    for (int ia = 1; ia < options.alpha_points; ++ia) {
        displacements[static_cast<std::size_t>(ia)] = hilbert::displacement_operator(ia * da, big);
    }
    for (int ir = 1; ir < options.squeeze_points; ++ir) {
        for (int ph = 0; ph < phases; ++ph) {
            squeezes[static_cast<std::size_t>(ir * phases + ph)] =
                hilbert::squeeze_operator(std::polar(ir * dr, ph * dphi), big);
        }
    }
    const auto initial = hilbert::thermal(n_init, options.dim);
    initial.require_healthy("minimize_gaussian_g2 initial state");
    auto grid_moments = [&](std::size_t index) -> std::optional<GaussianMoments> {
        const auto ph = index % static_cast<std::size_t>(phases);
        const auto rest = index / static_cast<std::size_t>(phases);
        const auto ir = rest % static_cast<std::size_t>(options.squeeze_points);
        const auto ia = rest / static_cast<std::size_t>(options.squeeze_points);
        try {
            auto rho = initial;
            if (ir > 0) {
                rho = hilbert::apply_unitary(rho, squeezes[ir * static_cast<std::size_t>(phases) + ph],
                                             hilbert::kGuardLevels, "apply_squeeze");
            }
            if (ia > 0) {
                rho = hilbert::apply_unitary(rho, displacements[ia], hilbert::kGuardLevels,
                                             "apply_displacement");
            }
            rho.require_healthy("gaussian_g2");
            return GaussianMoments{hilbert::g2_zero(rho), hilbert::mean_number(rho)};
        } catch (const TruncationError&) {
            return std::nullopt;
        } catch (const UndefinedError&) {
            return std::nullopt;
        }
    };

    std::vector<std::optional<GaussianMoments>> grid(total);
    std::atomic<std::size_t> next{0};
    const unsigned workers =
        options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < total; i = next++) grid[i] = grid_moments(i);
        });
    }
    for (auto& t : pool) t.join();

    BoundResult result;
    result.constrained = options.occupation_window.has_value();
    result.g2_min = kInfeasible;
    std::array<double, 3> best{};
    for (std::size_t i = 0; i < total; ++i) {
        if (!grid[i]) {
            ++result.skipped;
            continue;
        }
        if (!eval.feasible(*grid[i])) continue;
        const auto x = point(i);
        result.samples.push_back({eval.params(x), grid[i]->g2, grid[i]->occupation});
        if (grid[i]->g2 < result.g2_min) {
            result.g2_min = grid[i]->g2;
            best = x;
        }
    }
    if (!std::isfinite(result.g2_min)) {
        throw NumericError("minimize_gaussian_g2: no feasible grid point");
    }

    // Coordinate-wise quadratic refinement with halving steps.
    const int dims = free_phase ? 3 : 2;
    const std::array<double, 3> upper{options.alpha_max, options.squeeze_max, constants::two_pi};
    std::array<double, 3> step{da, dr, dphi};
    double f0 = result.g2_min;
    auto clamp = [&](int k, double v) { return k == 2 ? wrap_phase(v) : std::clamp(v, 0.0, upper[k]); };
    auto converged = [&] {
        return std::all_of(step.begin(), step.begin() + dims,
                           [&](double h) { return h < options.refine_step; });
    };
    for (int iter = 0; iter < 200 && !converged(); ++iter) {
        bool improved = false;
        for (int k = 0; k < dims; ++k) {
            auto lo = best;
            auto hi = best;
            lo[k] = clamp(k, best[k] - step[k]);
            hi[k] = clamp(k, best[k] + step[k]);
            const double fl = eval.objective(lo);
            const double fh = eval.objective(hi);
            auto candidate = best;
            double fc = f0;
            if (fl < fc) { candidate = lo; fc = fl; }
            if (fh < fc) { candidate = hi; fc = fh; }
            const double curvature = fh - 2.0 * f0 + fl;
            if (std::isfinite(fl) && std::isfinite(fh) && curvature > 0.0) {
                auto vertex = best;
                vertex[k] = clamp(k, best[k] - 0.5 * step[k] * (fh - fl) / curvature);
                const double fv = eval.objective(vertex);
                if (fv < fc) { candidate = vertex; fc = fv; }
            }
            if (fc < f0) {
                best = candidate;
                f0 = fc;
                improved = true;
            }
        }
        if (!improved) {
            for (int k = 0; k < dims; ++k) step[k] *= 0.5;
        }
    }

    const auto final_moments = eval.moments(best);
    result.g2_min = final_moments->g2;
    result.occupation = final_moments->occupation;
    result.params = eval.params(best);
    return result;
}

}  // namespace phbt::gaussianbound
