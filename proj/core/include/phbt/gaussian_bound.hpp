#pragma once

// Lowest g²(0) reachable by displaced squeezed thermal states D(α)S(ξ)ρ_th S†(ξ)D†(α).

#include "phbt/hilbert.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace phbt::gaussianbound {

using hilbert::GaussianParams;

/// g2_zero of D(α)S(ξ)ρ_th(n_init)S†(ξ)D†(α) in Fock space at `dim`.
/// Throws TruncationError when the state leaks to the top level.
[[nodiscard]] double gaussian_g2(double n_init, const GaussianParams& params,
                                 int dim = hilbert::kDefaultDim);

struct GaussianMoments {
    double g2 = 0.0;
    double occupation = 0.0;
};
[[nodiscard]] GaussianMoments gaussian_moments(double n_init, const GaussianParams& params,
                                               int dim = hilbert::kDefaultDim);

enum class ThetaConstraint { twice_phi, free };

struct MinimizeOptions {
    ThetaConstraint theta = ThetaConstraint::twice_phi;
    std::optional<std::pair<double, double>> occupation_window;  // open interval (lo, hi)
    int dim = hilbert::kDefaultDim;
    int alpha_points = 41;
    int squeeze_points = 25;
    int phase_points = 8;  // relative phase θ − 2φ samples, free mode only
    double alpha_max = 4.0;
    double squeeze_max = 1.2;
    double refine_step = 1e-6;  // refinement stops once every step is below this
    unsigned threads = 0;
};

struct GridSample {
    GaussianParams params;
    double g2 = 0.0;
    double occupation = 0.0;
};

struct BoundResult {
    double g2_min = 0.0;
    GaussianParams params;
    double occupation = 0.0;
    bool constrained = false;
    std::vector<GridSample> samples;  // feasible grid points that were evaluated
    std::size_t skipped = 0;          // grid points dropped for truncation leaks
};

/// Deterministic grid over (ᾱ, r[, θ − 2φ]) followed by coordinate-wise quadratic
/// refinement. Points with ⟨N⟩ ≤ 1e-6 or outside the occupation window are infeasible.
/// With θ = 2φ the overall phase is irrelevant, so φ = θ = 0 is used.
[[nodiscard]] BoundResult minimize_gaussian_g2(double n_init, const MinimizeOptions& options = {});

}  // namespace phbt::gaussianbound
