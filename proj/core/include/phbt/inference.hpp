#pragma once

// Heralded g² estimation from click records, binomial intervals and p-values,
// and the energy-variance split of a mechanical state.

#include "phbt/counting.hpp"
#include "phbt/trajectories.hpp"

#include <cstdint>
#include <string>

namespace phbt::inference {

using counting::Window;

enum class HeraldPolicy { d1, d2, either };

[[nodiscard]] const char* to_string(HeraldPolicy policy);
[[nodiscard]] HeraldPolicy herald_policy_from_string(const std::string& text);

struct G2Estimate {
    double value = 0.0;
    double sigma_plus = 0.0;
    double sigma_minus = 0.0;
    std::uint64_t n_heralds = 0;
    std::uint64_t c1 = 0;
    std::uint64_t c2 = 0;
    std::uint64_t c12 = 0;
    double p_value_classical = 0.0;
};

/// ḡ² = (c12/N) / ((c1/N)(c2/N)).
///
/// A herald is a click in `herald_window` on the detector(s) selected by `policy`.
/// For delta_n = 0 the singles and the coincidence come from the same cycle's read
/// window. For delta_n ≠ 0, E₁ is the D1 read of the heralded cycle k and E₂ the
/// D2 read of cycle k + delta_n; heralds whose partner cycle lies outside the
/// record are not counted.
[[nodiscard]] G2Estimate estimate_g2(const trajectories::ClickRecord& record,
                                     const Window& herald_window, const Window& read_window,
                                     HeraldPolicy policy = HeraldPolicy::d1,
                                     std::int64_t delta_n = 0);

struct Interval {
    double sigma_minus = 0.0;
    double sigma_plus = 0.0;
};

/// 16% and 84% quantiles of the normalized binomial likelihood of p12 (a
/// Beta(c12+1, N−c12+1) density), mapped through ḡ² = p12/(rate1·rate2) with the
/// singles held fixed. c12 = 0 gives the one-sided 68% upper limit.
[[nodiscard]] Interval confidence_interval(std::uint64_t c12, std::uint64_t n, double rate1,
                                           double rate2);

/// P(ḡ² ≤ observed | g² = null_g2) with c12 ~ Binomial(N, null_g2·rate1·rate2).
[[nodiscard]] double p_value(double observed, std::uint64_t n, double rate1, double rate2,
                             double null_g2 = 1.0);

/// Lower tail P(X ≤ k) of Binomial(n, p). Exact summation up to 10⁶ terms,
/// continuity-corrected normal approximation beyond.
[[nodiscard]] double binomial_lower_tail(std::uint64_t k, std::uint64_t n, double p);

/// Var(H) = (g²−1)⟨H⟩² + ħω_m⟨H⟩ for H = ħω_m b†b, all in J².
struct VarianceDecomposition {
    double variance = 0.0;
    double classical_term = 0.0;
    double commutator_term = 0.0;
};
[[nodiscard]] VarianceDecomposition variance_decomposition(const hilbert::DensityMatrix& state,
                                                           double omega_m);

}  // namespace phbt::inference
