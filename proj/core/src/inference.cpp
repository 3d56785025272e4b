#include "phbt/inference.hpp"

#include "phbt/constants.hpp"
#include "phbt/errors.hpp"

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cmath>

namespace phbt::inference {

namespace {

constexpr unsigned kHeraldD1 = 1u;
constexpr unsigned kHeraldD2 = 2u;
constexpr unsigned kReadD1 = 4u;
constexpr unsigned kReadD2 = 8u;

struct CycleFlags {
    std::uint64_t cycle;
    unsigned flags;
};

std::vector<CycleFlags> flag_cycles(const trajectories::ClickRecord& record,
                                    const Window& herald_window, const Window& read_window)
{
    std::vector<CycleFlags> out;
    for (const auto& e : record.events) {
        const double t = e.time();
        unsigned bit = 0;
        if (herald_window.contains(t)) bit |= e.detector == 1 ? kHeraldD1 : kHeraldD2;
        if (read_window.contains(t)) bit |= e.detector == 1 ? kReadD1 : kReadD2;
        if (bit == 0) continue;
        if (out.empty() || out.back().cycle != e.cycle) out.push_back({e.cycle, 0});
        out.back().flags |= bit;
    }
    return out;
}

unsigned flags_of(const std::vector<CycleFlags>& cycles, std::uint64_t cycle)
{
    const auto it = std::lower_bound(cycles.begin(), cycles.end(), cycle,
                                     [](const CycleFlags& c, std::uint64_t v) { return c.cycle < v; });
    return it != cycles.end() && it->cycle == cycle ? it->flags : 0u;
}

double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p)
{
    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
           kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

}  // namespace

const char* to_string(HeraldPolicy policy)
{
    switch (policy) {
    case HeraldPolicy::d1: return "D1";
    case HeraldPolicy::d2: return "D2";
    case HeraldPolicy::either: return "either";
    }
    return "D1";
}

HeraldPolicy herald_policy_from_string(const std::string& text)
{
    if (text == "D1" || text == "d1") return HeraldPolicy::d1;
    if (text == "D2" || text == "d2") return HeraldPolicy::d2;
    if (text == "either") return HeraldPolicy::either;
    throw ConfigError("herald policy must be D1, D2 or either, got '" + text + "'");
}

G2Estimate estimate_g2(const trajectories::ClickRecord& record, const Window& herald_window,
                       const Window& read_window, HeraldPolicy policy, std::int64_t delta_n)
{
    herald_window.validate("herald_window");
    read_window.validate("read_window");
    const unsigned herald_mask = policy == HeraldPolicy::d1   ? kHeraldD1
                                 : policy == HeraldPolicy::d2 ? kHeraldD2
                                                              : kHeraldD1 | kHeraldD2;
    const auto cycles = flag_cycles(record, herald_window, read_window);

    G2Estimate est;
    for (const auto& c : cycles) {
        if ((c.flags & herald_mask) == 0) continue;
        bool e1 = false;
        bool e2 = false;
        if (delta_n == 0) {
            e1 = (c.flags & kReadD1) != 0;
            e2 = (c.flags & kReadD2) != 0;
        } else {
            const auto partner = static_cast<std::int64_t>(c.cycle) + delta_n;
            if (partner < 0 || static_cast<std::uint64_t>(partner) >= record.cycles) continue;
            e1 = (c.flags & kReadD1) != 0;
            e2 = (flags_of(cycles, static_cast<std::uint64_t>(partner)) & kReadD2) != 0;
        }
        ++est.n_heralds;
        est.c1 += e1 ? 1 : 0;
        est.c2 += e2 ? 1 : 0;
        est.c12 += e1 && e2 ? 1 : 0;
    }
    if (est.n_heralds == 0) throw UndefinedError("estimate_g2: no heralding events");
    if (est.c1 == 0 || est.c2 == 0) {
        throw UndefinedError("estimate_g2: zero singles on a detector, g2 undefined");
    }

    const double n = static_cast<double>(est.n_heralds);
    const double r1 = static_cast<double>(est.c1) / n;
    const double r2 = static_cast<double>(est.c2) / n;
    est.value = static_cast<double>(est.c12) * n /
                (static_cast<double>(est.c1) * static_cast<double>(est.c2));
    const auto ci = confidence_interval(est.c12, est.n_heralds, r1, r2);
    est.sigma_minus = ci.sigma_minus;
    est.sigma_plus = ci.sigma_plus;
    est.p_value_classical = p_value(est.value, est.n_heralds, r1, r2);
    return est;
}

Interval confidence_interval(std::uint64_t c12, std::uint64_t n, double rate1, double rate2)
{
    if (n == 0) throw UndefinedError("confidence_interval: N must be >= 1");
    if (c12 > n) throw ConfigError("confidence_interval: c12 exceeds N");
    if (!(rate1 > 0.0 && rate2 > 0.0)) {
        throw UndefinedError("confidence_interval: singles rates must be positive");
    }
    const double nd = static_cast<double>(n);
    const double scale = 1.0 / (rate1 * rate2);
    const double value = static_cast<double>(c12) / nd * scale;
    const boost::math::beta_distribution<double> likelihood(static_cast<double>(c12) + 1.0,
                                                            nd - static_cast<double>(c12) + 1.0);
    if (c12 == 0) return {0.0, boost::math::quantile(likelihood, 0.68) * scale};
    const double lo = boost::math::quantile(likelihood, 0.16) * scale;
    const double hi = boost::math::quantile(likelihood, 0.84) * scale;
    return {std::max(0.0, value - lo), std::max(0.0, hi - value)};
}

double binomial_lower_tail(std::uint64_t k, std::uint64_t n, double p)
{
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("binomial_lower_tail: p must lie in [0, 1]");
    if (k >= n || p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    if (k > 1'000'000) {
        const double mean = static_cast<double>(n) * p;
        const double sd = std::sqrt(mean * (1.0 - p));
        return 0.5 * std::erfc(-(static_cast<double>(k) + 0.5 - mean) / (sd * std::sqrt(2.0)));
    }
    const double odds = (1.0 - p) / p;
    if (static_cast<double>(k) < static_cast<double>(n) * p) {
        // Below the mean the terms fall monotonically: P(j−1)/P(j) = j(1−p) / ((n−j+1) p).
        double term = std::exp(log_binomial_pmf(k, n, p));
        double sum = term;
        for (std::uint64_t j = k; j > 0 && term > 0.0 && term >= 1e-18 * sum; --j) {
            term *= static_cast<double>(j) / static_cast<double>(n - j + 1) * odds;
            sum += term;
        }
        return std::min(1.0, sum);
    }
    // Above the mean sum the complementary upper tail instead.
    double term = std::exp(log_binomial_pmf(k + 1, n, p));
    double upper = term;
    for (std::uint64_t j = k + 1; j < n && term > 0.0 && term >= 1e-18 * upper; ++j) {
        term *= static_cast<double>(n - j) / (static_cast<double>(j + 1) * odds);
        upper += term;
    }
    return std::max(0.0, 1.0 - upper);
}

double p_value(double observed, std::uint64_t n, double rate1, double rate2, double null_g2)
{
    if (n == 0) throw UndefinedError("p_value: N must be >= 1");
    if (!(rate1 > 0.0 && rate2 > 0.0 && null_g2 > 0.0)) {
        throw ConfigError("p_value: rates and null g2 must be positive");
    }
    if (observed < 0.0) return 0.0;
    // Tiny records can push the plug-in rates to one; the null then saturates.
    const double p12 = std::min(1.0, null_g2 * rate1 * rate2);
    // Largest c12 whose estimate does not exceed `observed`; the tolerance absorbs
    // rounding when `observed` was itself computed from an integer count.
    const double threshold = observed * rate1 * rate2 * static_cast<double>(n);
    const double k = std::floor(threshold * (1.0 + 1e-12));
    if (k >= static_cast<double>(n)) return 1.0;
    return binomial_lower_tail(static_cast<std::uint64_t>(k), n, p12);
}

VarianceDecomposition variance_decomposition(const hilbert::DensityMatrix& state, double omega_m)
{
    if (!(omega_m > 0.0)) throw ConfigError("variance_decomposition: omega_m must be positive");
    const auto pops = state.populations();
    double mean = 0.0;
    double second = 0.0;
    for (Eigen::Index k = 0; k < pops.size(); ++k) {
        const double kd = static_cast<double>(k);
        mean += kd * pops[k];
        second += kd * kd * pops[k];
    }
    if (!(mean > 1e-12)) throw UndefinedError("variance_decomposition: vacuum state");
    const double quantum = constants::hbar * omega_m;
    const double q2 = quantum * quantum;
    const double g2 = hilbert::g2_zero(state);
    VarianceDecomposition out;
    out.variance = q2 * (second - mean * mean);
    out.classical_term = (g2 - 1.0) * q2 * mean * mean;
    out.commutator_term = q2 * mean;
    return out;
}

}  // namespace phbt::inference
