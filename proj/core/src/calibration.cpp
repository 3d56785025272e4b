#include "phbt/calibration.hpp"

#include "phbt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace phbt::calibration {

namespace {

void require_unit(double value, const std::string& what)
{
    if (!(value >= 0.0 && value <= 1.0)) {
        throw ConfigError(what + " must lie in [0, 1], got " + std::to_string(value));
    }
}

}  // namespace

EfficiencyChain efficiency_chain(double eta_fc, double eta_dev,
                                 const std::array<double, 2>& counts_per_pulse,
                                 double photons_per_pulse)
{
    require_unit(eta_fc, "eta_fc");
    require_unit(eta_dev, "eta_dev");
    if (!(photons_per_pulse > 0.0)) throw ConfigError("photons_per_pulse must be positive");
    if (!(eta_fc > 0.0)) throw ConfigError("eta_fc must be positive to invert the chain");

    EfficiencyChain chain;
    chain.eta_fc = eta_fc;
    chain.eta_dev = eta_dev;
    for (std::size_t i = 0; i < 2; ++i) {
        const double counts = counts_per_pulse[i];
        if (!(counts >= 0.0)) throw ConfigError("calibration counts must be >= 0");
        const double trans_qe = counts / (photons_per_pulse * eta_fc * eta_fc);
        require_unit(trans_qe, "eta_trans_qe[" + std::to_string(i) + "]");
        chain.eta_trans_qe[i] = trans_qe;
        chain.eta_total[i] = eta_dev * eta_fc * trans_qe;
    }
    return chain;
}

SidebandSolution solve_sideband(double c_red, double c_blue, double eta_sum, double probe_energy,
                                const dynamics::DeviceParams& device)
{
    if (!(eta_sum > 0.0 && eta_sum <= 2.0)) throw ConfigError("eta_sum must lie in (0, 2]");
    if (!(probe_energy > 0.0)) throw ConfigError("probe energy must be positive");
    if (!(c_red >= 0.0 && c_blue > 0.0)) throw ConfigError("sideband counts must be C_r >= 0, C_b > 0");

    const double cr = c_red / eta_sum;
    const double cb = c_blue / eta_sum;
    if (!(cb > cr)) {
        throw ConfigError("sideband counts admit no root with x > 0 (need C_b > C_r)");
    }
    SidebandSolution out;
    out.exponent = std::log1p(cb) - std::log1p(cr);
    out.p_b = std::expm1(out.exponent);
    out.p_r = -std::expm1(-out.exponent);
    out.n_th = cr * (1.0 + cb) / (cb - cr);
    out.small_p_violated = out.p_b > 0.1 || out.p_r > 0.1;

    // x is quadratic in g0; evaluate the prefactor at g0 = 1 rad/s.
    dynamics::DeviceParams unit = device;
    unit.g0 = 1.0;
    const double per_g0_squared = dynamics::scattering_exponent(unit, probe_energy);
    out.g0 = std::sqrt(out.exponent / per_g0_squared);
    return out;
}

double occupancy_from_counts(double counts, double eta_sum, double p, dynamics::Sideband sideband)
{
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("scattering probability must lie in (0, 1)");
    if (!(eta_sum > 0.0)) throw ConfigError("eta_sum must be positive");
    if (!(counts >= 0.0)) throw ConfigError("counts must be >= 0");
    const double ratio = counts / (eta_sum * p);
    if (sideband == dynamics::Sideband::red) return ratio;
    const double n = ratio - 1.0;
    if (n < -1e-9) {
        throw ConfigError("blue-sideband counts below the vacuum level: inconsistent calibration");
    }
    return std::max(0.0, n);
}

}  // namespace phbt::calibration
