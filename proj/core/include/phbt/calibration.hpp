#pragma once

// Count-rate inversions: detection-efficiency chain, sideband-asymmetry
// thermometry with g0 recovery, and occupancy from a single sideband.

#include "phbt/dynamics.hpp"

#include <array>

namespace phbt::calibration {

struct EfficiencyChain {
    double eta_fc = 0.0;
    double eta_dev = 0.0;
    std::array<double, 2> eta_trans_qe{};
    std::array<double, 2> eta_total{};
};

/// Off-resonant calibration pulses pass the fiber coupling twice, so
/// counts/photons = η_fc²·η_trans·η_QE per detector; η_i = η_dev·η_fc·η_trans·η_QE.
[[nodiscard]] EfficiencyChain efficiency_chain(double eta_fc, double eta_dev,
                                               const std::array<double, 2>& counts_per_pulse,
                                               double photons_per_pulse);

struct SidebandSolution {
    double n_th = 0.0;
    double p_b = 0.0;
    double p_r = 0.0;
    double g0 = 0.0;  // rad/s
    double exponent = 0.0;
    bool small_p_violated = false;  // p_b or p_r above 0.1
};

/// Solve C_r = η·p_r·n and C_b = η·p_b·(1+n) with p_b = e^x − 1, p_r = 1 − e^−x
/// at a common probe energy. Closed form: e^−x = (1 + c_r)/(1 + c_b) with c = C/η,
/// n = c_r(1 + c_b)/(c_b − c_r). The g0 field of `device` is ignored.
[[nodiscard]] SidebandSolution solve_sideband(double c_red, double c_blue, double eta_sum,
                                              double probe_energy,
                                              const dynamics::DeviceParams& device);

/// Occupancy from one sideband with a known scattering probability.
[[nodiscard]] double occupancy_from_counts(double counts, double eta_sum, double p,
                                           dynamics::Sideband sideband);

}  // namespace phbt::calibration
