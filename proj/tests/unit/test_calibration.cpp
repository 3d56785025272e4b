#include "phbt/calibration.hpp"
#include "phbt/constants.hpp"
#include "phbt/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace cal = phbt::calibration;
namespace d = phbt::dynamics;

namespace {

constexpr double kProbe = 55.16e-15;
constexpr double kEtaSum = 0.0266;

double khz(double g0) { return g0 / phbt::constants::two_pi / 1e3; }

/// Forward model: counts from a chosen exponent and occupation.
std::pair<double, double> forward(double x, double n, double eta)
{
    return {eta * (1.0 - std::exp(-x)) * n, eta * std::expm1(x) * (1.0 + n)};
}

}  // namespace

TEST(EfficiencyChain, ReferenceChain)
{
    // counts = photons·η_fc²·η_trans·η_QE with η_trans·η_QE = η_i/(η_dev·η_fc).
    const double photons = 5.14;
    std::array<double, 2> counts{};
    const std::array<double, 2> target{0.0116, 0.0150};
    for (int i = 0; i < 2; ++i) counts[i] = photons * 0.48 * 0.48 * target[i] / (0.5 * 0.48);
    const auto chain = cal::efficiency_chain(0.48, 0.5, counts, photons);
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(chain.eta_total[i], target[i], 1e-4);
        EXPECT_NEAR(chain.eta_total[i], chain.eta_dev * chain.eta_fc * chain.eta_trans_qe[i], 1e-15);
    }
    // Rounded counts as shipped in the sample calibration input.
    const auto rounded = cal::efficiency_chain(0.48, 0.5, {0.05724, 0.07402}, photons);
    EXPECT_NEAR(rounded.eta_total[0], 0.0116, 1e-4);
    EXPECT_NEAR(rounded.eta_total[1], 0.0150, 1e-4);
}

TEST(EfficiencyChain, Bounds)
{
    const auto zero = cal::efficiency_chain(0.48, 0.5, {0.0, 0.0}, 5.0);
    EXPECT_EQ(zero.eta_total[0], 0.0);
    EXPECT_EQ(zero.eta_total[1], 0.0);
    EXPECT_THROW((void)cal::efficiency_chain(0.48, 0.5, {2.0, 0.1}, 5.0), phbt::ConfigError);
    EXPECT_THROW((void)cal::efficiency_chain(1.2, 0.5, {0.1, 0.1}, 5.0), phbt::ConfigError);
    EXPECT_THROW((void)cal::efficiency_chain(0.48, 0.5, {0.1, 0.1}, 0.0), phbt::ConfigError);
}

TEST(Sideband, ReferenceInversion)
{
    const auto s = cal::solve_sideband(6.4e-5, 6.97e-4, kEtaSum, kProbe, d::DeviceParams::reference());
    EXPECT_NEAR(s.n_th, 0.104, 0.02 * 0.104);
    EXPECT_NEAR(s.p_r, 0.0232, 0.02 * 0.0232);
    EXPECT_NEAR(s.p_b, 0.0237, 0.02 * 0.0237);
    EXPECT_NEAR(khz(s.g0), 869.0, 0.02 * 869.0);
    EXPECT_FALSE(s.small_p_violated);
}

TEST(Sideband, ZeroAntiStokes)
{
    const auto dev = d::DeviceParams::reference();
    const auto s = cal::solve_sideband(0.0, 6.97e-4, kEtaSum, kProbe, dev);
    EXPECT_EQ(s.n_th, 0.0);
    // Blue counts alone fix p_b = C_b/η.
    EXPECT_NEAR(s.p_b, 6.97e-4 / kEtaSum, 1e-12);
}

TEST(Sideband, RoundTripThroughForwardModel)
{
    auto dev = d::DeviceParams::reference();
    for (const auto& [x, n] : std::vector<std::pair<double, double>>{{0.02, 0.1}, {0.05, 1.3}, {0.003, 0.0}, {0.2, 4.0}}) {
        const auto [cr, cb] = forward(x, n, kEtaSum);
        const auto s = cal::solve_sideband(cr, cb, kEtaSum, kProbe, dev);
        EXPECT_NEAR(s.exponent, x, 1e-10 * x);
        EXPECT_NEAR(s.n_th, n, 1e-10 * std::max(n, 1.0));
        // Scattering with the recovered g0 reproduces the exponent.
        auto recovered = dev;
        recovered.g0 = s.g0;
        EXPECT_NEAR(d::scattering_exponent(recovered, kProbe), x, 1e-9 * x);
        EXPECT_EQ(s.small_p_violated, x > std::log1p(0.1) - 1e-12);
    }
}

TEST(Sideband, AsymmetryOrderingAndMonotonicity)
{
    for (double n : {0.0, 0.01, 0.5, 3.0}) {
        const auto [cr, cb] = forward(0.02, n, kEtaSum);
        EXPECT_GT(cb, cr) << n;
    }
    double previous = -1.0;
    for (double cr : {1e-5, 3e-5, 6.4e-5, 1e-4, 3e-4}) {
        const double n = cal::solve_sideband(cr, 6.97e-4, kEtaSum, kProbe, d::DeviceParams::reference()).n_th;
        EXPECT_GT(n, previous);
        previous = n;
    }
    EXPECT_THROW((void)cal::solve_sideband(7e-4, 6.97e-4, kEtaSum, kProbe, d::DeviceParams::reference()),
                 phbt::ConfigError);
    EXPECT_THROW((void)cal::solve_sideband(-1e-5, 6.97e-4, kEtaSum, kProbe, d::DeviceParams::reference()),
                 phbt::ConfigError);
}

TEST(Occupancy, Examples)
{
    EXPECT_NEAR(cal::occupancy_from_counts(6.4e-5, kEtaSum, 0.0232, d::Sideband::red), 0.104, 0.01 * 0.104);
    EXPECT_EQ(cal::occupancy_from_counts(0.0, kEtaSum, 0.0232, d::Sideband::red), 0.0);
    EXPECT_NEAR(cal::occupancy_from_counts(kEtaSum * 0.0237, kEtaSum, 0.0237, d::Sideband::blue), 0.0, 1e-15);
    EXPECT_THROW((void)cal::occupancy_from_counts(0.5 * kEtaSum * 0.0237, kEtaSum, 0.0237, d::Sideband::blue),
                 phbt::ConfigError);
    EXPECT_THROW((void)cal::occupancy_from_counts(1e-5, kEtaSum, 1.5, d::Sideband::red), phbt::ConfigError);
}
