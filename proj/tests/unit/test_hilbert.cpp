#include "oracles.hpp"

#include "phbt/errors.hpp"
#include "phbt/hilbert.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace h = phbt::hilbert;
using h::Complex;

namespace {

Eigen::MatrixXcd brute_force_channel(double nbar, Complex alpha, Complex xi, int dim)
{
    const Eigen::MatrixXcd b = phbt::oracle::lowering(dim);
    const Eigen::MatrixXcd bd = b.adjoint();
    const Eigen::MatrixXcd s = phbt::oracle::unitary_from_antihermitian(
        0.5 * (std::conj(xi) * b * b - xi * bd * bd));
    const Eigen::MatrixXcd d = phbt::oracle::unitary_from_antihermitian(alpha * bd - std::conj(alpha) * b);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    const double q = nbar / (1.0 + nbar);
    for (int n = 0; n < dim; ++n) rho(n, n) = (1.0 - q) * std::pow(q, n);
    return d * s * rho * s.adjoint() * d.adjoint();
}

double g2_of(const Eigen::MatrixXcd& rho)
{
    double n1 = 0.0;
    double n2 = 0.0;
    for (Eigen::Index k = 0; k < rho.rows(); ++k) {
        const double p = rho(k, k).real();
        n1 += static_cast<double>(k) * p;
        n2 += static_cast<double>(k) * static_cast<double>(k - 1) * p;
    }
    return n2 / (n1 * n1);
}

}  // namespace

TEST(MakeState, VacuumHasNoPhonons)
{
    EXPECT_EQ(h::mean_number(h::make_state(h::state::Vacuum{}, 10)), 0.0);
}

TEST(MakeState, ThermalMean)
{
    EXPECT_NEAR(h::mean_number(h::make_state(h::state::Thermal{0.20}, 50)), 0.20, 1e-9);
}

TEST(MakeState, CoherentMean)
{
    EXPECT_NEAR(h::mean_number(h::make_state(h::state::Coherent{{2.0, 0.0}}, 50)), 4.0, 1e-6);
}

TEST(MakeState, ThermalPopulationsAreGeometric)
{
    const auto rho = h::thermal(0.7, 50);
    const double q = 0.7 / 1.7;
    for (int n = 1; n < 20; ++n) {
        EXPECT_NEAR(rho.population(n) / rho.population(n - 1), q, 1e-12);
    }
}

TEST(MakeState, RejectsBadInput)
{
    EXPECT_THROW((void)h::fock(5, 5), phbt::ConfigError);
    EXPECT_THROW((void)h::thermal(-0.1, 10), phbt::ConfigError);
    EXPECT_THROW((void)h::vacuum(1), phbt::ConfigError);
    EXPECT_THROW((void)h::thermal(5.0, 20), phbt::TruncationError);
    EXPECT_THROW((void)h::coherent({4.0, 0.0}, 20), phbt::TruncationError);
}

TEST(Channels, DisplacedVacuumIsCoherent)
{
    const auto rho = h::apply_displacement(h::vacuum(50), {1.5, 0.0});
    EXPECT_NEAR(h::mean_number(rho), 2.25, 1e-6);
    EXPECT_NEAR(rho.matrix().trace().real(), 1.0, 1e-8);
}

TEST(Channels, SqueezedVacuumMean)
{
    const auto rho = h::apply_squeeze(h::vacuum(50), {0.44, 0.0});
    EXPECT_NEAR(h::mean_number(rho), std::pow(std::sinh(0.44), 2), 1e-6);
    EXPECT_NEAR(std::pow(std::sinh(0.44), 2), 0.2065, 1e-4);
}

TEST(Channels, MatchesBruteForceConstructionAtDim80)
{
    const double phi = 0.3;
    const Complex alpha = std::polar(2.0, phi);
    const Complex xi = std::polar(0.44, 2.0 * phi);
    const auto rho = h::apply_displacement(h::apply_squeeze(h::thermal(0.20, 50), xi), alpha);
    const double g2 = h::g2_zero(rho);
    EXPECT_NEAR(g2, g2_of(brute_force_channel(0.20, alpha, xi, 80)), 1e-6);
    // Wick's theorem on the same Gaussian state.
    EXPECT_NEAR(g2, phbt::oracle::gaussian_moments(0.20, alpha, xi).g2(), 1e-6);
}

TEST(Channels, DisplacementIsUnitary)
{
    const auto base = h::thermal(0.2, 60);
    Eigen::SelfAdjointEigenSolver<h::Matrix> before(base.matrix());
    for (double mag : {0.5, 1.5, 3.0}) {
        const auto out = h::apply_displacement(base, std::polar(mag, 0.7));
        EXPECT_NEAR(out.matrix().trace().real(), 1.0, 1e-8);
        Eigen::SelfAdjointEigenSolver<h::Matrix> after(out.matrix());
        // The largest eigenvalues carry the spectrum; tiny tail values sit in the guard band.
        for (int k = 0; k < 10; ++k) {
            const auto i = base.dim() - 1 - k;
            EXPECT_NEAR(after.eigenvalues()[i], before.eigenvalues()[i], 1e-8) << "|alpha| = " << mag;
        }
    }
}

TEST(Channels, TruncationConvergence)
{
    const Complex alpha = std::polar(1.2, 0.4);
    const Complex xi = std::polar(0.3, 0.8);
    auto run = [&](int dim) {
        return h::g2_zero(h::apply_displacement(h::apply_squeeze(h::thermal(0.2, dim), xi), alpha));
    };
    EXPECT_LT(std::abs(run(50) - run(80)), 1e-4);
}

TEST(Channels, LeakRaisesTruncationError)
{
    EXPECT_THROW((void)h::apply_displacement(h::vacuum(20), {4.0, 0.0}), phbt::TruncationError);
}

TEST(G2Zero, Fock)
{
    EXPECT_NEAR(h::g2_zero(h::fock(1)), 0.0, 1e-12);
    EXPECT_NEAR(h::g2_zero(h::fock(2)), 0.5, 1e-12);
    for (int n = 1; n <= 5; ++n) EXPECT_NEAR(h::g2_zero(h::fock(n, 50)), 1.0 - 1.0 / n, 1e-8);
}

TEST(G2Zero, Thermal)
{
    for (double nbar : {0.1, 0.2, 1.0}) EXPECT_NEAR(h::g2_zero(h::thermal(nbar, 50)), 2.0, 1e-8);
    // n̄ = 5 keeps (5/6)^dim below 1e-8 only at dim ≥ 110.
    EXPECT_NEAR(h::g2_zero(h::thermal(5.0, 160)), 2.0, 1e-8);
}

TEST(G2Zero, Coherent)
{
    EXPECT_NEAR(h::g2_zero(h::coherent({2.0, 0.0}, 50)), 1.0, 1e-9);
    EXPECT_NEAR(h::g2_zero(h::coherent(std::polar(1.3, 2.1), 50)), 1.0, 1e-9);
}

TEST(G2Zero, VacuumIsUndefined)
{
    EXPECT_THROW((void)h::g2_zero(h::vacuum(10)), phbt::UndefinedError);
}

TEST(Expect, Examples)
{
    const h::ModeOps ops(50);
    EXPECT_NEAR(h::expect(h::thermal(0.104, 50), ops.number).real(), 0.104, 1e-9);
    EXPECT_EQ(h::expect(h::vacuum(50), ops.number).real(), 0.0);
    EXPECT_NEAR(h::expect(h::fock(1, 50), ops.number * ops.number).real(), 1.0, 1e-12);
    EXPECT_THROW((void)h::expect(h::vacuum(10), ops.number), phbt::ConfigError);
}

TEST(ModeOps, CommutatorOnLowerLevels)
{
    const h::ModeOps ops(50);
    const h::Matrix c = ops.annihilate * ops.create - ops.create * ops.annihilate;
    const h::Matrix diff = c.topLeftCorner(49, 49) - h::Matrix::Identity(49, 49);
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DensityMatrix, RejectsInvalidMatrices)
{
    h::Matrix m = h::Matrix::Zero(3, 3);
    m(0, 0) = 0.5;
    EXPECT_THROW(h::DensityMatrix{m}, phbt::NumericError);
    m(0, 0) = 1.5;
    m(1, 1) = -0.5;
    EXPECT_THROW(h::DensityMatrix{m}, phbt::NumericError);
}
