#include "phbt/constants.hpp"
#include "phbt/dynamics.hpp"
#include "phbt/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace d = phbt::dynamics;
namespace h = phbt::hilbert;

namespace {

constexpr double kFwhm = 32e-9;
const d::Envelope kEnvelope(3.0 * kFwhm, kFwhm);
constexpr double kSupportEnd = 6.0 * kFwhm;

d::DeviceParams device() { return d::DeviceParams::reference(); }

d::DeviceParams lossless(d::DeviceParams dev)
{
    dev.gamma = 1e-12;
    return dev;
}

d::Pulse pulse(d::Sideband side, double energy) { return d::Pulse{side, energy, kEnvelope}; }

/// ∫Γ₋ dt by composite Simpson over the pulse support.
double integrated_gamma_minus(const d::DeviceParams& dev, const d::Pulse& p, double t_end = kSupportEnd)
{
    const int n = 4000;
    const double a = kEnvelope.begin();
    const double step = (t_end - a) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        s += w * d::rates(dev, p, a + i * step).gamma_minus;
    }
    return s * step / 3.0;
}

class ZeroGenerator final : public d::Generator {
public:
    explicit ZeroGenerator(int dim) : dim_(dim) {}
    [[nodiscard]] int dim() const override { return dim_; }
    void apply(double, const h::Matrix&, h::Matrix& out) const override { out.setZero(dim_, dim_); }
    [[nodiscard]] d::Superoperator at(double) const override
    {
        return d::Superoperator(dim_, h::SparseMatrix(dim_, dim_), {});
    }

private:
    int dim_;
};

}  // namespace

TEST(Device, ReferenceConstants)
{
    const auto dev = device();
    EXPECT_NEAR(dev.g0 / phbt::constants::two_pi, 869e3, 1e-6);
    EXPECT_NEAR(dev.kappa / phbt::constants::two_pi, 846e6, 1e-3);
    EXPECT_DOUBLE_EQ(dev.kappa_e, 0.5 * dev.kappa);
    EXPECT_TRUE(dev.weak_coupling());
    EXPECT_TRUE(dev.resolved_sidebands());
    // Mechanical damping time ≈ 11.5 µs.
    EXPECT_NEAR(1.0 / dev.gamma, 11.5e-6, 0.1e-6);
}

TEST(Device, ValidateRejectsOvercoupling)
{
    auto dev = device();
    dev.kappa_e = 2.0 * dev.kappa;
    EXPECT_THROW(dev.validate(), phbt::ConfigError);
}

TEST(Envelope, IntegratesToOne)
{
    const int n = 20000;
    const double step = (kEnvelope.end() - kEnvelope.begin()) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        s += w * kEnvelope.value(kEnvelope.begin() + i * step);
    }
    EXPECT_NEAR(s * step / 3.0, 1.0, 1e-9);
    EXPECT_NEAR(kEnvelope.cumulative(kEnvelope.end()), 1.0, 1e-12);
    EXPECT_EQ(kEnvelope.value(kEnvelope.end() + 1e-9), 0.0);
    // Half maximum at ± FWHM/2.
    EXPECT_NEAR(kEnvelope.value(kEnvelope.center() + 0.5 * kFwhm) / kEnvelope.value(kEnvelope.center()), 0.5,
                1e-12);
}

TEST(Scattering, PumpAndReadEnergies)
{
    const auto pump = d::scattering_probabilities(device(), 27e-15);
    EXPECT_NEAR(pump.p_b, 0.012, 0.1 * 0.012);
    const auto read = d::scattering_probabilities(device(), 924e-15);
    EXPECT_NEAR(read.p_r, 0.325, 0.1 * 0.325);
    const auto probe = d::scattering_probabilities(device(), 55.16e-15);
    EXPECT_NEAR(probe.p_b, 0.0237, 0.1 * 0.0237);
    EXPECT_NEAR(probe.p_r, 0.0232, 0.1 * 0.0232);
    const auto zero = d::scattering_probabilities(device(), 0.0);
    EXPECT_EQ(zero.p_b, 0.0);
    EXPECT_EQ(zero.p_r, 0.0);
}

TEST(Scattering, ExponentFromConstants)
{
    const auto dev = device();
    const double e = 27e-15;
    const double x = 0.5 * 4.0 * dev.g0 * dev.g0 * e /
                     (phbt::constants::hbar * dev.omega_c * (dev.omega_m * dev.omega_m + dev.kappa * dev.kappa / 4.0));
    EXPECT_NEAR(d::scattering_exponent(dev, e), x, 1e-12 * x);
    EXPECT_NEAR(d::energy_for_exponent(dev, x), e, 1e-9 * e);
}

TEST(Rates, SidebandRatioMatchesResponseFunctions)
{
    const auto dev = device();
    const std::complex<double> eta_minus = 2.0 / dev.kappa;
    const std::complex<double> eta_plus = 2.0 / std::complex<double>(dev.kappa, 4.0 * dev.omega_m);
    const double independent = eta_plus.real() / eta_minus.real();
    EXPECT_NEAR(d::sideband_ratio(dev), independent, 1e-15);
    EXPECT_NEAR(independent, 1.6e-3, 0.05e-3);
    const auto p = pulse(d::Sideband::red, 924e-15);
    const auto r = d::rates(dev, p, kEnvelope.center());
    EXPECT_NEAR(r.gamma_plus / r.gamma_minus, independent, 1e-12);
}

TEST(Rates, IntegralReproducesScatteringProbability)
{
    const auto dev = device();
    const double x = integrated_gamma_minus(dev, pulse(d::Sideband::red, 924e-15));
    EXPECT_NEAR(1.0 - std::exp(-x), d::scattering_probabilities(dev, 924e-15).p_r, 1e-6);
}

TEST(Rates, ZeroEnergyAndOutsideSupport)
{
    const auto dev = device();
    const auto r0 = d::rates(dev, pulse(d::Sideband::red, 0.0), kEnvelope.center());
    EXPECT_EQ(r0.gamma_minus, 0.0);
    EXPECT_EQ(r0.gamma_plus, 0.0);
    EXPECT_EQ(r0.n_c, 0.0);
    const auto out = d::rates(dev, pulse(d::Sideband::red, 924e-15), kEnvelope.end() + 1e-9);
    EXPECT_EQ(out.gamma_minus, 0.0);
}

TEST(Heating, TableInterpolation)
{
    const d::HeatingModel heat(0.2, 0.0, {{0.0, 0.0}, {1e-6, 0.3}, {2e-6, 0.3}, {3e-6, 1.3}});
    EXPECT_NEAR(heat.added(0.5e-6), 0.15, 1e-12);
    EXPECT_NEAR(heat.influx(0.5e-6), 0.3e6, 1e-6);
    EXPECT_EQ(heat.influx(1.5e-6), 0.0);
    EXPECT_NEAR(heat.influx(2.5e-6), 1e6, 1e-6);
    EXPECT_NEAR(heat.scaled(2.0).added(3e-6), 2.6, 1e-12);
    EXPECT_EQ(heat.with_initial_occupation(1.0).n_init(), 1.0);
    EXPECT_THROW(d::HeatingModel(0.0, 0.0, {{0.0, 1.0}, {1.0, 0.5}}), phbt::ConfigError);
    EXPECT_THROW(d::HeatingModel(-0.1, 0.0, {}), phbt::ConfigError);
}

TEST(Heating, OnsetsBuildPiecewiseConstantInflux)
{
    const auto heat = d::HeatingModel::from_onsets(0.0, 0.0, {{1e-6, 2e5}, {2e-6, 1e6}}, 5e-6);
    EXPECT_EQ(heat.influx(0.5e-6), 0.0);
    EXPECT_NEAR(heat.influx(1.5e-6), 2e5, 1e-6);
    EXPECT_NEAR(heat.influx(3e-6), 1.2e6, 1e-6);
    EXPECT_NEAR(heat.added(5e-6), 0.2 + 3.6, 1e-12);
}

TEST(ReducedModel, ThermalFixedPointIsStationary)
{
    const auto dev = device();
    const double nbar = 0.4;
    const d::ReducedModel model(dev, d::HeatingModel(nbar, nbar, {}), {}, 50);
    h::Matrix out;
    model.apply(0.0, h::thermal(nbar, 50).matrix(), out);
    // In units of the damping time 1/γ.
    EXPECT_LT(out.cwiseAbs().maxCoeff() / dev.gamma, 1e-12);
}

TEST(ReducedModel, RedPulseFollowsScalarOccupationOde)
{
    // d⟨N⟩/dt = −(Γ₋ − Γ₊)⟨N⟩ + Γ₊ closes exactly; with Γ₊ = rΓ₋ and X = ∫Γ₋:
    // ⟨N⟩ = N₀e^{−(1−r)X} + r/(1−r)(1 − e^{−(1−r)X}).
    const auto dev = lossless(device());
    const auto p = pulse(d::Sideband::red, 924e-15);
    const d::ReducedModel model(dev, d::HeatingModel(1.0, 0.0, {}), {p}, 50);
    const double r = d::sideband_ratio(dev);
    for (double t : {2.0 * kFwhm, 3.0 * kFwhm, kSupportEnd}) {
        const auto rho = d::propagate(h::thermal(1.0, 50), model, 0.0, t, 1e-10);
        const double x = integrated_gamma_minus(dev, p, t);
        const double decay = std::exp(-(1.0 - r) * x);
        EXPECT_NEAR(h::mean_number(rho), decay + r / (1.0 - r) * (1.0 - decay), 1e-6) << "t = " << t;
    }
}

TEST(ReducedModel, BluePulseGain)
{
    const auto dev = lossless(device());
    const double energy = d::energy_for_exponent(dev, std::log1p(0.012));
    const auto p = pulse(d::Sideband::blue, energy);
    const d::ReducedModel model(dev, d::HeatingModel(0.0, 0.0, {}), {p}, 50);
    const auto rho = d::propagate(h::vacuum(50), model, 0.0, kSupportEnd, 1e-10);
    const double x = integrated_gamma_minus(dev, p);
    EXPECT_NEAR(h::mean_number(rho), std::exp(x) - 1.0, 1e-6);
}

TEST(ReducedModel, BlueRedSymmetry)
{
    // Far-resolved sidebands make Γ₊ negligible so gain and loss factors are pure exponentials.
    auto dev = lossless(device());
    dev.omega_m = 1e5 * dev.kappa;
    const double energy = d::energy_for_exponent(dev, 0.3);
    const d::ReducedModel blue(dev, d::HeatingModel(0.0, 0.0, {}), {pulse(d::Sideband::blue, energy)}, 50);
    const d::ReducedModel red(dev, d::HeatingModel(0.0, 0.0, {}), {pulse(d::Sideband::red, energy)}, 50);
    const double gain = h::mean_number(d::propagate(h::vacuum(50), blue, 0.0, kSupportEnd, 1e-12)) + 1.0;
    const double loss = h::mean_number(d::propagate(h::fock(1, 50), red, 0.0, kSupportEnd, 1e-12));
    EXPECT_NEAR(gain * loss, 1.0, 1e-9);
}

TEST(ReducedModel, InfluxFollowsScalarOde)
{
    const auto dev = device();
    const double rate = 1e6;  // phonons/s
    const d::ReducedModel model(dev, d::HeatingModel::from_onsets(0.0, 0.0, {{0.0, rate}}, 1e-5), {}, 50);
    const double t = 2e-6;
    const auto rho = d::propagate(h::thermal(0.2, 50), model, 0.0, t, 1e-10);
    const double e = std::exp(-dev.gamma * t);
    EXPECT_NEAR(h::mean_number(rho), 0.2 * e + rate / dev.gamma * (1.0 - e), 1e-7);
}

TEST(ReducedModel, MonotoneInInflux)
{
    const auto dev = device();
    const auto p = pulse(d::Sideband::red, 924e-15);
    double previous = -1.0;
    for (double rate : {0.0, 1e5, 3e5, 1e6, 3e6}) {
        const d::ReducedModel model(dev, d::HeatingModel::from_onsets(0.2, 0.0, {{0.0, rate}}, 1e-6), {p}, 50);
        const double n = h::mean_number(d::propagate(h::thermal(0.2, 50), model, 0.0, kSupportEnd));
        EXPECT_GE(n, previous) << "influx " << rate;
        previous = n;
    }
}

TEST(ReducedModel, DenseAndPopulationPathsAgree)
{
    const auto dev = device();
    const auto sched = d::PulseSchedule::make(27e-15, 924e-15, kFwhm, 115e-9, 50e-6);
    const auto heat = d::HeatingModel::from_onsets(0.2, 0.0, {{0.0, 3e5}, {sched.read.envelope.begin(), 1e6}}, 50e-6);
    const d::ReducedModel model(dev, heat, {sched.pump, sched.read}, 50);
    const double t1 = sched.read.envelope.end();
    const auto rho = d::propagate(h::thermal(0.2, 50), model, 0.0, t1, 1e-10);
    d::PropagationOptions options;
    options.rtol = 1e-10;
    options.atol = 1e-13;
    const Eigen::VectorXd pops =
        d::propagate_populations(h::thermal(0.2, 50).populations(), model, 0.0, t1, options);
    EXPECT_LT((rho.populations() - pops).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Propagate, ZeroGeneratorIsIdentity)
{
    const auto rho = h::apply_displacement(h::thermal(0.3, 30), {0.5, 0.2});
    const auto out = d::propagate(rho, ZeroGenerator(30), 0.0, 1e-6);
    EXPECT_LT((out.matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Propagate, FreeDecayOverOneDampingTime)
{
    const auto dev = device();
    const d::ReducedModel model(dev, d::HeatingModel(0.0, 0.0, {}), {}, 10);
    const double tol = 1e-8;
    const auto rho = d::propagate(h::fock(1, 10), model, 0.0, 1.0 / dev.gamma, tol);
    EXPECT_NEAR(h::mean_number(rho), std::exp(-1.0), tol * 10);
}

TEST(Propagate, TracePreservedPerPulse)
{
    const auto dev = device();
    const auto p = pulse(d::Sideband::red, 924e-15);
    const d::ReducedModel model(dev, d::HeatingModel(0.0, 0.0, {}), {p}, 50);
    d::PropagationOptions options;
    options.rtol = 1e-10;
    options.atol = 1e-10;
    const auto start = h::apply_displacement(h::thermal(0.5, 50), {1.0, 0.5});
    const h::Matrix out = d::propagate_raw(start.matrix(), model, 0.0, kSupportEnd, options);
    EXPECT_LT(std::abs(out.trace().real() - 1.0), 1e-9);
    EXPECT_LT((out - out.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    const h::DensityMatrix checked(out);
    EXPECT_GT(checked.min_eigenvalue(), h::kPositivityTolerance);
}

TEST(Propagate, RejectsBackwardInterval)
{
    const d::ReducedModel model(device(), d::HeatingModel(0.0, 0.0, {}), {}, 10);
    EXPECT_THROW((void)d::propagate(h::vacuum(10), model, 1e-6, 0.0), phbt::ConfigError);
}

TEST(FullModel, StationaryWithoutCoupling)
{
    const auto dev = device();
    const double nbar = 0.3;
    // A zero-energy pulse leaves the beam-splitter coupling at zero.
    const d::FullModel full(dev, d::HeatingModel(nbar, nbar, {}), pulse(d::Sideband::red, 0.0), 3, 20);
    const h::Matrix joint = full.product_state(h::vacuum(3).matrix(), h::thermal(nbar, 20).matrix());
    h::Matrix out;
    full.apply(kEnvelope.center(), joint, out);
    EXPECT_LT(out.cwiseAbs().maxCoeff() / dev.gamma, 1e-12);
}

TEST(FullModel, BluePulseTwoModeAmplitudes)
{
    const auto dev = device();
    const double p_b = 0.012;
    const auto p = pulse(d::Sideband::blue, d::energy_for_exponent(dev, std::log1p(p_b)));
    const d::FullModel full(dev, d::HeatingModel(0.0, 0.0, {}), p, 4, 10);
    const h::Matrix joint = full.product_state(h::vacuum(4).matrix(), h::vacuum(10).matrix());
    const h::Matrix mech = full.trace_out_cavity(d::propagate_raw(joint, full, 0.0, kSupportEnd));
    // After the cavity has decayed, each phonon is paired with an emitted photon: |c_k|² = P_k.
    const double c1 = std::sqrt(mech(1, 1).real() / mech(0, 0).real());
    const double c2 = std::sqrt(mech(2, 2).real() / mech(0, 0).real());
    EXPECT_NEAR(c1, std::sqrt(p_b), 0.05 * std::sqrt(p_b));
    EXPECT_NEAR(c2, p_b, 0.05 * p_b);
}

TEST(FullModel, RedPulseMatchesReducedModel)
{
    const auto dev = device();
    const auto p = pulse(d::Sideband::red, 924e-15);
    const auto heat = d::HeatingModel(0.0, 0.0, {});
    const d::FullModel full(dev, heat, p, 4, 8);
    const h::Matrix joint = full.product_state(h::vacuum(4).matrix(), h::fock(1, 8).matrix());
    const h::Matrix mech = full.trace_out_cavity(d::propagate_raw(joint, full, 0.0, kSupportEnd));
    double n_full = 0.0;
    for (int k = 0; k < 8; ++k) n_full += k * mech(k, k).real();
    const d::ReducedModel reduced(dev, heat, {p}, 8);
    const double n_reduced = h::mean_number(d::propagate(h::fock(1, 8), reduced, 0.0, kSupportEnd));
    EXPECT_NEAR(n_full, n_reduced, 0.02 * n_reduced);
    EXPECT_NEAR(n_reduced, 1.0 - d::scattering_probabilities(dev, 924e-15).p_r, 0.02);
}

TEST(FullModel, DimensionGuard)
{
    EXPECT_THROW(d::FullModel(device(), d::HeatingModel(0.0, 0.0, {}), pulse(d::Sideband::red, 1e-15), 1, 10),
                 phbt::ConfigError);
}
