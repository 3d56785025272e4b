#pragma once

// Lindblad generators for the pulsed optomechanical system and their propagation.

#include "phbt/hilbert.hpp"
#include "phbt/ode.hpp"

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace phbt::dynamics {

using hilbert::Complex;
using hilbert::DensityMatrix;
using hilbert::Matrix;
using hilbert::SparseMatrix;

/// Optomechanical constants. All rates in rad/s, frequencies angular.
struct DeviceParams {
    double g0 = 0.0;
    double kappa = 0.0;
    double kappa_e = 0.0;
    double omega_m = 0.0;
    double omega_c = 0.0;
    double gamma = 0.0;

    /// Nanobeam device: g0/2π = 869 kHz, κ/2π = 846 MHz critically coupled,
    /// ωm/2π = 5.25 GHz, λ = 1554.35 nm, Qm = 3.8e5.
    static DeviceParams reference();

    static double omega_c_from_wavelength(double wavelength_m);

    /// Throws ConfigError unless 0 < κe ≤ κ and all rates positive.
    void validate() const;

    [[nodiscard]] double extraction_efficiency() const { return kappa_e / kappa; }
    [[nodiscard]] double photon_energy() const;
    [[nodiscard]] bool weak_coupling() const { return g0 < 1e-2 * kappa; }
    [[nodiscard]] bool resolved_sidebands() const { return kappa < 0.2 * omega_m; }
};

enum class Sideband { blue, red };

/// Unit-area Gaussian envelope truncated at ±3 FWHM and renormalized.
class Envelope {
public:
    Envelope() = default;
    Envelope(double center, double fwhm);

    [[nodiscard]] double center() const { return center_; }
    [[nodiscard]] double fwhm() const { return fwhm_; }
    [[nodiscard]] double begin() const { return center_ - 3.0 * fwhm_; }
    [[nodiscard]] double end() const { return center_ + 3.0 * fwhm_; }

    [[nodiscard]] double value(double t) const;
    /// ∫ value from begin() to t.
    [[nodiscard]] double cumulative(double t) const;

private:
    double center_ = 0.0;
    double fwhm_ = 1.0;
    double sigma_ = 0.0;
    double norm_ = 0.0;
};

struct Pulse {
    Sideband sideband = Sideband::red;
    double energy = 0.0;  // J
    Envelope envelope;

    void validate() const;
};

struct PulseSchedule {
    Pulse pump;
    Pulse read;
    double delay = 0.0;   // t_d, pump centre to read centre (s)
    double period = 0.0;  // T_r (s)

    /// Pump centred 3 FWHM after the cycle origin so its support starts at t = 0.
    static PulseSchedule make(double pump_energy, double read_energy, double fwhm, double delay,
                              double period);

    void validate() const;
};

/// Phenomenological absorption heating: cumulative added phonons n_abs(t) as a
/// piecewise-linear table; the influx ṅ_abs is its piecewise-constant derivative.
class HeatingModel {
public:
    HeatingModel() = default;
    HeatingModel(double n_init, double bath_n, std::vector<std::pair<double, double>> cumulative);

    /// Constant influx switched on at each onset time and held until horizon.
    /// `onsets` holds (switch-on time, rate in phonons per second).
    static HeatingModel from_onsets(double n_init, double bath_n,
                                    const std::vector<std::pair<double, double>>& onsets,
                                    double horizon);

    [[nodiscard]] double n_init() const { return n_init_; }
    [[nodiscard]] double bath_n() const { return bath_n_; }
    [[nodiscard]] const std::vector<std::pair<double, double>>& table() const { return table_; }

    [[nodiscard]] double influx(double t) const;
    [[nodiscard]] double added(double t) const;
    [[nodiscard]] std::vector<double> breakpoints() const;

    /// Same shape with every influx multiplied by `factor` (≥ 0).
    [[nodiscard]] HeatingModel scaled(double factor) const;
    [[nodiscard]] HeatingModel with_initial_occupation(double n_init) const;

private:
    double n_init_ = 0.0;
    double bath_n_ = 0.0;
    std::vector<std::pair<double, double>> table_;
};

struct ScatteringProbabilities {
    double p_b = 0.0;
    double p_r = 0.0;
};

/// x = (κe/κ)·4 g0² E / (ħωc (ωm² + (κ/2)²)).
[[nodiscard]] double scattering_exponent(const DeviceParams& device, double energy);
/// p_b = e^x − 1, p_r = 1 − e^−x.
[[nodiscard]] ScatteringProbabilities scattering_probabilities(const DeviceParams& device,
                                                               double energy);
/// Pulse energy whose exponent equals x.
[[nodiscard]] double energy_for_exponent(const DeviceParams& device, double exponent);

struct Rates {
    double gamma_minus = 0.0;
    double gamma_plus = 0.0;
    double n_c = 0.0;
};

/// Intracavity photon number normalized so ∫Γ₋ dt equals the scattering exponent.
[[nodiscard]] double photon_number_integral(const DeviceParams& device, double energy);
[[nodiscard]] Rates rates(const DeviceParams& device, const Pulse& pulse, double t);
/// Γ₊/Γ₋ = κ²/(κ² + 16ωm²).
[[nodiscard]] double sideband_ratio(const DeviceParams& device);

/// Lindblad generator frozen at one instant. Rates in 1/s; the Hamiltonian is H/ħ.
class Superoperator {
public:
    struct Channel {
        double rate = 0.0;
        SparseMatrix op;
    };

    Superoperator(int dim, SparseMatrix hamiltonian, std::vector<Channel> dissipators,
                  std::vector<Channel> subtracted_jumps = {});

    [[nodiscard]] int dim() const { return dim_; }
    void apply(const Matrix& rho, Matrix& out) const;
    [[nodiscard]] Matrix apply(const Matrix& rho) const;

    /// dim² × dim² matrix acting on column-stacked ρ.
    [[nodiscard]] Matrix matrix() const;

private:
    int dim_;
    SparseMatrix hamiltonian_;
    std::vector<Channel> dissipators_;
    std::vector<Channel> subtracted_;
};

/// Time-dependent generator dρ/dt = L(t)ρ.
class Generator {
public:
    virtual ~Generator() = default;
    [[nodiscard]] virtual int dim() const = 0;
    virtual void apply(double t, const Matrix& rho, Matrix& out) const = 0;
    [[nodiscard]] virtual Superoperator at(double t) const = 0;
    [[nodiscard]] virtual std::vector<double> breakpoints() const { return {}; }
};

/// Photon-counting channel attached to one pulse: jumps at rate efficiency·Γ₋(t)
/// inside [begin, end]. Blue pulses emit with b† (Stokes), red pulses with b.
struct Monitor {
    std::size_t pulse = 0;
    double efficiency = 1.0;
    double begin = 0.0;
    double end = 0.0;
};

/// Mechanics-only model with the cavity adiabatically eliminated:
/// dρ/dt = loss(t) D[b]ρ + gain(t) D[b†]ρ − Σ monitored jumps.
///
/// Red pulses add Γ₋ to loss and Γ₊ to gain; blue pulses the reverse.
class ReducedModel final : public Generator {
public:
    ReducedModel(DeviceParams device, HeatingModel heating, std::vector<Pulse> pulses,
                 int dim = hilbert::kDefaultDim);

    [[nodiscard]] int dim() const override { return dim_; }
    void apply(double t, const Matrix& rho, Matrix& out) const override;
    [[nodiscard]] Superoperator at(double t) const override;
    [[nodiscard]] std::vector<double> breakpoints() const override;

    /// Populations-only right-hand side; valid because the generator is phase covariant.
    void apply_diagonal(double t, const ode::Vector& p, ode::Vector& out) const;

    [[nodiscard]] double loss_rate(double t) const;
    [[nodiscard]] double gain_rate(double t) const;

    /// Copy whose evolution excludes jumps of `monitor` (the no-click propagator S).
    [[nodiscard]] ReducedModel without_jumps(const Monitor& monitor) const;
    [[nodiscard]] ReducedModel with_heating(HeatingModel heating) const;

    [[nodiscard]] double jump_rate(const Monitor& monitor, double t) const;
    /// True for raising (b†) jumps.
    [[nodiscard]] bool raises(const Monitor& monitor) const;

    [[nodiscard]] const DeviceParams& device() const { return device_; }
    [[nodiscard]] const HeatingModel& heating() const { return heating_; }
    [[nodiscard]] const std::vector<Pulse>& pulses() const { return pulses_; }
    [[nodiscard]] const std::vector<Monitor>& subtracted() const { return subtracted_; }

private:
    DeviceParams device_;
    HeatingModel heating_;
    std::vector<Pulse> pulses_;
    int dim_;
    std::vector<Monitor> subtracted_;
};

/// Frozen reduced generator for a single pulse (single-pulse convenience).
[[nodiscard]] Superoperator liouvillian_reduced(const DeviceParams& device,
                                                const HeatingModel& heating, const Pulse& pulse,
                                                double t, int dim = hilbert::kDefaultDim);

/// Cavity ⊗ mechanics model with H/ħ = G(t)(a†b + ab†) (red) or G(t)(a†b† + ab) (blue),
/// G(t)² = κΓ₋(t)/4 so that eliminating the cavity reproduces the reduced rates.
/// Basis index = cavity_level * mech_dim + mech_level.
class FullModel final : public Generator {
public:
    FullModel(DeviceParams device, HeatingModel heating, Pulse pulse, int cavity_dim,
              int mech_dim);

    [[nodiscard]] int dim() const override { return cavity_dim_ * mech_dim_; }
    [[nodiscard]] int cavity_dim() const { return cavity_dim_; }
    [[nodiscard]] int mech_dim() const { return mech_dim_; }
    void apply(double t, const Matrix& rho, Matrix& out) const override;
    [[nodiscard]] Superoperator at(double t) const override;
    [[nodiscard]] std::vector<double> breakpoints() const override;

    /// Copy that excludes cavity emissions registered with the given efficiency
    /// (jump ηκ aρa†) during [begin, end].
    [[nodiscard]] FullModel without_emissions(double efficiency, double begin, double end) const;

    [[nodiscard]] double coupling(double t) const;

    [[nodiscard]] Matrix product_state(const Matrix& cavity, const Matrix& mech) const;
    [[nodiscard]] Matrix trace_out_cavity(const Matrix& joint) const;

private:
    DeviceParams device_;
    HeatingModel heating_;
    Pulse pulse_;
    int cavity_dim_;
    int mech_dim_;
    SparseMatrix a_, b_, interaction_;
    SparseMatrix a_dag_a_, b_dag_b_, b_b_dag_;
    double emission_efficiency_ = 0.0;
    double emission_begin_ = 0.0;
    double emission_end_ = 0.0;
};

[[nodiscard]] Superoperator liouvillian_full(const DeviceParams& device,
                                             const HeatingModel& heating, const Pulse& pulse,
                                             double t, int cavity_dim = 4,
                                             int mech_dim = hilbert::kDefaultDim);

struct PropagationOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    bool symmetrize = true;
};

/// Integrate an arbitrary (possibly unnormalized) operator. No invariant checks.
[[nodiscard]] Matrix propagate_raw(const Matrix& rho, const Generator& generator, double t0,
                                   double t1, const PropagationOptions& options = {});

/// Integrate a density matrix; the result is validated (trace within 1e-8,
/// Hermitian, positive) and checked for truncation leaks.
[[nodiscard]] DensityMatrix propagate(const DensityMatrix& rho, const Generator& generator,
                                      double t0, double t1, double tol = 1e-8);

/// Reusable stepper for walking one state through many time points.
class Evolution {
public:
    Evolution(const Generator& generator, PropagationOptions options = {});
    Evolution(const Evolution&) = delete;
    Evolution& operator=(const Evolution&) = delete;
    void advance(Matrix& rho, double t0, double t1);

private:
    const Generator& generator_;
    PropagationOptions options_;
    std::vector<double> breakpoints_;
    Matrix scratch_in_, scratch_out_;
    ode::Integrator integrator_;
};

/// Populations-only stepper for a ReducedModel. Exact for diagonal states because
/// the reduced generator never couples populations to coherences.
class PopulationEvolution {
public:
    PopulationEvolution(const ReducedModel& model, PropagationOptions options = {});
    PopulationEvolution(const PopulationEvolution&) = delete;
    PopulationEvolution& operator=(const PopulationEvolution&) = delete;

    void advance(Eigen::VectorXd& populations, double t0, double t1);

private:
    const ReducedModel& model_;
    std::vector<double> breakpoints_;
    ode::Integrator integrator_;
};

[[nodiscard]] Eigen::VectorXd propagate_populations(const Eigen::VectorXd& populations,
                                                    const ReducedModel& model, double t0,
                                                    double t1,
                                                    const PropagationOptions& options = {});

}  // namespace phbt::dynamics
