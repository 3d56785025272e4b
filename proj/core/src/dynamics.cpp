#include "phbt/dynamics.hpp"

#include "phbt/constants.hpp"
#include "phbt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phbt::dynamics {

namespace {

constexpr double kMaxCouplingRatio = 0.1;  // effective G/κ allowed in the eliminated model

double sqrt_d(int n) { return std::sqrt(static_cast<double>(n)); }

}  // namespace

// ---------------------------------------------------------------- device

DeviceParams DeviceParams::reference()
{
    using constants::two_pi;
    DeviceParams d;
    d.g0 = two_pi * 869e3;
    d.kappa = two_pi * 846e6;
    d.kappa_e = 0.5 * d.kappa;
    d.omega_m = two_pi * 5.25e9;
    d.omega_c = omega_c_from_wavelength(1554.35e-9);
    d.gamma = d.omega_m / 3.8e5;
    return d;
}

double DeviceParams::omega_c_from_wavelength(double wavelength_m)
{
    if (!(wavelength_m > 0.0)) throw ConfigError("wavelength must be positive");
    return constants::two_pi * constants::speed_of_light / wavelength_m;
}

void DeviceParams::validate() const
{
    if (!(g0 > 0.0)) throw ConfigError("device.g0 must be positive");
    if (!(kappa > 0.0)) throw ConfigError("device.kappa must be positive");
    if (!(kappa_e > 0.0) || kappa_e > kappa) {
        throw ConfigError("device.kappa_e must satisfy 0 < kappa_e <= kappa");
    }
    if (!(omega_m > 0.0)) throw ConfigError("device.omega_m must be positive");
    if (!(omega_c > 0.0)) throw ConfigError("device.omega_c must be positive");
    if (!(gamma >= 0.0)) throw ConfigError("device.gamma must be >= 0");
}

double DeviceParams::photon_energy() const { return constants::hbar * omega_c; }

// ---------------------------------------------------------------- pulses

Envelope::Envelope(double center, double fwhm) : center_(center), fwhm_(fwhm)
{
    if (!(fwhm > 0.0)) throw ConfigError("pulse FWHM must be positive");
    sigma_ = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    norm_ = sigma_ * std::sqrt(2.0 * constants::pi) *
            std::erf(3.0 * fwhm_ / (sigma_ * std::sqrt(2.0)));
}

double Envelope::value(double t) const
{
    const double u = t - center_;
    if (std::abs(u) > 3.0 * fwhm_) return 0.0;
    return std::exp(-0.5 * u * u / (sigma_ * sigma_)) / norm_;
}

double Envelope::cumulative(double t) const
{
    if (t <= begin()) return 0.0;
    if (t >= end()) return 1.0;
    const double s = sigma_ * std::sqrt(2.0);
    const double edge = std::erf(3.0 * fwhm_ / s);
    return 0.5 * (std::erf((t - center_) / s) + edge) / edge;
}

void Pulse::validate() const
{
    if (!(energy >= 0.0)) throw ConfigError("pulse energy must be >= 0");
}

PulseSchedule PulseSchedule::make(double pump_energy, double read_energy, double fwhm,
                                  double delay, double period)
{
    PulseSchedule s;
    const double pump_center = 3.0 * fwhm;
    s.pump = Pulse{Sideband::blue, pump_energy, Envelope(pump_center, fwhm)};
    s.read = Pulse{Sideband::red, read_energy, Envelope(pump_center + delay, fwhm)};
    s.delay = delay;
    s.period = period;
    s.validate();
    return s;
}

void PulseSchedule::validate() const
{
    pump.validate();
    read.validate();
    if (pump.sideband != Sideband::blue) throw ConfigError("schedule.pump must be blue-detuned");
    if (read.sideband != Sideband::red) throw ConfigError("schedule.read must be red-detuned");
    if (!(delay > 0.0)) throw ConfigError("schedule.t_d must be positive");
    if (!(period > read.envelope.end())) {
        throw ConfigError("schedule.T_r must exceed t_d plus the pulse durations");
    }
}

// ---------------------------------------------------------------- heating

HeatingModel::HeatingModel(double n_init, double bath_n,
                           std::vector<std::pair<double, double>> cumulative)
    : n_init_(n_init), bath_n_(bath_n), table_(std::move(cumulative))
{
    if (!(n_init_ >= 0.0)) throw ConfigError("heating.n_init must be >= 0");
    if (!(bath_n_ >= 0.0)) throw ConfigError("heating.bath_n must be >= 0");
    for (std::size_t i = 1; i < table_.size(); ++i) {
        if (!(table_[i].first > table_[i - 1].first)) {
            throw ConfigError("heating table times must be strictly increasing");
        }
        if (table_[i].second < table_[i - 1].second) {
            throw ConfigError("heating table must be non-decreasing (cumulative phonons)");
        }
    }
}

HeatingModel HeatingModel::from_onsets(double n_init, double bath_n,
                                       const std::vector<std::pair<double, double>>& onsets,
                                       double horizon)
{
    std::vector<double> knots;
    for (const auto& [t, rate] : onsets) {
        if (!(rate >= 0.0)) throw ConfigError("heating influx rates must be >= 0");
        if (t < horizon) knots.push_back(t);
    }
    if (knots.empty()) return HeatingModel(n_init, bath_n, {});
    knots.push_back(horizon);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    std::vector<std::pair<double, double>> table;
    for (double k : knots) {
        double total = 0.0;
        for (const auto& [t, rate] : onsets) total += rate * std::max(0.0, k - t);
        table.emplace_back(k, total);
    }
    return HeatingModel(n_init, bath_n, std::move(table));
}

double HeatingModel::influx(double t) const
{
    for (std::size_t i = 1; i < table_.size(); ++i) {
        if (t >= table_[i - 1].first && t < table_[i].first) {
            return (table_[i].second - table_[i - 1].second) /
                   (table_[i].first - table_[i - 1].first);
        }
    }
    return 0.0;
}

double HeatingModel::added(double t) const
{
    if (table_.empty()) return 0.0;
    if (t <= table_.front().first) return table_.front().second;
    for (std::size_t i = 1; i < table_.size(); ++i) {
        if (t <= table_[i].first) {
            const auto& [t0, n0] = table_[i - 1];
            const auto& [t1, n1] = table_[i];
            return n0 + (n1 - n0) * (t - t0) / (t1 - t0);
        }
    }
    return table_.back().second;
}

std::vector<double> HeatingModel::breakpoints() const
{
    std::vector<double> out;
    out.reserve(table_.size());
    for (const auto& knot : table_) out.push_back(knot.first);
    return out;
}

HeatingModel HeatingModel::scaled(double factor) const
{
    if (!(factor >= 0.0)) throw ConfigError("heating scale factor must be >= 0");
    auto table = table_;
    for (auto& knot : table) knot.second *= factor;
    return HeatingModel(n_init_, bath_n_, std::move(table));
}

HeatingModel HeatingModel::with_initial_occupation(double n_init) const
{
    return HeatingModel(n_init, bath_n_, table_);
}

// ---------------------------------------------------------------- scattering

double scattering_exponent(const DeviceParams& device, double energy)
{
    if (!(energy >= 0.0)) throw ConfigError("pulse energy must be >= 0");
    const double detuning_sq =
        device.omega_m * device.omega_m + 0.25 * device.kappa * device.kappa;
    return device.extraction_efficiency() * 4.0 * device.g0 * device.g0 * energy /
           (device.photon_energy() * detuning_sq);
}

ScatteringProbabilities scattering_probabilities(const DeviceParams& device, double energy)
{
    const double x = scattering_exponent(device, energy);
    return {std::expm1(x), -std::expm1(-x)};
}

double energy_for_exponent(const DeviceParams& device, double exponent)
{
    if (!(exponent >= 0.0)) throw ConfigError("scattering exponent must be >= 0");
    return exponent / scattering_exponent(device, 1.0);
}

double photon_number_integral(const DeviceParams& device, double energy)
{
    const double detuning_sq =
        device.omega_m * device.omega_m + 0.25 * device.kappa * device.kappa;
    return device.kappa * energy / (device.photon_energy() * detuning_sq);
}

double sideband_ratio(const DeviceParams& device)
{
    const double k2 = device.kappa * device.kappa;
    return k2 / (k2 + 16.0 * device.omega_m * device.omega_m);
}

Rates rates(const DeviceParams& device, const Pulse& pulse, double t)
{
    Rates r;
    const double shape = pulse.envelope.value(t);
    if (shape == 0.0 || pulse.energy == 0.0) return r;
    r.n_c = photon_number_integral(device, pulse.energy) * shape;
    const double prefactor = 2.0 * device.extraction_efficiency() * device.g0 * device.g0 * r.n_c;
    const Complex eta_plus = 2.0 / Complex(device.kappa, 4.0 * device.omega_m);
    r.gamma_minus = prefactor * (2.0 / device.kappa);
    r.gamma_plus = prefactor * eta_plus.real();
    return r;
}

// ---------------------------------------------------------------- superoperator

Superoperator::Superoperator(int dim, SparseMatrix hamiltonian, std::vector<Channel> dissipators,
                             std::vector<Channel> subtracted_jumps)
    : dim_(dim),
      hamiltonian_(std::move(hamiltonian)),
      dissipators_(std::move(dissipators)),
      subtracted_(std::move(subtracted_jumps))
{
    if (hamiltonian_.rows() == 0) hamiltonian_.resize(dim, dim);
}

void Superoperator::apply(const Matrix& rho, Matrix& out) const
{
    out.noalias() = Complex(0.0, -1.0) * (hamiltonian_ * rho);
    out.noalias() += Complex(0.0, 1.0) * (rho * hamiltonian_);
    for (const auto& ch : dissipators_) {
        if (ch.rate == 0.0) continue;
        const SparseMatrix op_dag = ch.op.adjoint();
        const SparseMatrix number = op_dag * ch.op;
        const Matrix jumped = ch.op * rho;
        out.noalias() += ch.rate * (jumped * op_dag);
        out.noalias() -= 0.5 * ch.rate * (number * rho);
        out.noalias() -= 0.5 * ch.rate * (rho * number);
    }
    for (const auto& ch : subtracted_) {
        if (ch.rate == 0.0) continue;
        const SparseMatrix op_dag = ch.op.adjoint();
        const Matrix jumped = ch.op * rho;
        out.noalias() -= ch.rate * (jumped * op_dag);
    }
}

Matrix Superoperator::apply(const Matrix& rho) const
{
    Matrix out(dim_, dim_);
    apply(rho, out);
    return out;
}

Matrix Superoperator::matrix() const
{
    const int d2 = dim_ * dim_;
    Matrix out(d2, d2);
    Matrix basis = Matrix::Zero(dim_, dim_);
    Matrix image(dim_, dim_);
    for (int col = 0; col < dim_; ++col) {
        for (int row = 0; row < dim_; ++row) {
            basis(row, col) = 1.0;
            apply(basis, image);
            out.col(col * dim_ + row) = Eigen::Map<const Eigen::VectorXcd>(image.data(), d2);
            basis(row, col) = 0.0;
        }
    }
    return out;
}

// ---------------------------------------------------------------- reduced model

ReducedModel::ReducedModel(DeviceParams device, HeatingModel heating, std::vector<Pulse> pulses,
                           int dim)
    : device_(device), heating_(std::move(heating)), pulses_(std::move(pulses)), dim_(dim)
{
    device_.validate();
    if (dim_ < 2) throw ConfigError("ReducedModel: dim must be >= 2");
    if (!device_.weak_coupling()) {
        throw ConfigError("ReducedModel: g0 << kappa required for adiabatic elimination");
    }
    for (const auto& pulse : pulses_) {
        pulse.validate();
        const double peak = rates(device_, pulse, pulse.envelope.center()).gamma_minus;
        const double coupling = std::sqrt(device_.kappa * peak / 4.0);
        if (coupling > kMaxCouplingRatio * device_.kappa) {
            std::ostringstream msg;
            msg << "ReducedModel: pulse drives G/kappa = " << coupling / device_.kappa
                << ", outside the weak-coupling regime";
            throw ConfigError(msg.str());
        }
    }
}

double ReducedModel::loss_rate(double t) const
{
    double rate = device_.gamma * (heating_.bath_n() + 1.0) + heating_.influx(t);
    for (const auto& pulse : pulses_) {
        const Rates r = rates(device_, pulse, t);
        rate += pulse.sideband == Sideband::red ? r.gamma_minus : r.gamma_plus;
    }
    return rate;
}

double ReducedModel::gain_rate(double t) const
{
    double rate = device_.gamma * heating_.bath_n() + heating_.influx(t);
    for (const auto& pulse : pulses_) {
        const Rates r = rates(device_, pulse, t);
        rate += pulse.sideband == Sideband::red ? r.gamma_plus : r.gamma_minus;
    }
    return rate;
}

double ReducedModel::jump_rate(const Monitor& monitor, double t) const
{
    if (t < monitor.begin || t > monitor.end) return 0.0;
    return monitor.efficiency * rates(device_, pulses_.at(monitor.pulse), t).gamma_minus;
}

bool ReducedModel::raises(const Monitor& monitor) const
{
    return pulses_.at(monitor.pulse).sideband == Sideband::blue;
}

void ReducedModel::apply(double t, const Matrix& rho, Matrix& out) const
{
    const double loss = loss_rate(t);
    const double gain = gain_rate(t);
    double lower_jump = 0.0;
    double raise_jump = 0.0;
    for (const auto& m : subtracted_) {
        (raises(m) ? raise_jump : lower_jump) += jump_rate(m, t);
    }
    const int d = dim_;
    out.resize(d, d);
    // Truncated b b† is diag(1, ..., d-1, 0), which keeps the generator trace preserving.
    auto bbd = [d](int n) { return n + 1 < d ? n + 1.0 : 0.0; };
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m < d; ++m) {
            Complex value = -0.5 * (loss * (m + n) + gain * (bbd(m) + bbd(n))) * rho(m, n);
            if (m + 1 < d && n + 1 < d) {
                value += (loss - lower_jump) * sqrt_d(m + 1) * sqrt_d(n + 1) * rho(m + 1, n + 1);
            }
            if (m >= 1 && n >= 1) {
                value += (gain - raise_jump) * sqrt_d(m) * sqrt_d(n) * rho(m - 1, n - 1);
            }
            out(m, n) = value;
        }
    }
}

void ReducedModel::apply_diagonal(double t, const ode::Vector& p, ode::Vector& out) const
{
    const double loss = loss_rate(t);
    const double gain = gain_rate(t);
    double lower_jump = 0.0;
    double raise_jump = 0.0;
    for (const auto& m : subtracted_) {
        (raises(m) ? raise_jump : lower_jump) += jump_rate(m, t);
    }
    const int d = dim_;
    out.resize(d);
    for (int n = 0; n < d; ++n) {
        const double bbd = n + 1 < d ? n + 1.0 : 0.0;
        Complex value = -(loss * n + gain * bbd) * p(n);
        if (n + 1 < d) value += (loss - lower_jump) * (n + 1.0) * p(n + 1);
        if (n >= 1) value += (gain - raise_jump) * static_cast<double>(n) * p(n - 1);
        out(n) = value;
    }
}

Superoperator ReducedModel::at(double t) const
{
    const SparseMatrix b = hilbert::sparse_annihilator(dim_);
    const SparseMatrix bd = hilbert::sparse_creator(dim_);
    std::vector<Superoperator::Channel> dissipators{{loss_rate(t), b}, {gain_rate(t), bd}};
    std::vector<Superoperator::Channel> jumps;
    for (const auto& m : subtracted_) {
        jumps.push_back({jump_rate(m, t), raises(m) ? bd : b});
    }
    return Superoperator(dim_, SparseMatrix(dim_, dim_), std::move(dissipators), std::move(jumps));
}

std::vector<double> ReducedModel::breakpoints() const
{
    std::vector<double> out = heating_.breakpoints();
    for (const auto& pulse : pulses_) {
        out.push_back(pulse.envelope.begin());
        out.push_back(pulse.envelope.end());
    }
    for (const auto& m : subtracted_) {
        out.push_back(m.begin);
        out.push_back(m.end);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ReducedModel ReducedModel::without_jumps(const Monitor& monitor) const
{
    if (monitor.pulse >= pulses_.size()) throw ConfigError("Monitor: pulse index out of range");
    if (!(monitor.efficiency >= 0.0 && monitor.efficiency <= 1.0)) {
        throw ConfigError("Monitor: efficiency must lie in [0, 1]");
    }
    ReducedModel copy = *this;
    copy.subtracted_.push_back(monitor);
    return copy;
}

ReducedModel ReducedModel::with_heating(HeatingModel heating) const
{
    ReducedModel copy = *this;
    copy.heating_ = std::move(heating);
    return copy;
}

Superoperator liouvillian_reduced(const DeviceParams& device, const HeatingModel& heating,
                                  const Pulse& pulse, double t, int dim)
{
    return ReducedModel(device, heating, {pulse}, dim).at(t);
}

// ---------------------------------------------------------------- propagation

Evolution::Evolution(const Generator& generator, PropagationOptions options)
    : generator_(generator),
      options_(options),
      breakpoints_(generator.breakpoints()),
      integrator_(
          [this](double t, const ode::Vector& y, ode::Vector& dy) {
              const int d = generator_.dim();
              scratch_in_ = Eigen::Map<const Matrix>(y.data(), d, d);
              generator_.apply(t, scratch_in_, scratch_out_);
              dy = Eigen::Map<const ode::Vector>(scratch_out_.data(), d * d);
          },
          ode::Options{options.rtol, options.atol},
          options.symmetrize
              ? ode::StepHook([this](ode::Vector& y) {
                    const int d = generator_.dim();
                    Eigen::Map<Matrix> m(y.data(), d, d);
                    scratch_in_ = 0.5 * (m + m.adjoint());
                    m = scratch_in_;
                })
              : ode::StepHook{})
{
}

void Evolution::advance(Matrix& rho, double t0, double t1)
{
    const int d = generator_.dim();
    if (rho.rows() != d || rho.cols() != d) {
        throw ConfigError("Evolution: state dimension does not match generator");
    }
    ode::Vector y = Eigen::Map<const ode::Vector>(rho.data(), d * d);
    integrator_.advance(y, t0, t1, breakpoints_);
    rho = Eigen::Map<const Matrix>(y.data(), d, d);
}

Matrix propagate_raw(const Matrix& rho, const Generator& generator, double t0, double t1,
                     const PropagationOptions& options)
{
    if (t1 < t0) throw ConfigError("propagate: t1 must be >= t0");
    Evolution evolution(generator, options);
    Matrix out = rho;
    evolution.advance(out, t0, t1);
    return out;
}

DensityMatrix propagate(const DensityMatrix& rho, const Generator& generator, double t0,
                        double t1, double tol)
{
    if (!(tol > 0.0)) throw ConfigError("propagate: tolerance must be positive");
    PropagationOptions options;
    options.rtol = tol;
    // Tail populations sit far below tol; a matching atol would let them go negative.
    options.atol = 1e-3 * tol;
    DensityMatrix out(propagate_raw(rho.matrix(), generator, t0, t1, options));
    out.require_healthy("propagate");
    return out;
}

PopulationEvolution::PopulationEvolution(const ReducedModel& model, PropagationOptions options)
    : model_(model),
      breakpoints_(model.breakpoints()),
      integrator_(
          [this](double t, const ode::Vector& y, ode::Vector& dy) {
              model_.apply_diagonal(t, y, dy);
          },
          ode::Options{options.rtol, options.atol})
{
}

void PopulationEvolution::advance(Eigen::VectorXd& populations, double t0, double t1)
{
    if (populations.size() != model_.dim()) {
        throw ConfigError("PopulationEvolution: vector length does not match generator");
    }
    ode::Vector y = populations.cast<Complex>();
    integrator_.advance(y, t0, t1, breakpoints_);
    populations = y.real();
}

Eigen::VectorXd propagate_populations(const Eigen::VectorXd& populations,
                                      const ReducedModel& model, double t0, double t1,
                                      const PropagationOptions& options)
{
    if (t1 < t0) throw ConfigError("propagate: t1 must be >= t0");
    PopulationEvolution evolution(model, options);
    Eigen::VectorXd out = populations;
    evolution.advance(out, t0, t1);
    return out;
}

}  // namespace phbt::dynamics
