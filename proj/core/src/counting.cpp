#include "phbt/counting.hpp"

#include "phbt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace phbt::counting {

using dynamics::Monitor;
using dynamics::PopulationEvolution;
using dynamics::PropagationOptions;
using Eigen::VectorXd;
using ode::Vector;

namespace {

constexpr double kMinClickProbability = 1e-15;
constexpr double kDiagonalTolerance = 1e-14;

bool is_diagonal(const Matrix& rho)
{
    Matrix off = rho;
    off.diagonal().setZero();
    return off.cwiseAbs().maxCoeff() <= kDiagonalTolerance;
}

VectorXd populations_of(const Matrix& rho) { return rho.diagonal().real(); }

DensityMatrix from_populations(const VectorXd& p)
{
    Matrix rho = Matrix::Zero(p.size(), p.size());
    rho.diagonal() = p.cast<dynamics::Complex>();
    return DensityMatrix(std::move(rho));
}

double mean_number(const VectorXd& p)
{
    double n = 0.0;
    for (Eigen::Index k = 1; k < p.size(); ++k) n += static_cast<double>(k) * p(k);
    return n;
}

// (b p b†)_n = (n+1) p_{n+1}; (b† p b)_n = n p_{n-1}.
void add_jump(const double* p, double* out, int d, double rate, bool raising)
{
    if (rate == 0.0) return;
    if (raising) {
        for (int n = 1; n < d; ++n) out[n] += rate * n * p[n - 1];
    } else {
        for (int n = 0; n + 1 < d; ++n) out[n] += rate * (n + 1) * p[n + 1];
    }
}

void remove_jump_weight(const double* p, double* out, int d, double rate, bool raising)
{
    // Subtracting the jump term of the dissipator from a branch: −J p.
    add_jump(p, out, d, -rate, raising);
}

std::vector<double> merged_breakpoints(const ReducedModel& model,
                                       const std::vector<Monitor>& monitors)
{
    std::vector<double> out = model.breakpoints();
    for (const auto& m : monitors) {
        out.push_back(m.begin);
        out.push_back(m.end);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Populations of every click branch X_E, E ⊆ monitors, stored contiguously.
/// dX_E/dt = L X_E − Σ_{j∉E} J_j X_E + Σ_{i∈E} J_i X_{E∖i}.
class BranchSystem {
public:
    BranchSystem(const ReducedModel& model, std::vector<Monitor> monitors)
        : model_(model),
          monitors_(std::move(monitors)),
          breakpoints_(merged_breakpoints(model, monitors_)),
          d_(model.dim()),
          branches_(1u << monitors_.size()),
          integrator_(
              [this](double t, const Vector& y, Vector& dy) { rhs(t, y, dy); },
              ode::Options{1e-9, 1e-13})
    {
        if (monitors_.size() > 4) throw ConfigError("BranchSystem: at most 4 monitors");
    }

    [[nodiscard]] unsigned branches() const { return branches_; }

    void advance(std::vector<VectorXd>& x, double t0, double t1)
    {
        Vector y(static_cast<Eigen::Index>(branches_) * d_);
        for (unsigned e = 0; e < branches_; ++e) y.segment(e * d_, d_) = x[e].cast<dynamics::Complex>();
        integrator_.advance(y, t0, t1, breakpoints_);
        for (unsigned e = 0; e < branches_; ++e) x[e] = y.segment(e * d_, d_).real();
    }

private:
    void rhs(double t, const Vector& y, Vector& dy)
    {
        const Eigen::Index size = static_cast<Eigen::Index>(branches_) * d_;
        dy.resize(size);
        std::vector<double> rate(monitors_.size());
        for (std::size_t k = 0; k < monitors_.size(); ++k) rate[k] = model_.jump_rate(monitors_[k], t);

        real_.resize(size);
        real_ = y.real();
        out_.setZero(size);
        Vector branch_in(d_), branch_out(d_);
        for (unsigned e = 0; e < branches_; ++e) {
            branch_in = y.segment(e * d_, d_);
            model_.apply_diagonal(t, branch_in, branch_out);
            double* out = out_.data() + e * d_;
            for (int n = 0; n < d_; ++n) out[n] += branch_out(n).real();
            const double* xe = real_.data() + e * d_;
            for (std::size_t k = 0; k < monitors_.size(); ++k) {
                const bool raising = model_.raises(monitors_[k]);
                if ((e >> k) & 1u) {
                    const double* from = real_.data() + (e & ~(1u << k)) * d_;
                    add_jump(from, out, d_, rate[k], raising);
                } else {
                    remove_jump_weight(xe, out, d_, rate[k], raising);
                }
            }
        }
        dy = out_.cast<dynamics::Complex>();
    }

    const ReducedModel& model_;
    std::vector<Monitor> monitors_;
    std::vector<double> breakpoints_;
    int d_;
    unsigned branches_;
    VectorXd real_, out_;
    ode::Integrator integrator_;
};

/// Dense counterpart for one monitor: X0' = L X0 − J X0, X1' = L X1 + J X0.
HeraldResult herald_matrix(const Matrix& initial, double t0, const ReducedModel& model,
                           const Monitor& monitor, const Window& window)
{
    const ReducedModel no_click = model.without_jumps(monitor);
    const int d = model.dim();
    const bool raising = model.raises(monitor);
    Matrix l0(d, d), l1(d, d), jump(d, d);
    const hilbert::ModeOps ops(d);
    const Matrix& op = raising ? ops.create : ops.annihilate;
    auto rhs = [&](double t, const Vector& y, Vector& dy) {
        Eigen::Map<const Matrix> x0(y.data(), d, d);
        Eigen::Map<const Matrix> x1(y.data() + d * d, d, d);
        dy.resize(2 * d * d);
        no_click.apply(t, x0, l0);
        model.apply(t, x1, l1);
        jump = model.jump_rate(monitor, t) * (op * x0 * op.adjoint());
        Eigen::Map<Matrix>(dy.data(), d, d) = l0;
        Eigen::Map<Matrix>(dy.data() + d * d, d, d) = l1 + jump;
    };
    ode::Integrator integrator(rhs, ode::Options{1e-9, 1e-13});
    Vector y = Vector::Zero(2 * d * d);
    y.head(d * d) = Eigen::Map<const Vector>(initial.data(), d * d);
    integrator.advance(y, t0, window.end, merged_breakpoints(model, {monitor}));
    Matrix clicked = Eigen::Map<const Matrix>(y.data() + d * d, d, d);
    const double prob = clicked.trace().real();
    if (!(prob > kMinClickProbability)) {
        throw UndefinedError("herald: click probability vanishes, conditional state undefined");
    }
    clicked /= prob;
    clicked = 0.5 * (clicked + clicked.adjoint()).eval();
    DensityMatrix state(std::move(clicked));
    state.require_healthy("herald");
    return {std::move(state), prob, window};
}

}  // namespace

// ---------------------------------------------------------------- windows

void Window::validate(const char* what) const
{
    if (!(end > begin)) {
        std::ostringstream msg;
        msg << what << ": window end must exceed its begin";
        throw ConfigError(msg.str());
    }
}

Window default_herald_window(const PulseSchedule& schedule)
{
    const double c = schedule.pump.envelope.center();
    const double f = schedule.pump.envelope.fwhm();
    return {c - 2.0 * f, c + std::min(2.0 * f, 0.5 * schedule.delay)};
}

Window default_read_window(const PulseSchedule& schedule)
{
    const double c = schedule.read.envelope.center();
    const double f = schedule.read.envelope.fwhm();
    return {c - std::min(2.0 * f, 0.5 * schedule.delay), c + 2.0 * f};
}

// ---------------------------------------------------------------- herald

HeraldResult herald(const DensityMatrix& initial, double t0, const ReducedModel& model,
                    const Monitor& monitor)
{
    const Window window{monitor.begin, monitor.end};
    window.validate("herald");
    if (t0 > window.begin) throw ConfigError("herald: initial time lies after the window start");
    if (initial.dim() != model.dim()) throw ConfigError("herald: state dimension mismatch");
    if (!(monitor.efficiency > 0.0 && monitor.efficiency <= 1.0)) {
        throw ConfigError("herald: detection efficiency must lie in (0, 1]");
    }
    if (!is_diagonal(initial.matrix())) return herald_matrix(initial.matrix(), t0, model, monitor, window);

    BranchSystem system(model, {monitor});
    std::vector<VectorXd> x{populations_of(initial.matrix()), VectorXd::Zero(model.dim())};
    system.advance(x, t0, window.end);
    const double prob = x[1].sum();
    if (!(prob > kMinClickProbability)) {
        throw UndefinedError("herald: click probability vanishes, conditional state undefined");
    }
    DensityMatrix state = from_populations(x[1] / prob);
    state.require_healthy("herald");
    return {std::move(state), prob, window};
}

HeraldResult herald(const DensityMatrix& initial, const DeviceParams& device, const Pulse& pump,
                    const HeatingModel& heating, double detect_eff, const Window& window)
{
    if (pump.sideband != dynamics::Sideband::blue) {
        throw ConfigError("herald: pump pulse must be blue-detuned");
    }
    const ReducedModel model(device, heating, {pump}, initial.dim());
    const double t0 = std::min(pump.envelope.begin(), window.begin);
    return herald(initial, t0, model, Monitor{0, detect_eff, window.begin, window.end});
}

HeraldResult herald_dense(const DensityMatrix& initial, double t0, const ReducedModel& model,
                          const Monitor& monitor)
{
    const Window window{monitor.begin, monitor.end};
    window.validate("herald");
    if (t0 > window.begin) throw ConfigError("herald: initial time lies after the window start");
    return herald_matrix(initial.matrix(), t0, model, monitor, window);
}

// ---------------------------------------------------------------- pulse shape

EffectivePulseShape::EffectivePulseShape(Window window, std::vector<double> values,
                                         std::optional<double> bw)
    : window_(window), values_(std::move(values)), bandwidth_(bw)
{
    step_ = window_.length() / static_cast<double>(values_.size() - 1);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < values_.size(); ++k) {
        total += 0.5 * step_ * (values_[k] + values_[k + 1]);
    }
    if (!(total > 0.0)) throw UndefinedError("EffectivePulseShape: no weight inside the window");
    for (double& v : values_) v /= total;
}

EffectivePulseShape EffectivePulseShape::from_pulse(const Pulse& pulse, const Window& window,
                                                    std::optional<double> filter_bandwidth,
                                                    int samples)
{
    window.validate("EffectivePulseShape");
    if (samples < 3) throw ConfigError("EffectivePulseShape: need at least 3 samples");
    const double h = window.length() / (samples - 1);
    std::vector<double> values(static_cast<std::size_t>(samples));
    if (!filter_bandwidth) {
        for (int k = 0; k < samples; ++k) values[k] = pulse.envelope.value(window.begin + k * h);
        return EffectivePulseShape(window, std::move(values), filter_bandwidth);
    }
    const double bw = *filter_bandwidth;
    if (!(bw > 0.0)) throw ConfigError("EffectivePulseShape: filter bandwidth must be positive");
    // Run the filter from the start of the envelope support on the same grid spacing.
    const int lead = std::max(0, static_cast<int>(std::ceil((window.begin - pulse.envelope.begin()) / h)));
    const double decay = std::exp(-bw * h);
    double filtered = 0.0;
    double previous = pulse.envelope.value(window.begin - lead * h);
    for (int k = -lead + 1; k < samples; ++k) {
        const double current = pulse.envelope.value(window.begin + k * h);
        filtered = decay * filtered + (1.0 - decay) * 0.5 * (previous + current);
        previous = current;
        if (k >= 0) values[k] = filtered;
    }
    if (lead == 0) values[0] = 0.0;
    return EffectivePulseShape(window, std::move(values), filter_bandwidth);
}

EffectivePulseShape EffectivePulseShape::flat(const Window& window, int samples)
{
    window.validate("EffectivePulseShape");
    if (samples < 3) throw ConfigError("EffectivePulseShape: need at least 3 samples");
    return EffectivePulseShape(window, std::vector<double>(static_cast<std::size_t>(samples), 1.0),
                               std::nullopt);
}

double EffectivePulseShape::value(double t) const
{
    if (t < window_.begin || t > window_.end) return 0.0;
    const double x = (t - window_.begin) / step_;
    const auto k = std::min(static_cast<std::size_t>(x), values_.size() - 2);
    const double frac = x - static_cast<double>(k);
    return values_[k] + frac * (values_[k + 1] - values_[k]);
}

// ---------------------------------------------------------------- profiles

void TimeProfile::finalize()
{
    cumulative.assign(values.size(), 0.0);
    for (std::size_t k = 1; k < values.size(); ++k) {
        cumulative[k] = cumulative[k - 1] + 0.5 * step * (values[k - 1] + values[k]);
    }
}

double TimeProfile::integral() const
{
    double total = 0.0;
    for (std::size_t k = 1; k < values.size(); ++k) total += 0.5 * step * (values[k - 1] + values[k]);
    return total;
}

double TimeProfile::sample(double u) const
{
    if (cumulative.size() != values.size() || values.size() < 2) {
        throw ConfigError("TimeProfile::sample: profile not finalized");
    }
    const double total = cumulative.back();
    if (!(total > 0.0)) return begin + u * step * static_cast<double>(values.size() - 1);
    const double target = u * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    std::size_t k = it == cumulative.begin() ? 0 : static_cast<std::size_t>(it - cumulative.begin()) - 1;
    k = std::min(k, values.size() - 2);
    const double rest = target - cumulative[k];
    const double a = values[k];
    const double slope = (values[k + 1] - a) / step;
    double x;
    if (std::abs(slope) * step < 1e-12 * std::max(a, 1e-300)) {
        x = a > 0.0 ? rest / a : 0.0;
    } else {
        const double disc = std::max(0.0, a * a + 2.0 * slope * rest);
        x = (std::sqrt(disc) - a) / slope;
    }
    return begin + static_cast<double>(k) * step + std::clamp(x, 0.0, step);
}

void CorrelationGrid::finalize()
{
    const int cells = points - 1;
    cumulative.assign(static_cast<std::size_t>(cells) * cells, 0.0);
    double total = 0.0;
    for (int i = 0; i < cells; ++i) {
        for (int j = 0; j < cells; ++j) {
            double w = 0.0;
            if (j >= i) {
                // Corner values of the ordered density; below-diagonal corners reuse the mirror.
                auto g = [this](int a, int b) { return a <= b ? at(a, b) : at(b, a); };
                w = 0.25 * (g(i, j) + g(i + 1, j) + g(i, j + 1) + g(i + 1, j + 1)) * step * step;
                if (i == j) w *= 0.5;
            }
            total += w;
            cumulative[static_cast<std::size_t>(i) * cells + j] = total;
        }
    }
}

std::pair<double, double> CorrelationGrid::sample(double u_cell, double u1, double u2) const
{
    const int cells = points - 1;
    if (cumulative.size() != static_cast<std::size_t>(cells) * cells || cells < 1) {
        throw ConfigError("CorrelationGrid::sample: grid not finalized");
    }
    const double target = u_cell * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    std::size_t flat = static_cast<std::size_t>(it - cumulative.begin());
    flat = std::min(flat, cumulative.size() - 1);
    const int i = static_cast<int>(flat / cells);
    const int j = static_cast<int>(flat % cells);
    double t1 = begin + (i + u1) * step;
    double t2 = begin + (j + u2) * step;
    if (t1 > t2) std::swap(t1, t2);
    return {t1, t2};
}

// ---------------------------------------------------------------- readout

Readout::Readout(ReducedModel model, std::optional<std::size_t> read_pulse, double efficiency)
    : model_(std::move(model)), read_(read_pulse), efficiency_(efficiency)
{
    if (read_ && *read_ >= model_.pulses().size()) {
        throw ConfigError("Readout: read pulse index out of range");
    }
    if (!(efficiency_ > 0.0)) throw ConfigError("Readout: efficiency must be positive");
}

double Readout::rate(double t) const
{
    if (!read_) return efficiency_;
    return efficiency_ * dynamics::rates(model_.device(), model_.pulses()[*read_], t).gamma_minus;
}

double Readout::intensity(const DensityMatrix& rho, double t0, double t) const
{
    if (t < t0) throw ConfigError("intensity: t must not precede the state time");
    VectorXd p = dynamics::propagate_populations(populations_of(rho.matrix()), model_, t0, t);
    return rate(t) * mean_number(p);
}

double Readout::correlation(const DensityMatrix& rho, double t0, double t1, double t2) const
{
    if (!(t0 <= t1 && t1 <= t2)) throw ConfigError("correlation: require t0 <= t1 <= t2");
    PopulationEvolution evolution(model_);
    VectorXd p = populations_of(rho.matrix());
    evolution.advance(p, t0, t1);
    VectorXd jumped = VectorXd::Zero(p.size());
    add_jump(p.data(), jumped.data(), static_cast<int>(p.size()), rate(t1), false);
    PopulationEvolution second(model_);
    second.advance(jumped, t1, t2);
    return rate(t2) * mean_number(jumped);
}

TimeProfile Readout::intensity_profile(const Matrix& rho, double t0, const Window& window,
                                       int samples) const
{
    window.validate("intensity_profile");
    if (samples < 2) throw ConfigError("intensity_profile: need at least 2 samples");
    TimeProfile out;
    out.begin = window.begin;
    out.step = window.length() / (samples - 1);
    out.values.resize(static_cast<std::size_t>(samples));
    PopulationEvolution evolution(model_);
    VectorXd p = populations_of(rho);
    double t = t0;
    for (int k = 0; k < samples; ++k) {
        const double tk = window.begin + k * out.step;
        evolution.advance(p, t, tk);
        t = tk;
        out.values[k] = std::max(0.0, rate(tk) * mean_number(p));
    }
    out.finalize();
    return out;
}

CorrelationGrid Readout::correlation_grid(const Matrix& rho, double t0, const Window& window,
                                          int samples) const
{
    window.validate("correlation_grid");
    if (samples < 2) throw ConfigError("correlation_grid: need at least 2 samples");
    CorrelationGrid grid;
    grid.begin = window.begin;
    grid.step = window.length() / (samples - 1);
    grid.points = samples;
    grid.values.assign(static_cast<std::size_t>(samples) * samples, 0.0);
    const int d = model_.dim();

    PopulationEvolution outer(model_);
    VectorXd p = populations_of(rho);
    double t = t0;
    for (int i = 0; i < samples; ++i) {
        const double ti = window.begin + i * grid.step;
        outer.advance(p, t, ti);
        t = ti;
        VectorXd sigma = VectorXd::Zero(d);
        add_jump(p.data(), sigma.data(), d, rate(ti), false);
        PopulationEvolution inner(model_);
        double s = ti;
        for (int j = i; j < samples; ++j) {
            const double tj = window.begin + j * grid.step;
            inner.advance(sigma, s, tj);
            s = tj;
            grid.values[static_cast<std::size_t>(i) * samples + j] =
                std::max(0.0, rate(tj) * mean_number(sigma));
        }
    }
    grid.finalize();
    return grid;
}

Readout::Averages Readout::g2_observed(const DensityMatrix& rho, double t0,
                                       const EffectivePulseShape& shape) const
{
    const Window& w = shape.window();
    if (t0 > w.begin) throw ConfigError("g2_observed: state time lies after the window start");
    const int d = model_.dim();
    VectorXd p = dynamics::propagate_populations(populations_of(rho.matrix()), model_, t0, w.begin);

    // y = [ρ | σ | A | B | C | X]: σ accumulates p(t1) T(t, t1) bρ(t1)b†, A = ∫p⟨N⟩,
    // B = ∫p Tr[Nσ], C = ∫rate⟨N⟩ (counts) and X = ∫rate (swap exponent).
    const Eigen::Index size = 2 * d + 4;
    Vector y = Vector::Zero(size);
    y.head(d) = p.cast<dynamics::Complex>();
    Vector rho_in(d), rho_out(d), sig_in(d), sig_out(d);
    VectorXd pr(d), jumped(d);
    auto rhs = [&](double t, const Vector& in, Vector& dy) {
        dy.resize(size);
        rho_in = in.head(d);
        sig_in = in.segment(d, d);
        model_.apply_diagonal(t, rho_in, rho_out);
        model_.apply_diagonal(t, sig_in, sig_out);
        pr = rho_in.real();
        jumped.setZero();
        const double weight = shape.value(t);
        const double r = rate(t);
        add_jump(pr.data(), jumped.data(), d, weight, false);
        const double n = mean_number(pr);
        dy.head(d) = rho_out;
        dy.segment(d, d) = sig_out + jumped.cast<dynamics::Complex>();
        dy(2 * d) = weight * n;
        dy(2 * d + 1) = weight * mean_number(sig_in.real());
        dy(2 * d + 2) = r * n;
        dy(2 * d + 3) = r;
    };
    ode::Options options{1e-9, 1e-14};
    options.max_step = shape.window().length() / 200.0;
    ode::Integrator integrator(rhs, options);
    std::vector<double> bps = model_.breakpoints();
    integrator.advance(y, w.begin, w.end, bps);

    const double a = y(2 * d).real();
    const double b = y(2 * d + 1).real();
    const double counts = y(2 * d + 2).real();
    const double exponent = y(2 * d + 3).real();
    if (!(a > 1e-300)) throw UndefinedError("g2_observed: no intensity inside the window");
    Averages out;
    out.g2 = 2.0 * b / (a * a);
    out.mean_occupation = a;
    out.count_occupation = exponent > 0.0 ? counts / -std::expm1(-exponent) : a;
    return out;
}

double Readout::g2_observed_separate_cycles(const DensityMatrix& herald_cycle,
                                            const DensityMatrix& later_cycle, double t0,
                                            const EffectivePulseShape& shape) const
{
    // Separate cycles share no quantum state, so ⟨:N_k N_{k+Δn}:⟩ = ⟨N_k⟩⟨N_{k+Δn}⟩ and
    // the ratio is exactly one whenever both marginals are defined.
    const double first = g2_observed(herald_cycle, t0, shape).mean_occupation;
    const double second = g2_observed(later_cycle, t0, shape).mean_occupation;
    return (first * second) / (first * second);
}

double intensity(const DensityMatrix& state_at_click, const DeviceParams& device,
                 const Pulse& read, const HeatingModel& heating, double t, double efficiency)
{
    const Readout readout(ReducedModel(device, heating, {read}, state_at_click.dim()), 0, efficiency);
    const double t0 = std::min(read.envelope.begin(), t);
    return readout.intensity(state_at_click, t0, t);
}

double correlation(const DensityMatrix& state_at_click, const DeviceParams& device,
                   const Pulse& read, const HeatingModel& heating, double t1, double t2,
                   double efficiency)
{
    const Readout readout(ReducedModel(device, heating, {read}, state_at_click.dim()), 0, efficiency);
    const double t0 = std::min(read.envelope.begin(), t1);
    return readout.correlation(state_at_click, t0, t1, t2);
}

double g2_observed(const DensityMatrix& state_at_click, const DeviceParams& device,
                   const Pulse& read, const HeatingModel& heating,
                   const EffectivePulseShape& shape, double tau)
{
    const Readout readout(ReducedModel(device, heating, {read}, state_at_click.dim()), 0, 1.0);
    const double t0 = std::min(read.envelope.begin(), shape.window().begin);
    if (tau == 0.0) return readout.g2_observed(state_at_click, t0, shape).g2;
    return readout.g2_observed_separate_cycles(state_at_click, state_at_click, t0, shape);
}

// ---------------------------------------------------------------- prediction

Prediction predict(const DeviceParams& device, const PulseSchedule& schedule,
                   const HeatingModel& heating, double detect_eff, const PredictOptions& options)
{
    schedule.validate();
    Prediction out;
    out.herald_window = options.herald_window.value_or(default_herald_window(schedule));
    out.read_window = options.read_window.value_or(default_read_window(schedule));
    out.herald_window.validate("herald window");
    out.read_window.validate("read window");
    if (out.read_window.begin < out.herald_window.end) {
        throw ConfigError("read window must start after the herald window ends");
    }

    const ReducedModel model(device, heating, {schedule.pump, schedule.read}, options.dim);
    const DensityMatrix initial = hilbert::thermal(heating.n_init(), options.dim);
    const Monitor monitor{0, detect_eff, out.herald_window.begin, out.herald_window.end};
    const HeraldResult heralded = herald(initial, 0.0, model, monitor);

    const Readout readout(model, 1, 1.0);
    const auto shape = EffectivePulseShape::from_pulse(schedule.read, out.read_window,
                                                       options.filter_bandwidth);
    const auto conditional = readout.g2_observed(heralded.state, out.herald_window.end, shape);
    const auto unconditional = readout.g2_observed(initial, 0.0, shape);

    out.g2 = conditional.g2;
    out.heralded_occupation = conditional.count_occupation;
    out.click_prob = heralded.click_prob;
    out.unconditional_occupation = unconditional.count_occupation;
    return out;
}

double predict_g2(const DeviceParams& device, const PulseSchedule& schedule,
                  const HeatingModel& heating, double detect_eff)
{
    return predict(device, schedule, heating, detect_eff).g2;
}

double unconditional_read_occupation(const DeviceParams& device, const PulseSchedule& schedule,
                                     const HeatingModel& heating, const PredictOptions& options)
{
    schedule.validate();
    const Window window = options.read_window.value_or(default_read_window(schedule));
    const ReducedModel model(device, heating, {schedule.pump, schedule.read}, options.dim);
    const Readout readout(model, 1, 1.0);
    const auto shape = EffectivePulseShape::from_pulse(schedule.read, window, options.filter_bandwidth);
    return readout.g2_observed(hilbert::thermal(heating.n_init(), options.dim), 0.0, shape)
        .count_occupation;
}

HeatingCalibration calibrate_heating(const DeviceParams& device, const PulseSchedule& schedule,
                                     const HeatingModel& shape, double target,
                                     const PredictOptions& options)
{
    if (!(target >= 0.0)) throw ConfigError("calibrate_heating: target occupation must be >= 0");
    const double base = unconditional_read_occupation(device, schedule, shape.scaled(0.0), options);
    const double unit = unconditional_read_occupation(device, schedule, shape, options);
    if (!(unit > base)) {
        throw NumericError("calibrate_heating: heating shape adds no phonons before the read");
    }
    const double scale = (target - base) / (unit - base);
    if (scale < 0.0) {
        std::ostringstream msg;
        msg << "calibrate_heating: target " << target
            << " lies below the heating-free read occupation " << base;
        throw NumericError(msg.str());
    }
    HeatingCalibration out{shape.scaled(scale), scale, 0.0};
    out.occupation = unconditional_read_occupation(device, schedule, out.heating, options);
    return out;
}

// ---------------------------------------------------------------- cycle tree

CycleTree cycle_tree(const DeviceParams& device, const PulseSchedule& schedule,
                     const HeatingModel& heating, double eta1, double eta2,
                     const TreeOptions& options)
{
    schedule.validate();
    for (double eta : {eta1, eta2}) {
        if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("cycle_tree: efficiencies must lie in [0, 1]");
    }
    CycleTree tree;
    tree.herald_window = options.herald_window.value_or(default_herald_window(schedule));
    tree.read_window = options.read_window.value_or(default_read_window(schedule));
    tree.herald_window.validate("herald window");
    tree.read_window.validate("read window");
    if (tree.read_window.begin < tree.herald_window.end) {
        throw ConfigError("read window must start after the herald window ends");
    }
    const Window& hw = tree.herald_window;
    const Window& rw = tree.read_window;

    const ReducedModel model(device, heating, {schedule.pump, schedule.read}, options.dim);
    const int d = options.dim;
    const VectorXd initial = populations_of(hilbert::thermal(heating.n_init(), d).matrix());

    // Monitors 0, 1: herald D1, D2 on the pump. Monitors 2, 3: read D1, D2 on the read pulse.
    const std::vector<Monitor> monitors{{0, eta1, hw.begin, hw.end},
                                        {0, eta2, hw.begin, hw.end},
                                        {1, eta1, rw.begin, rw.end},
                                        {1, eta2, rw.begin, rw.end}};
    BranchSystem system(model, monitors);
    std::vector<VectorXd> x(system.branches(), VectorXd::Zero(d));
    x[0] = initial;
    system.advance(x, 0.0, hw.end);
    std::array<VectorXd, 4> herald_states;
    for (unsigned h = 0; h < 4; ++h) herald_states[h] = x[h];
    system.advance(x, hw.end, rw.end);
    for (unsigned h = 0; h < 4; ++h) {
        for (unsigned r = 0; r < 4; ++r) tree.joint[h][r] = std::max(0.0, x[h | (r << 2)].sum());
    }

    // Herald timestamps: Stokes emission rate Γ₋(t)(⟨N⟩+1) of the unconditional state.
    {
        const int m = options.grid_points;
        TimeProfile& prof = tree.herald_profile;
        prof.begin = hw.begin;
        prof.step = hw.length() / (m - 1);
        prof.values.resize(static_cast<std::size_t>(m));
        PopulationEvolution evolution(model);
        VectorXd p = initial;
        double t = 0.0;
        for (int k = 0; k < m; ++k) {
            const double tk = hw.begin + k * prof.step;
            evolution.advance(p, t, tk);
            t = tk;
            const double gamma = dynamics::rates(device, schedule.pump, tk).gamma_minus;
            prof.values[k] = gamma * (mean_number(p) + p.sum());
        }
        prof.finalize();
    }

    const Readout readout(model, 1, 1.0);
    for (unsigned h = 0; h < 4; ++h) {
        Matrix rho = Matrix::Zero(d, d);
        rho.diagonal() = herald_states[h].cast<dynamics::Complex>();
        tree.read_profile[h] = readout.intensity_profile(rho, hw.end, rw, options.grid_points);
        tree.read_correlation[h] = readout.correlation_grid(rho, hw.end, rw, options.grid_points);
    }
    return tree;
}

}  // namespace phbt::counting
