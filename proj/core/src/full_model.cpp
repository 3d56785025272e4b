#include "phbt/dynamics.hpp"

#include "phbt/errors.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>

namespace phbt::dynamics {

namespace {

SparseMatrix identity(int dim)
{
    SparseMatrix id(dim, dim);
    id.setIdentity();
    return id;
}

}  // namespace

FullModel::FullModel(DeviceParams device, HeatingModel heating, Pulse pulse, int cavity_dim,
                     int mech_dim)
    : device_(device),
      heating_(std::move(heating)),
      pulse_(pulse),
      cavity_dim_(cavity_dim),
      mech_dim_(mech_dim)
{
    device_.validate();
    pulse_.validate();
    if (cavity_dim_ < 2 || mech_dim_ < 2) {
        throw ConfigError("FullModel: cavity and mechanical dimensions must be >= 2");
    }
    a_ = Eigen::kroneckerProduct(hilbert::sparse_annihilator(cavity_dim_), identity(mech_dim_));
    b_ = Eigen::kroneckerProduct(identity(cavity_dim_), hilbert::sparse_annihilator(mech_dim_));
    const SparseMatrix a_dag = a_.adjoint();
    const SparseMatrix b_dag = b_.adjoint();
    if (pulse_.sideband == Sideband::red) {
        interaction_ = SparseMatrix(a_dag * b_) + SparseMatrix(a_ * b_dag);
    } else {
        interaction_ = SparseMatrix(a_dag * b_dag) + SparseMatrix(a_ * b_);
    }
    a_dag_a_ = a_dag * a_;
    b_dag_b_ = b_dag * b_;
    b_b_dag_ = b_ * b_dag;
}

double FullModel::coupling(double t) const
{
    return std::sqrt(0.25 * device_.kappa * rates(device_, pulse_, t).gamma_minus);
}

void FullModel::apply(double t, const Matrix& rho, Matrix& out) const
{
    const double g = coupling(t);
    const double influx = heating_.influx(t);
    const double loss = device_.gamma * (heating_.bath_n() + 1.0) + influx;
    const double gain = device_.gamma * heating_.bath_n() + influx;
    const double kappa = device_.kappa;
    const double emission =
        emission_efficiency_ > 0.0 && t >= emission_begin_ && t <= emission_end_
            ? emission_efficiency_ * kappa
            : 0.0;
    const bool red = pulse_.sideband == Sideband::red;
    const int nc = cavity_dim_;
    const int nm = mech_dim_;
    const int d = nc * nm;
    out.resize(d, d);

    // Elementwise kernel on the ladder structure; mirrors the sparse form used by at().
    auto idx = [nm](int c, int m) { return c * nm + m; };
    auto bbd = [nm](int m) { return m + 1 < nm ? m + 1.0 : 0.0; };
    std::vector<double> root(std::max(nc, nm) + 1);
    for (std::size_t k = 0; k < root.size(); ++k) root[k] = std::sqrt(static_cast<double>(k));
    auto sqrt_int = [&root](int k) { return root[static_cast<std::size_t>(k)]; };

    // Column (V-action on the ket index) helper: (Vρ)(c,m; col).
    auto v_left = [&](int c, int m, int col) {
        Complex acc = 0.0;
        if (red) {
            if (c >= 1 && m + 1 < nm) acc += sqrt_int(c) * sqrt_int(m + 1) * rho(idx(c - 1, m + 1), col);
            if (c + 1 < nc && m >= 1) acc += sqrt_int(c + 1) * sqrt_int(m) * rho(idx(c + 1, m - 1), col);
        } else {
            if (c >= 1 && m >= 1) acc += sqrt_int(c) * sqrt_int(m) * rho(idx(c - 1, m - 1), col);
            if (c + 1 < nc && m + 1 < nm) acc += sqrt_int(c + 1) * sqrt_int(m + 1) * rho(idx(c + 1, m + 1), col);
        }
        return acc;
    };
    auto v_right = [&](int row, int c, int m) {
        Complex acc = 0.0;
        if (red) {
            if (c >= 1 && m + 1 < nm) acc += sqrt_int(c) * sqrt_int(m + 1) * rho(row, idx(c - 1, m + 1));
            if (c + 1 < nc && m >= 1) acc += sqrt_int(c + 1) * sqrt_int(m) * rho(row, idx(c + 1, m - 1));
        } else {
            if (c >= 1 && m >= 1) acc += sqrt_int(c) * sqrt_int(m) * rho(row, idx(c - 1, m - 1));
            if (c + 1 < nc && m + 1 < nm) acc += sqrt_int(c + 1) * sqrt_int(m + 1) * rho(row, idx(c + 1, m + 1));
        }
        return acc;
    };

    for (int c2 = 0; c2 < nc; ++c2) {
        for (int m2 = 0; m2 < nm; ++m2) {
            const int col = idx(c2, m2);
            for (int c1 = 0; c1 < nc; ++c1) {
                for (int m1 = 0; m1 < nm; ++m1) {
                    const int row = idx(c1, m1);
                    const Complex r = rho(row, col);
                    Complex value = -0.5 * (kappa * (c1 + c2) + loss * (m1 + m2) +
                                            gain * (bbd(m1) + bbd(m2))) * r;
                    if (c1 + 1 < nc && c2 + 1 < nc) {
                        value += (kappa - emission) * sqrt_int(c1 + 1) * sqrt_int(c2 + 1) *
                                 rho(idx(c1 + 1, m1), idx(c2 + 1, m2));
                    }
                    if (m1 + 1 < nm && m2 + 1 < nm) {
                        value += loss * sqrt_int(m1 + 1) * sqrt_int(m2 + 1) *
                                 rho(idx(c1, m1 + 1), idx(c2, m2 + 1));
                    }
                    if (m1 >= 1 && m2 >= 1) {
                        value += gain * sqrt_int(m1) * sqrt_int(m2) *
                                 rho(idx(c1, m1 - 1), idx(c2, m2 - 1));
                    }
                    if (g != 0.0) {
                        const Complex commutator = v_left(c1, m1, col) - v_right(row, c2, m2);
                        value += Complex(g * commutator.imag(), -g * commutator.real());
                    }
                    out(row, col) = value;
                }
            }
        }
    }
}

Superoperator FullModel::at(double t) const
{
    const double influx = heating_.influx(t);
    const double loss = device_.gamma * (heating_.bath_n() + 1.0) + influx;
    const double gain = device_.gamma * heating_.bath_n() + influx;
    SparseMatrix h = coupling(t) * interaction_;
    std::vector<Superoperator::Channel> dissipators{
        {device_.kappa, a_}, {loss, b_}, {gain, SparseMatrix(b_.adjoint())}};
    std::vector<Superoperator::Channel> jumps;
    if (emission_efficiency_ > 0.0 && t >= emission_begin_ && t <= emission_end_) {
        jumps.push_back({emission_efficiency_ * device_.kappa, a_});
    }
    return Superoperator(dim(), std::move(h), std::move(dissipators), std::move(jumps));
}

std::vector<double> FullModel::breakpoints() const
{
    std::vector<double> out = heating_.breakpoints();
    out.push_back(pulse_.envelope.begin());
    out.push_back(pulse_.envelope.end());
    if (emission_efficiency_ > 0.0) {
        out.push_back(emission_begin_);
        out.push_back(emission_end_);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

FullModel FullModel::without_emissions(double efficiency, double begin, double end) const
{
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
        throw ConfigError("FullModel: detection efficiency must lie in [0, 1]");
    }
    FullModel copy = *this;
    copy.emission_efficiency_ = efficiency;
    copy.emission_begin_ = begin;
    copy.emission_end_ = end;
    return copy;
}

Matrix FullModel::product_state(const Matrix& cavity, const Matrix& mech) const
{
    if (cavity.rows() != cavity_dim_ || mech.rows() != mech_dim_) {
        throw ConfigError("FullModel::product_state: factor dimensions do not match");
    }
    return Eigen::kroneckerProduct(cavity, mech).eval();
}

Matrix FullModel::trace_out_cavity(const Matrix& joint) const
{
    if (joint.rows() != dim() || joint.cols() != dim()) {
        throw ConfigError("FullModel::trace_out_cavity: state dimension does not match");
    }
    Matrix mech = Matrix::Zero(mech_dim_, mech_dim_);
    for (int c = 0; c < cavity_dim_; ++c) {
        mech += joint.block(c * mech_dim_, c * mech_dim_, mech_dim_, mech_dim_);
    }
    return mech;
}

Superoperator liouvillian_full(const DeviceParams& device, const HeatingModel& heating,
                               const Pulse& pulse, double t, int cavity_dim, int mech_dim)
{
    return FullModel(device, heating, pulse, cavity_dim, mech_dim).at(t);
}

}  // namespace phbt::dynamics
