#include "phbt/hilbert.hpp"

#include "phbt/errors.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>
#include <string>

namespace phbt::hilbert {

namespace {

constexpr double kConstructionTolerance = 1e-8;

void require_dim(int dim, int minimum, const char* context)
{
    if (dim < minimum) {
        std::ostringstream msg;
        msg << context << ": dimension " << dim << " below minimum " << minimum;
        throw ConfigError(msg.str());
    }
}

DensityMatrix from_populations(const Eigen::VectorXd& p, const char* context)
{
    Matrix rho = Matrix::Zero(p.size(), p.size());
    rho.diagonal() = p.cast<Complex>() / p.sum();
    DensityMatrix out(std::move(rho));
    out.require_healthy(context);
    return out;
}

/// Conjugates rho by a unitary evaluated at dim + guard, then projects back.
DensityMatrix conjugate_with_guard(const DensityMatrix& rho, const Matrix& unitary, int guard,
                                   const char* context)
{
    const int dim = rho.dim();
    const Matrix big = rho.padded(dim + guard).matrix();
    const Matrix moved = unitary * big * unitary.adjoint();
    Matrix block = moved.topLeftCorner(dim, dim);
    const double kept = block.trace().real();
    const double top = block(dim - 1, dim - 1).real();
    if (top >= kLeakTolerance || 1.0 - kept > kConstructionTolerance) {
        std::ostringstream msg;
        msg << context << ": truncation leak (top-level population " << top << ", lost weight "
            << 1.0 - kept << ") at dim " << dim;
        throw TruncationError(msg.str());
    }
    return DensityMatrix(std::move(block));
}

}  // namespace

DensityMatrix::DensityMatrix(Matrix elements) : rho_(std::move(elements))
{
    if (rho_.rows() != rho_.cols() || rho_.rows() < 2) {
        throw ConfigError("DensityMatrix: matrix must be square with dim >= 2");
    }
    const Matrix skew = rho_ - rho_.adjoint();
    if (skew.cwiseAbs().maxCoeff() > kConstructionTolerance) {
        throw NumericError("DensityMatrix: matrix is not Hermitian");
    }
    rho_ = 0.5 * (rho_ + rho_.adjoint()).eval();
    const double trace = rho_.trace().real();
    if (std::abs(trace - 1.0) > kConstructionTolerance) {
        std::ostringstream msg;
        msg << "DensityMatrix: trace " << trace << " differs from 1";
        throw NumericError(msg.str());
    }
    rho_ /= trace;
    if (min_eigenvalue() < kPositivityTolerance) {
        throw NumericError("DensityMatrix: matrix is not positive semidefinite");
    }
}

void DensityMatrix::require_healthy(const char* context) const
{
    if (!healthy()) {
        std::ostringstream msg;
        msg << context << ": truncation leak, top-level population " << top_population()
            << " at dim " << dim();
        throw TruncationError(msg.str());
    }
}

DensityMatrix DensityMatrix::padded(int new_dim) const
{
    require_dim(new_dim, dim(), "DensityMatrix::padded");
    Matrix big = Matrix::Zero(new_dim, new_dim);
    big.topLeftCorner(dim(), dim()) = rho_;
    return DensityMatrix(std::move(big));
}

double DensityMatrix::min_eigenvalue() const
{
    Eigen::SelfAdjointEigenSolver<Matrix> solver(rho_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

ModeOps::ModeOps(int d)
    : dim(d), annihilate(Matrix::Zero(d, d)), create(), number()
{
    require_dim(d, 2, "ModeOps");
    for (int n = 1; n < d; ++n) {
        annihilate(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    create = annihilate.adjoint();
    number = create * annihilate;
}

SparseMatrix sparse_annihilator(int dim)
{
    require_dim(dim, 2, "sparse_annihilator");
    SparseMatrix b(dim, dim);
    b.reserve(Eigen::VectorXi::Constant(dim, 1));
    for (int n = 1; n < dim; ++n) {
        b.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    b.makeCompressed();
    return b;
}

SparseMatrix sparse_creator(int dim)
{
    return SparseMatrix(sparse_annihilator(dim).adjoint());
}

void GaussianParams::validate() const
{
    if (!(alpha_mag >= 0.0) || !(squeeze_mag >= 0.0)) {
        throw ConfigError("GaussianParams: displacement and squeezing magnitudes must be >= 0");
    }
}

DensityMatrix vacuum(int dim)
{
    return fock(0, dim);
}

DensityMatrix fock(int n, int dim)
{
    require_dim(dim, 2, "fock");
    if (n < 0 || n >= dim) {
        throw ConfigError("fock: level " + std::to_string(n) + " outside truncation " +
                          std::to_string(dim));
    }
    Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
    p(n) = 1.0;
    return from_populations(p, "fock");
}

DensityMatrix thermal(double nbar, int dim)
{
    require_dim(dim, 2, "thermal");
    if (!(nbar >= 0.0)) {
        throw ConfigError("thermal: mean occupation must be >= 0");
    }
    const double ratio = nbar / (1.0 + nbar);
    Eigen::VectorXd p(dim);
    double weight = 1.0;
    for (int n = 0; n < dim; ++n) {
        p(n) = weight;
        weight *= ratio;
    }
    return from_populations(p, "thermal");
}

DensityMatrix coherent(Complex alpha, int dim)
{
    require_dim(dim, 2, "coherent");
    Eigen::VectorXcd amp(dim);
    amp(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < dim; ++n) {
        amp(n) = amp(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    }
    amp /= amp.norm();
    DensityMatrix out(amp * amp.adjoint());
    out.require_healthy("coherent");
    return out;
}

DensityMatrix make_state(const StateKind& kind, int dim)
{
    return std::visit(
        [dim](const auto& k) -> DensityMatrix {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, state::Vacuum>) {
                return vacuum(dim);
            } else if constexpr (std::is_same_v<K, state::Fock>) {
                return fock(k.n, dim);
            } else if constexpr (std::is_same_v<K, state::Thermal>) {
                return thermal(k.nbar, dim);
            } else {
                return coherent(k.alpha, dim);
            }
        },
        kind);
}

Matrix displacement_operator(Complex alpha, int dim)
{
    const ModeOps ops(dim);
    const Matrix generator = alpha * ops.create - std::conj(alpha) * ops.annihilate;
    return generator.exp();
}

Matrix squeeze_operator(Complex xi, int dim)
{
    const ModeOps ops(dim);
    const Matrix generator = 0.5 * (std::conj(xi) * ops.annihilate * ops.annihilate -
                                    xi * ops.create * ops.create);
    return generator.exp();
}

DensityMatrix apply_displacement(const DensityMatrix& rho, Complex alpha, int guard)
{
    if (guard < 0) throw ConfigError("apply_displacement: guard must be >= 0");
    rho.require_healthy("apply_displacement");
    return conjugate_with_guard(rho, displacement_operator(alpha, rho.dim() + guard), guard,
                                "apply_displacement");
}

DensityMatrix apply_squeeze(const DensityMatrix& rho, Complex xi, int guard)
{
    if (guard < 0) throw ConfigError("apply_squeeze: guard must be >= 0");
    rho.require_healthy("apply_squeeze");
    return conjugate_with_guard(rho, squeeze_operator(xi, rho.dim() + guard), guard,
                                "apply_squeeze");
}

DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix& unitary, int guard,
                            const char* context)
{
    if (guard < 0) throw ConfigError("apply_unitary: guard must be >= 0");
    if (unitary.rows() != rho.dim() + guard || unitary.cols() != unitary.rows()) {
        throw ConfigError("apply_unitary: unitary must be square at dim + guard");
    }
    rho.require_healthy(context);
    return conjugate_with_guard(rho, unitary, guard, context);
}

Complex expect(const DensityMatrix& rho, const Matrix& op)
{
    if (op.rows() != rho.dim() || op.cols() != rho.dim()) {
        throw ConfigError("expect: operator dimension " + std::to_string(op.rows()) +
                          " does not match state dimension " + std::to_string(rho.dim()));
    }
    return (op * rho.matrix()).trace();
}

double mean_number(const DensityMatrix& rho)
{
    const Eigen::VectorXd p = rho.populations();
    double mean = 0.0;
    for (int n = 1; n < rho.dim(); ++n) mean += n * p(n);
    return mean;
}

double second_factorial_moment(const DensityMatrix& rho)
{
    const Eigen::VectorXd p = rho.populations();
    double moment = 0.0;
    for (int n = 2; n < rho.dim(); ++n) moment += static_cast<double>(n) * (n - 1) * p(n);
    return moment;
}

double g2_zero(const DensityMatrix& rho)
{
    const double mean = mean_number(rho);
    if (mean <= 1e-12) {
        throw UndefinedError("g2_zero: mean occupation vanishes, g2 undefined");
    }
    return second_factorial_moment(rho) / (mean * mean);
}

}  // namespace phbt::hilbert
