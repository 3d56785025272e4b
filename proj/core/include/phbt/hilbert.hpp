#pragma once

// Truncated Fock-space algebra for a single bosonic mode.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <variant>

namespace phbt::hilbert {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;

/// Default number of retained Fock levels (phonon numbers 0..49).
inline constexpr int kDefaultDim = 50;
/// Extra levels used while applying Gaussian unitaries before projecting back.
inline constexpr int kGuardLevels = 30;
/// Maximum population tolerated on the highest retained level.
inline constexpr double kLeakTolerance = 1e-6;
/// Eigenvalues above this are accepted as non-negative.
inline constexpr double kPositivityTolerance = -1e-8;

/// Hermitian, unit-trace, positive matrix in the truncated Fock basis.
///
/// Construction checks trace, Hermiticity and positivity to loose
/// tolerances (1e-8), then symmetrizes and renormalizes so the stored
/// matrix meets the 1e-10 invariants exactly. Immutable afterwards.
class DensityMatrix {
public:
    explicit DensityMatrix(Matrix elements);

    [[nodiscard]] int dim() const { return static_cast<int>(rho_.rows()); }
    [[nodiscard]] const Matrix& matrix() const { return rho_; }

    [[nodiscard]] double population(int n) const { return rho_(n, n).real(); }
    [[nodiscard]] Eigen::VectorXd populations() const { return rho_.diagonal().real(); }
    [[nodiscard]] double top_population() const { return population(dim() - 1); }
    [[nodiscard]] bool healthy() const { return top_population() < kLeakTolerance; }

    /// Throws TruncationError when the top level carries more than kLeakTolerance.
    void require_healthy(const char* context) const;

    /// Copy into a larger basis (zero padding).
    [[nodiscard]] DensityMatrix padded(int new_dim) const;

    [[nodiscard]] double min_eigenvalue() const;

private:
    Matrix rho_;
};

/// Ladder operators on the retained levels.
struct ModeOps {
    explicit ModeOps(int dim);

    int dim;
    Matrix annihilate;
    Matrix create;
    Matrix number;
};

[[nodiscard]] SparseMatrix sparse_annihilator(int dim);
[[nodiscard]] SparseMatrix sparse_creator(int dim);

struct GaussianParams {
    double alpha_mag = 0.0;
    double alpha_phase = 0.0;
    double squeeze_mag = 0.0;
    double squeeze_phase = 0.0;

    [[nodiscard]] Complex alpha() const { return std::polar(alpha_mag, alpha_phase); }
    [[nodiscard]] Complex xi() const { return std::polar(squeeze_mag, squeeze_phase); }
    void validate() const;
};

namespace state {
struct Vacuum {};
struct Fock {
    int n = 0;
};
struct Thermal {
    double nbar = 0.0;
};
struct Coherent {
    Complex alpha{0.0, 0.0};
};
}  // namespace state

using StateKind = std::variant<state::Vacuum, state::Fock, state::Thermal, state::Coherent>;

[[nodiscard]] DensityMatrix make_state(const StateKind& kind, int dim = kDefaultDim);

[[nodiscard]] DensityMatrix vacuum(int dim = kDefaultDim);
[[nodiscard]] DensityMatrix fock(int n, int dim = kDefaultDim);
/// Geometric populations p_n ∝ (nbar/(1+nbar))^n renormalized over the retained levels.
[[nodiscard]] DensityMatrix thermal(double nbar, int dim = kDefaultDim);
[[nodiscard]] DensityMatrix coherent(Complex alpha, int dim = kDefaultDim);

/// D(α) ρ D(α)†, evaluated at dim + guard levels and projected back.
[[nodiscard]] DensityMatrix apply_displacement(const DensityMatrix& rho, Complex alpha,
                                               int guard = kGuardLevels);
/// S(ξ) ρ S(ξ)† with S(ξ) = exp[(ξ* b² − ξ b†²)/2].
[[nodiscard]] DensityMatrix apply_squeeze(const DensityMatrix& rho, Complex xi,
                                          int guard = kGuardLevels);

/// U ρ U† for a unitary built at rho.dim() + guard, projected back with the leak check.
[[nodiscard]] DensityMatrix apply_unitary(const DensityMatrix& rho, const Matrix& unitary,
                                          int guard, const char* context);

/// Dense unitaries at the given dimension (no guard band).
[[nodiscard]] Matrix displacement_operator(Complex alpha, int dim);
[[nodiscard]] Matrix squeeze_operator(Complex xi, int dim);

[[nodiscard]] Complex expect(const DensityMatrix& rho, const Matrix& op);
[[nodiscard]] double mean_number(const DensityMatrix& rho);
/// Normally ordered ⟨b†b†bb⟩.
[[nodiscard]] double second_factorial_moment(const DensityMatrix& rho);
/// ⟨b†b†bb⟩ / ⟨b†b⟩². Throws UndefinedError when ⟨N⟩ ≤ 1e-12.
[[nodiscard]] double g2_zero(const DensityMatrix& rho);

}  // namespace phbt::hilbert
