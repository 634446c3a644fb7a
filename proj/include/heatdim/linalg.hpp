#pragma once

// Dense real symmetric linear algebra: eigendecomposition, Schatten norms and
// spectral functions of matrices.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace heatdim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// An eigenvalue is treated as zero when |λ| <= kKernelThreshold * max|eigenvalue|.
/// Every "nonzero part" computation in the library goes through this constant.
inline constexpr double kKernelThreshold = 1e-10;

/// Dense symmetric matrix. Construction rejects entries that are asymmetric by more
/// than 1e-12 * max(1, max|entry|) and symmetrizes the rest.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix entries);

  static SymMatrix identity(Index n);
  static SymMatrix diagonal(const Vector& d);

  Index dim() const noexcept { return entries_.rows(); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }
  double max_abs() const;
  double trace() const { return entries_.trace(); }

 private:
  Matrix entries_;
};

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a symmetric matrix.
struct SpectralData {
  Vector eigenvalues;
  Matrix eigenvectors;
  Index source_dim = 0;

  double max_abs_eigenvalue() const;
  /// Absolute cutoff below which an eigenvalue counts as zero.
  double zero_cutoff() const { return kKernelThreshold * max_abs_eigenvalue(); }
  bool is_zero(double lambda) const;
  Index kernel_dim() const;
  /// Eigenvalues above the kernel cutoff, ascending, with multiplicity.
  std::vector<double> nonzero_eigenvalues() const;
};

enum class EigenMethod { Auto, Jacobi, Lapack };

/// Largest dimension for which EigenMethod::Auto uses Jacobi rotations.
inline constexpr Index kJacobiMaxDim = 256;

/// Eigendecomposition. tol must lie in [1e-14, 1e-6]; it is the relative off-diagonal
/// Frobenius mass at which Jacobi sweeps stop. Eigenvector signs are normalized so the
/// largest-magnitude component of every column is positive (deterministic across methods).
/// Throws NonConvergence when the Jacobi budget (n^2 sweeps) or LAPACK fails.
SpectralData sym_eig(const SymMatrix& a, double tol = 1e-12, EigenMethod method = EigenMethod::Auto);

/// Cyclic Jacobi rotations; also the independent route used to cross-check LAPACK.
SpectralData jacobi_eig(const SymMatrix& a, double tol);
/// Divide-and-conquer LAPACK driver (dsyevd).
SpectralData lapack_eig(const SymMatrix& a);

/// Ascending eigenvalues without eigenvectors: Jacobi up to kJacobiMaxDim, else LAPACK dsyev.
Vector sym_eigenvalues(const SymMatrix& a);

/// Schatten p-norm for p in {1, 2, inf} (pass std::numeric_limits<double>::infinity()).
double schatten_norm(const SymMatrix& a, double p);
double schatten_norm(const SpectralData& s, double p);

enum class KernelPolicy {
  Evaluate,  // apply f to every eigenvalue
  Zero,      // f is 0 on eigenvalues inside the kernel cutoff
};

/// V diag(f(λ)) Vᵀ. Throws DomainError if f is non-finite on an evaluated eigenvalue.
SymMatrix spectral_function(const SpectralData& s, const std::function<double(double)>& f,
                            KernelPolicy policy = KernelPolicy::Evaluate);

/// Max-entry norm of a matrix.
inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace heatdim
