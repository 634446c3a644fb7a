#pragma once

// Finite measure spaces and the kernel <-> operator correspondence.
//
// Normalization used throughout: the L¹(μ) unit atoms are e_y / μ_y, and the
// L²(μ) orthonormal atoms are e_x / √μ_x. An operator "in function coordinates"
// is the matrix T with (T f)(x) = Σ_y T(x,y) f(y).

#include "heatdim/linalg.hpp"

namespace heatdim {

class FiniteMeasureSpace {
 public:
  /// Throws ValidationError unless every weight is finite and > 0.
  explicit FiniteMeasureSpace(Vector weights);
  static FiniteMeasureSpace uniform(Index n, double total = 1.0);
  static FiniteMeasureSpace counting(Index n) { return uniform(n, static_cast<double>(n)); }

  Index size() const noexcept { return weights_.size(); }
  const Vector& weights() const noexcept { return weights_; }
  double weight(Index x) const { return weights_(x); }
  double total() const noexcept { return total_; }

  /// ⟨f, g⟩_{L²(μ)}.
  double inner(const Vector& f, const Vector& g) const;

 private:
  Vector weights_;
  double total_ = 0.0;
};

struct Kernel {
  FiniteMeasureSpace space;
  Matrix values;  // K(x, y)
};

/// Matrix of f ↦ (x ↦ Σ_y K(x,y) f(y) μ_y); entry (x,y) = K(x,y) μ_y.
Matrix kernel_to_operator(const Kernel& k);
/// Inverse of kernel_to_operator.
Kernel operator_to_kernel(const Matrix& op, const FiniteMeasureSpace& space);
/// Kernel of T_{K1} ∘ T_{K2}: (x,z) ↦ Σ_y K1(x,y) K2(y,z) μ_y.
Kernel compose(const Kernel& k1, const Kernel& k2);

/// Operator in function coordinates conjugated into the L²(μ)-orthonormal atom basis.
Matrix to_orthonormal_basis(const Matrix& op, const FiniteMeasureSpace& space);

struct NormIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double deviation() const;
};

/// lhs = max|K| (L^∞(Ω×Ω)); rhs = ‖T_K‖_{L¹→L^∞} from T_K applied to every unit atom.
NormIdentity dunford_pettis_check(const Kernel& k);
/// lhs = ‖K‖_{L²(μ⊗μ)}; rhs = Schatten-2 norm of T_K in the orthonormal atom basis.
NormIdentity hilbert_schmidt_check(const Kernel& k);

/// sup over unit L¹ atoms of the sup norm of the image = max_{x,y} |T(x,y)| / μ_y.
double norm_1_to_inf(const Matrix& op, const FiniteMeasureSpace& space);

}  // namespace heatdim
