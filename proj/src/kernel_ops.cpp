#include "heatdim/kernel_ops.hpp"

#include "heatdim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace heatdim {

FiniteMeasureSpace::FiniteMeasureSpace(Vector weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw ValidationError("measure space must have at least one atom");
  for (Index x = 0; x < weights_.size(); ++x) {
    if (!(std::isfinite(weights_(x)) && weights_(x) > 0.0)) {
      throw ValidationError("measure weight of atom " + std::to_string(x) + " must be finite and > 0");
    }
  }
  total_ = weights_.sum();
}

FiniteMeasureSpace FiniteMeasureSpace::uniform(Index n, double total) {
  return FiniteMeasureSpace(Vector::Constant(n, total / static_cast<double>(n)));
}

double FiniteMeasureSpace::inner(const Vector& f, const Vector& g) const {
  return (f.array() * g.array() * weights_.array()).sum();
}

Matrix kernel_to_operator(const Kernel& k) { return k.values * k.space.weights().asDiagonal(); }

Kernel operator_to_kernel(const Matrix& op, const FiniteMeasureSpace& space) {
  return Kernel{space, op * space.weights().cwiseInverse().asDiagonal()};
}

Kernel compose(const Kernel& k1, const Kernel& k2) {
  return Kernel{k1.space, k1.values * k1.space.weights().asDiagonal() * k2.values};
}

Matrix to_orthonormal_basis(const Matrix& op, const FiniteMeasureSpace& space) {
  const Vector root = space.weights().cwiseSqrt();
  return root.asDiagonal() * op * root.cwiseInverse().asDiagonal();
}

double NormIdentity::deviation() const { return std::abs(lhs - rhs); }

double norm_1_to_inf(const Matrix& op, const FiniteMeasureSpace& space) {
  double best = 0.0;
  for (Index y = 0; y < op.cols(); ++y) {
    const Vector atom = Vector::Unit(op.cols(), y) / space.weight(y);
    best = std::max(best, (op * atom).cwiseAbs().maxCoeff());
  }
  return best;
}

NormIdentity dunford_pettis_check(const Kernel& k) {
  return NormIdentity{max_abs(k.values), norm_1_to_inf(kernel_to_operator(k), k.space)};
}

NormIdentity hilbert_schmidt_check(const Kernel& k) {
  const Vector& mu = k.space.weights();
  double sum = 0.0;
  for (Index y = 0; y < k.values.cols(); ++y) {
    for (Index x = 0; x < k.values.rows(); ++x) {
      sum += k.values(x, y) * k.values(x, y) * mu(x) * mu(y);
    }
  }
  const Matrix onb = to_orthonormal_basis(kernel_to_operator(k), k.space);
  return NormIdentity{std::sqrt(sum), onb.norm()};
}

}  // namespace heatdim
