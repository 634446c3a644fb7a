#include "heatdim/dirac.hpp"

#include "heatdim/errors.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace heatdim {

// ---------------------------------------------------------------------------
// Derivation

Derivation::Derivation(FiniteModel model) : model_(std::move(model)) {
  for (const auto& e : model_.graph().edges()) {
    source_.push_back(e.u);
    target_.push_back(e.v);
  }
  assemble();
}

void Derivation::assemble() {
  const auto& edges = model_.graph().edges();
  matrix_ = Matrix::Zero(edge_count(), vertex_count());
  for (Index e = 0; e < edge_count(); ++e) {
    const double root = std::sqrt(edges[static_cast<std::size_t>(e)].w);
    matrix_(e, source(e)) = -root;
    matrix_(e, target(e)) = root;
  }
}

Derivation build_derivation(const FiniteModel& model) { return Derivation(model); }

Matrix Derivation::adjoint() const {
  return model_.space().weights().cwiseInverse().asDiagonal() * matrix_.transpose();
}

Matrix Derivation::orthonormal_matrix() const {
  return matrix_ * model_.space().weights().cwiseSqrt().cwiseInverse().asDiagonal();
}

Vector Derivation::apply_adjoint(const Vector& xi) const {
  return model_.space().weights().cwiseInverse().cwiseProduct(matrix_.transpose() * xi);
}

Vector Derivation::left_action(const Vector& f, const Vector& xi) const {
  Vector out(edge_count());
  for (Index e = 0; e < edge_count(); ++e) out(e) = f(source(e)) * xi(e);
  return out;
}

Vector Derivation::right_action(const Vector& xi, const Vector& f) const {
  Vector out(edge_count());
  for (Index e = 0; e < edge_count(); ++e) out(e) = xi(e) * f(target(e));
  return out;
}

Derivation Derivation::reoriented(std::span<const Index> edges) const {
  Derivation out = *this;
  for (Index e : edges) {
    if (e < 0 || e >= edge_count()) throw DomainError("reoriented: edge index out of range");
    std::swap(out.source_[static_cast<std::size_t>(e)], out.target_[static_cast<std::size_t>(e)]);
  }
  out.assemble();
  return out;
}

namespace {

// Graph gradients have two nonzeros per row, so products go through sparse storage.
using Sparse = Eigen::SparseMatrix<double>;

Matrix sparse_product(const Matrix& a, const Matrix& b) {
  const Sparse sa = a.sparseView();
  const Sparse sb = b.sparseView();
  return Matrix(sa * sb);
}

}  // namespace

double factorization_deviation(const Derivation& d) {
  const Matrix a = d.model().generator();
  const Matrix product = sparse_product(d.adjoint(), d.matrix());
  return max_abs(product - a) / std::max(1.0, max_abs(a));
}

// ---------------------------------------------------------------------------
// HodgeDirac

namespace {

SymMatrix assemble_blocks(const Derivation& d) {
  const Index n = d.vertex_count();
  const Index m = d.edge_count();
  const Matrix grad = d.orthonormal_matrix();
  Matrix dirac = Matrix::Zero(n + m, n + m);
  dirac.topRightCorner(n, m) = grad.transpose();
  dirac.bottomLeftCorner(m, n) = grad;
  return SymMatrix(std::move(dirac));
}

}  // namespace

HodgeDirac::HodgeDirac(Derivation derivation)
    : derivation_(std::move(derivation)), matrix_(assemble_blocks(derivation_)) {}

HodgeDirac assemble_dirac(const Derivation& d) { return HodgeDirac(d); }

Matrix HodgeDirac::square_blocks() const {
  const Index n = derivation_.vertex_count();
  const Index m = derivation_.edge_count();
  const Matrix grad = derivation_.orthonormal_matrix();
  Matrix out = Matrix::Zero(n + m, n + m);
  out.topLeftCorner(n, n) = sparse_product(grad.transpose(), grad);
  out.bottomRightCorner(m, m) = sparse_product(grad, grad.transpose());
  return out;
}

std::vector<double> squared_dirac_spectrum(const FiniteModel& model) {
  const SpectralData& s = model.spectrum();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(model.size() + model.graph().edge_count()));
  Index rank = 0;
  for (double l : s.eigenvalues) {
    if (s.is_zero(l)) {
      out.push_back(0.0);
    } else {
      out.push_back(l);
      out.push_back(l);
      ++rank;
    }
  }
  for (Index k = 0; k < model.graph().edge_count() - rank; ++k) out.push_back(0.0);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> HodgeDirac::squared_spectrum() const { return squared_dirac_spectrum(derivation_.model()); }

double HodgeDirac::squared_spectral_radius() const {
  const SpectralData& s = derivation_.model().spectrum();
  return s.max_abs_eigenvalue();
}

double dirac_square_deviation(const HodgeDirac& hd) {
  const Matrix& d = hd.matrix().entries();
  const Matrix square = sparse_product(d, d);
  return max_abs(square - hd.square_blocks());
}

SusyReport susy_pairing_check(const Derivation& d, double tolerance) {
  const Matrix grad = d.orthonormal_matrix();
  SpectralData vertex;
  SpectralData edge;
  vertex.eigenvalues = sym_eigenvalues(SymMatrix(sparse_product(grad.transpose(), grad)));
  edge.eigenvalues = sym_eigenvalues(SymMatrix(sparse_product(grad, grad.transpose())));

  SusyReport r;
  r.vertex_spectrum = vertex.nonzero_eigenvalues();
  r.edge_spectrum = edge.nonzero_eigenvalues();
  r.vertex_kernel = vertex.kernel_dim();
  r.edge_kernel = edge.kernel_dim();
  r.multiplicities_match = r.vertex_spectrum.size() == r.edge_spectrum.size();
  if (r.multiplicities_match) {
    for (std::size_t k = 0; k < r.vertex_spectrum.size(); ++k) {
      const double a = r.vertex_spectrum[k];
      const double b = r.edge_spectrum[k];
      r.max_relative_deviation = std::max(r.max_relative_deviation, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
    }
  } else {
    r.max_relative_deviation = std::numeric_limits<double>::infinity();
  }
  r.pass = r.multiplicities_match && r.max_relative_deviation <= tolerance;
  return r;
}

// ---------------------------------------------------------------------------
// Commutators

namespace {

// Lower-left block C = ∂̂ π_V(f) − π_E(f) ∂̂ in orthonormal coordinates.
Matrix commutator_block(const Derivation& d, const Vector& f) {
  if (f.size() != d.vertex_count()) throw DomainError("commutator: function length does not match the model");
  const Matrix grad = d.orthonormal_matrix();
  Vector on_edges(d.edge_count());
  for (Index e = 0; e < d.edge_count(); ++e) on_edges(e) = f(d.source(e));
  return grad * f.asDiagonal() - on_edges.asDiagonal() * grad;
}

}  // namespace

Matrix commutator(const HodgeDirac& hd, const Vector& f) {
  const Derivation& d = hd.derivation();
  const Index n = d.vertex_count();
  const Index m = d.edge_count();
  const Matrix c = commutator_block(d, f);
  Matrix out = Matrix::Zero(n + m, n + m);
  out.bottomLeftCorner(m, n) = c;
  out.topRightCorner(n, m) = -c.transpose();
  return out;
}

double commutator_norm(const HodgeDirac& hd, const Vector& f) {
  const Matrix c = commutator_block(hd.derivation(), f);
  const SpectralData s = sym_eig(SymMatrix(c.transpose() * c));
  return std::sqrt(std::max(0.0, s.eigenvalues.size() ? s.eigenvalues.maxCoeff() : 0.0));
}

double gradient_sup_norm(const Derivation& d, const Vector& f) {
  const Vector grad = d.apply(f);
  Vector density = Vector::Zero(d.vertex_count());
  for (Index e = 0; e < d.edge_count(); ++e) density(d.target(e)) += grad(e) * grad(e);
  density = density.cwiseQuotient(d.model().space().weights());
  return std::sqrt(density.maxCoeff());
}

// ---------------------------------------------------------------------------
// Connes distance
//
// With q(f) = ‖[D, π(f)]‖ = max_z (g_z(f))^{1/2}, g_z(f) = Σ_{target(e)=z} (∂f)(e)² / μ_z,
// the distance is 1 / min{ q(f) : f(x) − f(y) = 1 }. For weights λ on the simplex,
// min_f Σ_z λ_z g_z(f) under the same constraint is the effective conductance C(λ)
// between x and y for edge conductances λ_{target(e)} w_e / μ_{target(e)}; by convex
// duality min q² = max_λ C(λ).
//
// The primal min s s.t. g_z(f) <= s is solved by a log-barrier method (f(y) = 0,
// f(x) = 1). On the central path λ_z = 1 / (t (s − g_z)) sums to 1, so C(λ) is an
// exact dual bound at every outer step.

namespace {

struct Potential {
  Vector f;
  double conductance = 0.0;
};

Potential unit_potential(const Derivation& d, const Vector& lambda, Index x, Index y) {
  const Index n = d.vertex_count();
  const auto& edges = d.model().graph().edges();
  const Vector& mu = d.model().space().weights();
  Matrix lap = Matrix::Zero(n, n);
  for (Index e = 0; e < d.edge_count(); ++e) {
    const Index t = d.target(e);
    const Index s = d.source(e);
    const double c = lambda(t) * edges[static_cast<std::size_t>(e)].w / mu(t);
    lap(s, s) += c;
    lap(t, t) += c;
    lap(s, t) -= c;
    lap(t, s) -= c;
  }
  std::vector<Index> free;
  for (Index z = 0; z < n; ++z) {
    if (z != x && z != y) free.push_back(z);
  }
  Potential p;
  p.f = Vector::Zero(n);
  p.f(x) = 1.0;
  if (!free.empty()) {
    const Index k = static_cast<Index>(free.size());
    Matrix lff(k, k);
    Vector rhs(k);
    for (Index i = 0; i < k; ++i) {
      rhs(i) = -lap(free[static_cast<std::size_t>(i)], x);
      for (Index j = 0; j < k; ++j) lff(i, j) = lap(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
    }
    const Vector sol = lff.completeOrthogonalDecomposition().solve(rhs);
    for (Index i = 0; i < k; ++i) p.f(free[static_cast<std::size_t>(i)]) = sol(i);
  }
  p.conductance = std::max(0.0, p.f.dot(lap * p.f));
  return p;
}

Vector energy_densities(const Derivation& d, const Vector& f) {
  const Vector grad = d.apply(f);
  Vector g = Vector::Zero(d.vertex_count());
  for (Index e = 0; e < d.edge_count(); ++e) g(d.target(e)) += grad(e) * grad(e);
  return g.cwiseQuotient(d.model().space().weights());
}

}  // namespace

ConnesResult connes_distance(const HodgeDirac& hd, Index x, Index y, double tol, int max_iterations) {
  const Derivation& d = hd.derivation();
  const Index n = d.vertex_count();
  if (x < 0 || y < 0 || x >= n || y >= n) throw DomainError("connes_distance: vertex out of range");
  if (x == y) throw DomainError("connes_distance: x and y must differ");
  if (!(tol > 0.0)) throw DomainError("connes_distance: tol must be > 0");

  ConnesResult result;
  const auto comp = d.model().graph().components();
  if (comp[static_cast<std::size_t>(x)] != comp[static_cast<std::size_t>(y)]) {
    result.distance = std::numeric_limits<double>::infinity();
    result.upper_bound = result.distance;
    return result;
  }

  const auto& edges = d.model().graph().edges();
  const Vector& mu = d.model().space().weights();

  // Free variables: the component of x minus {x, y}, plus s last.
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  Index k = 0;
  for (Index z = 0; z < n; ++z) {
    if (z != x && z != y && comp[static_cast<std::size_t>(z)] == comp[static_cast<std::size_t>(x)]) {
      slot[static_cast<std::size_t>(z)] = k++;
    }
  }
  // Constraints: vertices that are the target of some edge.
  std::vector<std::vector<Index>> incoming(static_cast<std::size_t>(n));
  for (Index e = 0; e < d.edge_count(); ++e) incoming[static_cast<std::size_t>(d.target(e))].push_back(e);
  std::vector<Index> heads;
  Vector lambda = Vector::Zero(n);
  for (Index z = 0; z < n; ++z) {
    if (!incoming[static_cast<std::size_t>(z)].empty()) {
      heads.push_back(z);
      lambda(z) = 1.0;
    }
  }
  lambda /= lambda.sum();
  const double m = static_cast<double>(heads.size());

  const auto densities = [&](const Vector& f) { return energy_densities(d, f); };
  const auto assemble_f = [&](const Vector& v) {
    Vector f = Vector::Zero(n);
    f(x) = 1.0;
    for (Index z = 0; z < n; ++z) {
      if (slot[static_cast<std::size_t>(z)] >= 0) f(z) = v(slot[static_cast<std::size_t>(z)]);
    }
    return f;
  };
  // barrier value t·s − Σ log(s − g_z), +inf outside the domain
  const auto barrier = [&](const Vector& f, double s, double t) {
    const Vector g = densities(f);
    double value = t * s;
    for (Index z : heads) {
      const double r = s - g(z);
      if (!(r > 0.0)) return std::numeric_limits<double>::infinity();
      value -= std::log(r);
    }
    return value;
  };

  // Start from the potential of uniform weights, strictly inside.
  const Potential start = unit_potential(d, lambda, x, y);
  double best_dual = start.conductance;
  double best_q = std::sqrt(densities(start.f).maxCoeff());
  Vector best_f = start.f;
  Vector v(k);
  for (Index z = 0; z < n; ++z) {
    if (slot[static_cast<std::size_t>(z)] >= 0) v(slot[static_cast<std::size_t>(z)]) = start.f(z);
  }
  double s = 1.5 * best_q * best_q + std::numeric_limits<double>::min();
  double t = m / s;

  const auto gap = [&] {
    const double upper = best_dual > 0.0 ? 1.0 / std::sqrt(best_dual) : std::numeric_limits<double>::infinity();
    return upper - 1.0 / best_q;
  };

  while (gap() > tol && result.iterations < max_iterations) {
    // centering
    while (result.iterations < max_iterations) {
      ++result.iterations;
      const Vector f = assemble_f(v);
      const Vector grad_e = d.apply(f);
      const Vector g = densities(f);
      Vector grad = Vector::Zero(k + 1);
      Matrix hess = Matrix::Zero(k + 1, k + 1);
      grad(k) = t;
      for (Index z : heads) {
        const double r = s - g(z);
        Vector a = Vector::Zero(k + 1);  // gradient of g_z − s
        a(k) = -1.0;
        for (Index e : incoming[static_cast<std::size_t>(z)]) {
          const double c = edges[static_cast<std::size_t>(e)].w / mu(z);
          const Index it = slot[static_cast<std::size_t>(d.target(e))];
          const Index is = slot[static_cast<std::size_t>(d.source(e))];
          const double delta = grad_e(e) / std::sqrt(edges[static_cast<std::size_t>(e)].w);
          if (it >= 0) a(it) += 2.0 * c * delta;
          if (is >= 0) a(is) -= 2.0 * c * delta;
          const double h = 2.0 * c / r;
          if (it >= 0) hess(it, it) += h;
          if (is >= 0) hess(is, is) += h;
          if (it >= 0 && is >= 0) {
            hess(it, is) -= h;
            hess(is, it) -= h;
          }
        }
        grad += a / r;
        hess.noalias() += (a / r) * (a / r).transpose();
      }
      const Vector step = -hess.ldlt().solve(grad);
      const double decrement = -grad.dot(step);
      // Centered enough; below this the Armijo test is lost in round-off of t·s.
      if (!(decrement > 1e-9)) break;
      const double current = barrier(f, s, t);
      double alpha = 1.0;
      Vector nv = v + alpha * step.head(k);
      double ns = s + alpha * step(k);
      while (barrier(assemble_f(nv), ns, t) > current - 0.25 * alpha * decrement && alpha > 1e-6) {
        alpha *= 0.5;
        nv = v + alpha * step.head(k);
        ns = s + alpha * step(k);
      }
      // A collapsed line search also means round-off; the dual bound stays exact regardless.
      if (alpha <= 1e-6) break;
      v = nv;
      s = ns;
    }

    const Vector f = assemble_f(v);
    const Vector g = densities(f);
    const double q = std::sqrt(g.maxCoeff());
    if (q < best_q) {
      best_q = q;
      best_f = f;
    }
    for (Index z : heads) lambda(z) = 1.0 / (t * (s - g(z)));
    lambda /= lambda.sum();
    best_dual = std::max(best_dual, unit_potential(d, lambda, x, y).conductance);
    t *= 8.0;
  }

  result.distance = 1.0 / best_q;
  result.upper_bound = best_dual > 0.0 ? 1.0 / std::sqrt(best_dual) : std::numeric_limits<double>::infinity();
  result.witness = best_f / best_q;
  if (result.upper_bound - result.distance > tol) {
    throw NonConvergence("connes_distance: duality gap " + std::to_string(result.upper_bound - result.distance) +
                         " above tolerance after " + std::to_string(result.iterations) + " iterations");
  }
  return result;
}

}  // namespace heatdim
