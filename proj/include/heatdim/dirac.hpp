#pragma once

// The derivation ∂ of a finite model (A = ∂*∂), the Hodge–Dirac operator
// D = [[0, ∂*], [∂, 0]] on L²(μ) ⊕ ℓ²(E), commutators [D, π(f)] and the Connes
// spectral distance.
//
// Edge e is oriented source → target (u → v, u < v unless reoriented) and
// (∂f)(e) = √w_e (f(v) − f(u)). The edge space is an L^∞-bimodule with left action
// f·ξ(e) = f(u) ξ(e) and right action ξ·f(e) = ξ(e) f(v). With these actions the
// Leibniz rule holds in the twisted form ∂(fg) = f·∂g + ∂f·g; the untwisted rule is
// only a continuum-limit property.

#include "heatdim/forms.hpp"
#include "heatdim/linalg.hpp"

#include <span>
#include <vector>

namespace heatdim {

class Derivation {
 public:
  explicit Derivation(FiniteModel model);

  const FiniteModel& model() const noexcept { return model_; }
  Index vertex_count() const noexcept { return model_.size(); }
  Index edge_count() const noexcept { return static_cast<Index>(source_.size()); }
  Index source(Index e) const { return source_[static_cast<std::size_t>(e)]; }
  Index target(Index e) const { return target_[static_cast<std::size_t>(e)]; }

  /// |E| × n matrix of ∂ in function coordinates.
  const Matrix& matrix() const noexcept { return matrix_; }
  /// n × |E| matrix of the L²(μ) → ℓ²(E) adjoint, M⁻¹ ∂ᵀ.
  Matrix adjoint() const;
  /// ∂ M^{-1/2}: ∂ in the orthonormal atom basis of L²(μ).
  Matrix orthonormal_matrix() const;

  Vector apply(const Vector& f) const { return matrix_ * f; }
  Vector apply_adjoint(const Vector& xi) const;

  Vector left_action(const Vector& f, const Vector& xi) const;
  Vector right_action(const Vector& xi, const Vector& f) const;

  /// Same model with the listed edges' orientation reversed.
  Derivation reoriented(std::span<const Index> edges) const;

 private:
  FiniteModel model_;
  std::vector<Index> source_;
  std::vector<Index> target_;
  Matrix matrix_;

  void assemble();
};

Derivation build_derivation(const FiniteModel& model);

/// ‖∂*∂ − A‖_max / max(1, ‖A‖_max).
double factorization_deviation(const Derivation& d);

class HodgeDirac {
 public:
  explicit HodgeDirac(Derivation derivation);

  const Derivation& derivation() const noexcept { return derivation_; }
  /// (n + |E|) square, symmetric, orthonormal coordinates on both summands.
  const SymMatrix& matrix() const noexcept { return matrix_; }
  Index dim() const noexcept { return matrix_.dim(); }

  /// blockdiag(∂*∂, ∂∂*) in orthonormal coordinates.
  Matrix square_blocks() const;
  /// Spectrum of D², from the cached model spectrum and the pairing of the nonzero
  /// spectra of ∂*∂ and ∂∂* (zero modes of ∂∂* fill the rest). The pairing itself is
  /// checked by susy_pairing_check.
  std::vector<double> squared_spectrum() const;
  /// Largest eigenvalue of D².
  double squared_spectral_radius() const;

 private:
  Derivation derivation_;
  SymMatrix matrix_;
};

HodgeDirac assemble_dirac(const Derivation& d);

/// D² spectrum of a model's Hodge–Dirac operator without assembling D: eig(A), the
/// nonzero part of eig(A) once more, and |E| − rank(A) zeros.
std::vector<double> squared_dirac_spectrum(const FiniteModel& model);

/// ‖D·D − blockdiag(∂*∂, ∂∂*)‖_max.
double dirac_square_deviation(const HodgeDirac& hd);

struct SusyReport {
  std::vector<double> vertex_spectrum;  // nonzero eigenvalues of ∂*∂
  std::vector<double> edge_spectrum;    // nonzero eigenvalues of ∂∂*
  Index vertex_kernel = 0;
  Index edge_kernel = 0;
  bool multiplicities_match = false;
  double max_relative_deviation = 0.0;
  bool pass = false;
};

/// Nonzero spectra of ∂*∂ and ∂∂* agree with multiplicity (relative tolerance).
SusyReport susy_pairing_check(const Derivation& d, double tolerance = 1e-9);

/// [D, π(f)] in orthonormal coordinates; π(f) multiplies vertex functions by f and
/// edge functions by f(source). The lower-left block maps g to (∂f)·g.
Matrix commutator(const HodgeDirac& hd, const Vector& f);
/// Operator norm of the commutator, from the eigenvalues of CᵀC (C the lower-left block).
double commutator_norm(const HodgeDirac& hd, const Vector& f);
/// ‖∂f‖ in the L^∞-valued inner product of the right module:
/// max_x (Σ_{e: target(e)=x} (∂f)(e)² / μ_x)^{1/2}.
double gradient_sup_norm(const Derivation& d, const Vector& f);

struct ConnesResult {
  double distance = 0.0;     // attained by `witness`
  double upper_bound = 0.0;  // dual certificate
  Vector witness;            // f with f(x) − f(y) = distance and ‖[D, π(f)]‖ = 1
  int iterations = 0;
};

/// sup{ f(x) − f(y) : ‖[D, π(f)]‖ <= 1 }. Returns +inf for vertices in different
/// components. Throws DomainError for x == y and NonConvergence if the duality gap
/// stays above tol after max_iterations.
ConnesResult connes_distance(const HodgeDirac& hd, Index x, Index y, double tol = 1e-6,
                             int max_iterations = 5000);

}  // namespace heatdim
