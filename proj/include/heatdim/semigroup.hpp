#pragma once

// Heat semigroup e^{−tA} of a finite model, its kernel, the ergodic projection,
// spectral-gap decay and heat traces. Everything is evaluated from the model's cached
// eigendecomposition; no series or Padé exponentials.

#include "heatdim/dirac.hpp"
#include "heatdim/forms.hpp"
#include "heatdim/kernel_ops.hpp"

#include <vector>

namespace heatdim {

/// p_t(x,y) = Σ_k e^{−tλ_k} φ_k(x) φ_k(y), φ_k orthonormal in L²(μ).
struct HeatKernel {
  double t = 0.0;
  Kernel kernel;
};

HeatKernel heat_kernel(const FiniteModel& model, double t);
/// e^{−tλ} per eigenvalue (negative round-off clamped to 0, values below 1e-300 flushed to 0).
Vector decay_factors(const Vector& eigenvalues, double t);
/// x ↦ p_t(x,x) without forming the full kernel.
Vector heat_kernel_diagonal(const FiniteModel& model, double t);
/// e^{−tA} in function coordinates.
Matrix heat_operator(const FiniteModel& model, double t);

/// Absolute deviation together with the scale it should be compared against.
struct Deviation {
  double value = 0.0;
  double scale = 0.0;
  double relative() const { return value / std::max(1.0, scale); }
};

/// ‖p_{s+t} − ∫ p_s(·,z) p_t(z,·) dμ(z)‖_max, scaled by max p_{s+t}.
Deviation chapman_kolmogorov_check(const FiniteModel& model, double s, double t);
/// max_{x,y} p_t(x,y) − (p_t(x,x) p_t(y,y))^{1/2}; scale is max p_t.
Deviation diagonal_dominance_check(const FiniteModel& model, double t);

/// Pointwise identities of one heat kernel.
struct KernelIdentities {
  Deviation symmetry;         // max |p(x,y) − p(y,x)|
  Deviation negativity;       // max(0, −min p)
  Deviation mass;             // max |Σ_y p(x,y) μ_y − 1|
  Deviation operator_match;   // ‖kernel_to_operator(p_t) − e^{−tA}‖_max
  Deviation diagonal;         // diagonal_dominance_check
};
KernelIdentities kernel_identities(const FiniteModel& model, double t);

struct ErgodicData {
  Index fix_dim = 0;
  Matrix projection;    // function coordinates; μ-orthogonal projection onto ker A
  Matrix kernel_basis;  // n × fix_dim, orthonormal zero modes in orthonormal-atom coordinates
  double gap = 0.0;     // smallest nonzero eigenvalue of A, 0 if A = 0
};

ErgodicData ergodic_data(const FiniteModel& model);

struct ErgodicIdentities {
  double idempotence = 0.0;     // ‖E² − E‖_max
  double self_adjointness = 0.0;// ‖M E − (M E)ᵀ‖_max
  double left_invariance = 0.0; // ‖E T_t − E‖_max
  double right_invariance = 0.0;// ‖T_t E − E‖_max
};
/// The invariance terms apply E through kernel_basis (E = M^{-1/2} U Uᵀ M^{1/2}), which
/// keeps them O(n² fix_dim); idempotence and self-adjointness use the dense projection.
ErgodicIdentities ergodic_identities(const FiniteModel& model, const ErgodicData& data, double t);
/// Invariance maximized over the grid; the t-independent terms are evaluated once.
ErgodicIdentities ergodic_identities(const FiniteModel& model, const ErgodicData& data,
                                     const std::vector<double>& t_grid);

struct DecaySample {
  double t = 0.0;
  double norm = 0.0;   // ‖e^{−tA}(I − E)‖_{L²→L²}
  double bound = 0.0;  // e^{−ωt}
  bool pass = false;
};
struct DecayReport {
  double gap = 0.0;
  std::vector<DecaySample> samples;
  bool pass = true;
};

/// ‖e^{−tA}(I − E)‖ <= e^{−ωt} (1 + 1e-9) at every t. The operator is assembled in
/// orthonormal coordinates from the nonzero modes and its norm comes from a second,
/// independent eigensolve.
DecayReport decay_check(const FiniteModel& model, const std::vector<double>& t_grid);

/// Σ_k e^{−tλ_k} over the spectrum of A; restricted drops the kernel.
double heat_trace(const FiniteModel& model, double t, bool restricted = false);
/// Same over the spectrum of D².
double heat_trace(const HodgeDirac& hd, double t, bool restricted = false);
double heat_trace(const std::vector<double>& spectrum, double t, bool restricted);

/// t_i = 2^{−i}, i = first..last.
std::vector<double> dyadic_grid(int last, int first = 0);
/// t_i = 2^{−i/2}, i = first..last.
std::vector<double> half_dyadic_grid(int last, int first = 0);

}  // namespace heatdim
