#include "heatdim/semigroup.hpp"

#include "heatdim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace heatdim {

namespace {

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("heat semigroup needs finite t > 0, got " + std::to_string(t));
}

}  // namespace

Vector decay_factors(const Vector& eigenvalues, double t) {
  // Clamp round-off negatives (A is positive semidefinite) and flush factors that would be
  // subnormal: they are invisible at double precision but slow every product they enter.
  return (-t * eigenvalues.cwiseMax(0.0)).array().exp().unaryExpr([](double e) { return e < 1e-300 ? 0.0 : e; });
}

HeatKernel heat_kernel(const FiniteModel& model, double t) {
  check_time(t);
  const Matrix phi = model.eigenfunctions();
  const Vector e = decay_factors(model.spectrum().eigenvalues, t);
  Matrix p = (phi * e.asDiagonal()) * phi.transpose();
  return HeatKernel{t, Kernel{model.space(), std::move(p)}};
}

Vector heat_kernel_diagonal(const FiniteModel& model, double t) {
  check_time(t);
  const Matrix phi = model.eigenfunctions();
  return phi.cwiseAbs2() * decay_factors(model.spectrum().eigenvalues, t);
}

Matrix heat_operator(const FiniteModel& model, double t) {
  check_time(t);
  const SpectralData& s = model.spectrum();
  const Vector e = decay_factors(s.eigenvalues, t);
  const Vector root = model.space().weights().cwiseSqrt();
  const Matrix onb = (s.eigenvectors * e.asDiagonal()) * s.eigenvectors.transpose();
  return root.cwiseInverse().asDiagonal() * onb * root.asDiagonal();
}

Deviation chapman_kolmogorov_check(const FiniteModel& model, double s, double t) {
  const Matrix ps = heat_kernel(model, s).kernel.values;
  const Matrix pt = s == t ? ps : heat_kernel(model, t).kernel.values;
  const Matrix pst = heat_kernel(model, s + t).kernel.values;
  const Matrix composed = ps * model.space().weights().asDiagonal() * pt;
  return Deviation{max_abs(pst - composed), max_abs(pst)};
}

namespace {

Deviation dominance(const Matrix& p) {
  const Vector diag = p.diagonal().cwiseMax(0.0).cwiseSqrt();
  double worst = 0.0;
  for (Index y = 0; y < p.cols(); ++y) {
    for (Index x = 0; x < p.rows(); ++x) worst = std::max(worst, p(x, y) - diag(x) * diag(y));
  }
  return Deviation{worst, max_abs(p)};
}

}  // namespace

Deviation diagonal_dominance_check(const FiniteModel& model, double t) {
  return dominance(heat_kernel(model, t).kernel.values);
}

KernelIdentities kernel_identities(const FiniteModel& model, double t) {
  const HeatKernel hk = heat_kernel(model, t);
  const Matrix& p = hk.kernel.values;
  const double scale = max_abs(p);
  KernelIdentities out;
  out.symmetry = Deviation{max_abs(p - p.transpose()), scale};
  out.negativity = Deviation{std::max(0.0, -p.minCoeff()), scale};
  const Vector mass = p * model.space().weights();
  out.mass = Deviation{(mass.array() - 1.0).abs().maxCoeff(), 1.0};
  const Matrix op = heat_operator(model, t);
  out.operator_match = Deviation{max_abs(kernel_to_operator(hk.kernel) - op), max_abs(op)};
  out.diagonal = dominance(p);
  return out;
}

ErgodicData ergodic_data(const FiniteModel& model) {
  const SpectralData& s = model.spectrum();
  const Index n = model.size();
  ErgodicData out;
  std::vector<Index> zero_modes;
  for (Index k = 0; k < s.eigenvalues.size(); ++k) {
    if (s.is_zero(s.eigenvalues(k))) {
      zero_modes.push_back(k);
    } else if (out.gap == 0.0) {
      out.gap = s.eigenvalues(k);
    }
  }
  out.fix_dim = static_cast<Index>(zero_modes.size());
  out.kernel_basis.resize(n, out.fix_dim);
  for (Index j = 0; j < out.fix_dim; ++j) out.kernel_basis.col(j) = s.eigenvectors.col(zero_modes[static_cast<std::size_t>(j)]);
  const Vector root = model.space().weights().cwiseSqrt();
  const Matrix onb = out.kernel_basis * out.kernel_basis.transpose();
  out.projection = root.cwiseInverse().asDiagonal() * onb * root.asDiagonal();
  return out;
}

namespace {

// max ‖E T_t − E‖, max ‖T_t E − E‖ with E = M^{-1/2} U Uᵀ M^{1/2} applied through its
// rank-fix_dim factors.
std::pair<double, double> invariance(const FiniteModel& model, const ErgodicData& data, double t) {
  const Matrix tt = heat_operator(model, t);
  const Vector root = model.space().weights().cwiseSqrt();
  const Matrix left_factor = root.cwiseInverse().asDiagonal() * data.kernel_basis;  // M^{-1/2} U
  const Matrix right_factor = root.asDiagonal() * data.kernel_basis;                // M^{1/2} U
  const Matrix et = left_factor * (right_factor.transpose() * tt);
  const Matrix te = (tt * left_factor) * right_factor.transpose();
  return {max_abs(et - data.projection), max_abs(te - data.projection)};
}

}  // namespace

ErgodicIdentities ergodic_identities(const FiniteModel& model, const ErgodicData& data, double t) {
  return ergodic_identities(model, data, std::vector<double>{t});
}

ErgodicIdentities ergodic_identities(const FiniteModel& model, const ErgodicData& data,
                                     const std::vector<double>& t_grid) {
  const Matrix& e = data.projection;
  const Matrix weighted = model.space().weights().asDiagonal() * e;
  ErgodicIdentities out;
  out.idempotence = max_abs(e * e - e);
  out.self_adjointness = max_abs(weighted - weighted.transpose());
  for (double t : t_grid) {
    const auto [left, right] = invariance(model, data, t);
    out.left_invariance = std::max(out.left_invariance, left);
    out.right_invariance = std::max(out.right_invariance, right);
  }
  return out;
}

DecayReport decay_check(const FiniteModel& model, const std::vector<double>& t_grid) {
  const SpectralData& s = model.spectrum();
  DecayReport report;
  report.gap = ergodic_data(model).gap;
  for (double t : t_grid) {
    if (!(t >= 0.0)) throw DomainError("decay_check: t must be >= 0");
    // e^{−tA}(I − E) in orthonormal coordinates, built from the nonzero modes only: forming
    // T_t − T_t E instead cancels to round-off once e^{−ωt} is far below 1.
    const SymMatrix op = spectral_function(s, [t](double l) {
      const double e = std::exp(-t * std::max(l, 0.0));
      return e < 1e-300 ? 0.0 : e;
    },
                                           KernelPolicy::Zero);
    DecaySample sample;
    sample.t = t;
    sample.norm = schatten_norm(op, std::numeric_limits<double>::infinity());
    sample.bound = std::exp(-report.gap * t);
    sample.pass = sample.norm <= sample.bound * (1.0 + 1e-9);
    report.pass = report.pass && sample.pass;
    report.samples.push_back(sample);
  }
  return report;
}

double heat_trace(const std::vector<double>& spectrum, double t, bool restricted) {
  check_time(t);
  double max_abs_value = 0.0;
  for (double l : spectrum) max_abs_value = std::max(max_abs_value, std::abs(l));
  const double cut = kKernelThreshold * max_abs_value;
  // Largest eigenvalues (smallest terms) first.
  double sum = 0.0;
  for (auto it = spectrum.rbegin(); it != spectrum.rend(); ++it) {
    const double l = *it;
    if (restricted && std::abs(l) <= cut) continue;
    sum += std::exp(-t * std::max(l, 0.0));
  }
  return sum;
}

double heat_trace(const FiniteModel& model, double t, bool restricted) {
  const Vector& ev = model.spectrum().eigenvalues;
  return heat_trace(std::vector<double>(ev.begin(), ev.end()), t, restricted);
}

double heat_trace(const HodgeDirac& hd, double t, bool restricted) {
  return heat_trace(hd.squared_spectrum(), t, restricted);
}

std::vector<double> dyadic_grid(int last, int first) {
  std::vector<double> out;
  for (int i = first; i <= last; ++i) out.push_back(std::ldexp(1.0, -i));
  return out;
}

std::vector<double> half_dyadic_grid(int last, int first) {
  std::vector<double> out;
  for (int i = first; i <= last; ++i) {
    out.push_back(i % 2 == 0 ? std::ldexp(1.0, -i / 2) : std::ldexp(std::sqrt(0.5), -(i - 1) / 2));
  }
  return out;
}

}  // namespace heatdim
