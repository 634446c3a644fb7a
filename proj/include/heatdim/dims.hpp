#pragma once

// Power-law exponent fitting and the dimension estimators built on it.

#include "heatdim/dirac.hpp"
#include "heatdim/forms.hpp"
#include "heatdim/semigroup.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace heatdim {

struct Sample {
  double x = 0.0;
  double y = 0.0;
};

struct FitWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const;
};

/// A least-squares line through (log x, log y) over the in-window samples.
///   exponent  = −slope (so y ~ x^{−exponent}); for counting fits the slope itself
///   dimension = the reported dimension (2·exponent for heat-type fits, 2·slope for Weyl)
struct DimensionFit {
  std::string quantity;
  double exponent = 0.0;
  double dimension = 0.0;
  double intercept = 0.0;
  FitWindow window;
  double residual = 0.0;  // max |log y − fitted line| over the window
  int n_points = 0;
  std::vector<Sample> samples;  // every sample, sorted by x, in and out of the window
  std::map<std::string, double> diagnostics;
};

/// Throws WindowError with fewer than 4 in-window samples and DomainError for
/// non-positive in-window values.
DimensionFit fit_exponent(std::vector<Sample> samples, FitWindow window);

/// Time-window policy shared by the heat-type estimators: t in
/// [20 / λ_max, min(1, 1 / (8 ω))], λ_max the top of the spectrum and ω its smallest
/// nonzero value. Throws WindowError when the spectrum is zero or the window is empty.
FitWindow default_time_window(double lambda_max, double gap);

/// Default estimator grid: t_i = 2^{−i/2}, i = 0..50.
std::vector<double> default_t_grid();

/// Local Coulhon–Varopoulos dimension from ‖T_t‖_{L¹→L^∞} = max_x p_t(x,x). The
/// diagonal supremum is used after checking kernel positivity and diagonal dominance at
/// the window ends; if either check fails the full max over (x,y) is used instead.
DimensionFit cv_local_dimension(const FiniteModel& model, const std::vector<double>& t_grid,
                                std::optional<FitWindow> window = std::nullopt);

/// Spectral dimension from the decay of the (restricted) heat trace, α = 2·exponent.
DimensionFit heat_trace_dimension(const HodgeDirac& hd, const std::vector<double>& t_grid, bool restricted = true,
                                  std::optional<FitWindow> window = std::nullopt);
DimensionFit heat_trace_dimension(const FiniteModel& model, const std::vector<double>& t_grid,
                                  bool restricted = true, std::optional<FitWindow> window = std::nullopt);
DimensionFit heat_trace_dimension(const std::vector<double>& spectrum, const std::vector<double>& t_grid,
                                  bool restricted = true, std::optional<FitWindow> window = std::nullopt);

struct WeylResult {
  std::vector<Sample> counts;  // (λ, N(λ)) on the grid
  DimensionFit fit;            // exponent = s with N ~ λ^s, dimension = 2s
};

/// N(λ) = #{k : 0 < λ_k <= λ (1 + 1e-9)} (kernel cutoff as everywhere; the slack keeps
/// degenerate clusters whole). The default grid is geometric with ratio 2^{1/4} from the
/// smallest nonzero eigenvalue ω to λ_max; the default window [8ω, λ_max / 20] is the
/// heat-trace time window seen through t ↔ 1/λ. Throws WindowError on an empty positive
/// spectrum or a window with fewer than 4 grid points.
WeylResult weyl_counting(std::span<const double> eigenvalues, std::optional<std::vector<double>> lambda_grid = std::nullopt,
                         std::optional<FitWindow> window = std::nullopt);

/// max_{1 <= n <= n_max} N(n)^{1/n}: the finite stand-in for the growth rate
/// limsup N(n)^{1/n}; finite spectra cannot show exponential growth. 0 for an empty
/// positive spectrum.
double spectral_growth_rate(std::span<const double> eigenvalues, int n_max);

struct ZetaReport {
  std::vector<double> alphas;
  std::vector<std::vector<double>> partial_sums;      // [level][alpha] Σ_{λ>0} λ^{−α/2}
  std::vector<std::vector<double>> growth_ratios;     // [level−1][alpha] Z_m / Z_{m−1}
  std::vector<std::vector<double>> increment_ratios;  // [level−2][alpha] ΔZ_m / ΔZ_{m−1}
  double epsilon = 0.05;
  bool found = false;
  double critical_alpha = 0.0;
};

/// Critical exponent of tr |D|^{−α} across refinement levels (each entry a D²
/// spectrum). Finite sums never diverge, so divergence is read off the growth between
/// levels: the estimate is the first α whose finest increment ratio
/// (Z_m − Z_{m−1}) / (Z_{m−1} − Z_{m−2}) is below 1 + ε. Throws InsufficientLevels
/// with fewer than 3 levels.
ZetaReport zeta_probe(const std::vector<std::vector<double>>& level_spectra, const std::vector<double>& alpha_grid,
                      double epsilon = 0.05);

struct GateReport {
  std::string name;
  bool pass = false;
  double spectral = 0.0;
  double reference = 0.0;  // CV dimension d̂, or 2δ̂ for the two-sided gate
  double slack = 0.0;
  std::string detail;
};

/// Passes iff α̂ <= d̂ + slack.
GateReport theorem_gate(const DimensionFit& spectral, const DimensionFit& cv, double slack = 0.1);
/// Passes iff |α̂ − 2δ̂| <= slack, with δ̂ the exponent of the diagonal decay p_t(x,x) ~ t^{−δ}.
GateReport two_sided_gate(const DimensionFit& spectral, const DimensionFit& cv, double slack = 0.2);

/// |S_n| = 2k(2k−1)^{n−1} in the free group on k generators.
std::uint64_t sphere_count(int k, int n);
/// Sphere sizes |S_0..S_depth| by breadth-first search over freely reduced words.
std::vector<std::uint64_t> sphere_counts_bfs(int k, int depth);

struct RapidDecayProfile {
  int k = 2;
  int r = 1;
  long n_max = 0;
  std::vector<std::uint64_t> sphere_counts;      // closed form, n = 0..8
  std::vector<std::uint64_t> sphere_counts_bfs;  // enumeration, n = 0..8
  std::vector<Sample> bound_samples;             // (t, B(t))
  DimensionFit fit;                              // fit of B(t)² (exponent ≈ 2r + 1)
  double fitted_exponent = 0.0;
  double claimed_dimension = 0.0;                // 4r + 2
};

/// Default rapid-decay grid: t_i = 2^{−i/2}, i = 6..24.
std::vector<double> rapid_decay_t_grid();
/// Smallest n with e^{−2 t n} n^{2r} < 1e-15 and n > r / t.
long rapid_decay_n_max(int r, double t_min);

/// B(t) = (Σ_{n <= n_max} e^{−2tn} (n+1)^{2r})^{1/2}. Throws TailError if n_max leaves a
/// tail term >= 1e-15 at the smallest t (n_max = 0 picks the default).
RapidDecayProfile rapid_decay_profile(int k, int r, const std::vector<double>& t_grid, long n_max = 0);

/// Default Fourier-torus grid: t_i = 2^{−i/2}, i = 10..40.
std::vector<double> torus_cb_t_grid();
/// Dimension of the (noncommutative) torus heat semigroup from ‖h_t‖_∞ ~ t^{−d/2};
/// default window [min t, 1 / (8·4π²)].
DimensionFit torus_cb_dimension(const TorusFourierModel& fourier, const std::vector<double>& t_grid,
                                std::optional<FitWindow> window = std::nullopt);

}  // namespace heatdim
