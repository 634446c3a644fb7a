#include "heatdim/dims.hpp"

#include "heatdim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <unordered_set>

namespace heatdim {

bool FitWindow::contains(double x) const { return x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12); }

DimensionFit fit_exponent(std::vector<Sample> samples, FitWindow window) {
  if (!(window.lo > 0.0 && window.lo < window.hi)) {
    throw WindowError("fit window needs 0 < lo < hi, got [" + std::to_string(window.lo) + ", " +
                      std::to_string(window.hi) + "]");
  }
  std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.x < b.x; });
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& s : samples) {
    if (!window.contains(s.x)) continue;
    if (!(s.x > 0.0 && s.y > 0.0) || !std::isfinite(s.y)) {
      throw DomainError("fit_exponent: non-positive sample (" + std::to_string(s.x) + ", " + std::to_string(s.y) +
                        ") inside the window");
    }
    lx.push_back(std::log(s.x));
    ly.push_back(std::log(s.y));
  }
  if (lx.size() < 4) {
    throw WindowError("fit_exponent: " + std::to_string(lx.size()) + " samples in window [" +
                      std::to_string(window.lo) + ", " + std::to_string(window.hi) + "], need at least 4");
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw WindowError("fit_exponent: all in-window abscissae coincide");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double residual = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    residual = std::max(residual, std::abs(ly[i] - (intercept + slope * lx[i])));
  }

  DimensionFit fit;
  fit.exponent = -slope;
  fit.dimension = -slope;
  fit.intercept = intercept;
  fit.window = window;
  fit.residual = residual;
  fit.n_points = static_cast<int>(lx.size());
  fit.samples = std::move(samples);
  return fit;
}

FitWindow default_time_window(double lambda_max, double gap) {
  if (!(lambda_max > 0.0) || !(gap > 0.0)) {
    throw WindowError("default time window needs a nonzero spectrum");
  }
  const FitWindow w{20.0 / lambda_max, std::min(1.0, 1.0 / (8.0 * gap))};
  if (!(w.lo < w.hi)) {
    throw WindowError("default time window is empty: [" + std::to_string(w.lo) + ", " + std::to_string(w.hi) + "]");
  }
  return w;
}

std::vector<double> default_t_grid() { return half_dyadic_grid(50); }

namespace {

struct SpectrumScale {
  double max = 0.0;
  double gap = 0.0;
};

SpectrumScale scale_of(std::span<const double> eigenvalues) {
  SpectrumScale s;
  for (double l : eigenvalues) s.max = std::max(s.max, std::abs(l));
  const double cut = kKernelThreshold * s.max;
  double gap = 0.0;
  for (double l : eigenvalues) {
    if (l > cut && (gap == 0.0 || l < gap)) gap = l;
  }
  s.gap = gap;
  return s;
}

std::vector<double> to_vector(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

}  // namespace

DimensionFit cv_local_dimension(const FiniteModel& model, const std::vector<double>& t_grid,
                                std::optional<FitWindow> window) {
  const SpectralData& s = model.spectrum();
  const auto ev = to_vector(s.eigenvalues);
  const SpectrumScale scale = scale_of(ev);
  const FitWindow w = window ? *window : default_time_window(scale.max, scale.gap);

  // Positivity and diagonal dominance at the window ends justify the diagonal sup.
  std::vector<double> in_window;
  for (double t : t_grid) {
    if (w.contains(t)) in_window.push_back(t);
  }
  bool diagonal_ok = true;
  if (!in_window.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(in_window.begin(), in_window.end());
    for (double t : {*lo_it, *hi_it}) {
      const KernelIdentities id = kernel_identities(model, t);
      diagonal_ok = diagonal_ok && id.negativity.relative() <= 1e-9 && id.diagonal.relative() <= 1e-10;
    }
  }

  const Matrix phi2 = model.eigenfunctions().cwiseAbs2();
  const Vector lambda = s.eigenvalues.cwiseMax(0.0);
  std::vector<Sample> samples;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw DomainError("cv_local_dimension: t must be > 0");
    double value = 0.0;
    if (diagonal_ok) {
      value = (phi2 * decay_factors(lambda, t)).maxCoeff();
    } else {
      value = max_abs(heat_kernel(model, t).kernel.values);
    }
    samples.push_back(Sample{t, value});
  }
  DimensionFit fit = fit_exponent(std::move(samples), w);
  fit.quantity = "cv";
  fit.dimension = 2.0 * fit.exponent;
  fit.diagnostics["diagonal_sup_verified"] = diagonal_ok ? 1.0 : 0.0;
  fit.diagnostics["lambda_max"] = scale.max;
  fit.diagnostics["gap"] = scale.gap;
  return fit;
}

DimensionFit heat_trace_dimension(const std::vector<double>& spectrum, const std::vector<double>& t_grid,
                                  bool restricted, std::optional<FitWindow> window) {
  const SpectrumScale scale = scale_of(spectrum);
  const FitWindow w = window ? *window : default_time_window(scale.max, scale.gap);
  std::vector<Sample> samples;
  for (double t : t_grid) samples.push_back(Sample{t, heat_trace(spectrum, t, restricted)});
  DimensionFit fit = fit_exponent(std::move(samples), w);
  fit.quantity = "heat_trace";
  fit.dimension = 2.0 * fit.exponent;
  fit.diagnostics["restricted"] = restricted ? 1.0 : 0.0;
  fit.diagnostics["lambda_max"] = scale.max;
  fit.diagnostics["gap"] = scale.gap;
  return fit;
}

DimensionFit heat_trace_dimension(const HodgeDirac& hd, const std::vector<double>& t_grid, bool restricted,
                                  std::optional<FitWindow> window) {
  return heat_trace_dimension(hd.squared_spectrum(), t_grid, restricted, window);
}

DimensionFit heat_trace_dimension(const FiniteModel& model, const std::vector<double>& t_grid, bool restricted,
                                  std::optional<FitWindow> window) {
  return heat_trace_dimension(to_vector(model.spectrum().eigenvalues), t_grid, restricted, window);
}

namespace {

std::vector<double> positive_part(std::span<const double> eigenvalues) {
  const SpectrumScale scale = scale_of(eigenvalues);
  const double cut = kKernelThreshold * scale.max;
  std::vector<double> pos;
  for (double l : eigenvalues) {
    if (l > cut) pos.push_back(l);
  }
  std::sort(pos.begin(), pos.end());
  return pos;
}

}  // namespace

WeylResult weyl_counting(std::span<const double> eigenvalues, std::optional<std::vector<double>> lambda_grid,
                         std::optional<FitWindow> window) {
  const std::vector<double> pos = positive_part(eigenvalues);
  if (pos.empty()) throw WindowError("weyl_counting: no positive eigenvalues to count");
  const double lo = pos.front();
  const double hi = pos.back();

  std::vector<double> grid;
  if (lambda_grid) {
    grid = *lambda_grid;
  } else {
    for (int j = 0;; ++j) {
      const double l = lo * std::pow(2.0, 0.25 * j);
      if (l > hi * (1.0 + 1e-12)) break;
      grid.push_back(l);
    }
  }
  WeylResult out;
  for (double l : grid) {
    if (!(l > 0.0)) throw DomainError("weyl_counting: grid values must be positive");
    // Grid points can land on degenerate eigenvalues; count the whole cluster.
    const auto count = static_cast<double>(std::upper_bound(pos.begin(), pos.end(), l * (1.0 + 1e-9)) - pos.begin());
    out.counts.push_back(Sample{l, count});
  }
  out.fit = fit_exponent(out.counts, window.value_or(FitWindow{8.0 * lo, hi / 20.0}));
  out.fit.quantity = "weyl";
  out.fit.exponent = -out.fit.exponent;
  out.fit.dimension = 2.0 * out.fit.exponent;
  return out;
}

double spectral_growth_rate(std::span<const double> eigenvalues, int n_max) {
  if (n_max < 2) throw DomainError("spectral_growth_rate: n_max must be >= 2");
  const std::vector<double> pos = positive_part(eigenvalues);
  if (pos.empty()) return 0.0;
  double best = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    const auto count = std::upper_bound(pos.begin(), pos.end(), static_cast<double>(n)) - pos.begin();
    if (count > 0) best = std::max(best, std::pow(static_cast<double>(count), 1.0 / n));
  }
  return best;
}

ZetaReport zeta_probe(const std::vector<std::vector<double>>& level_spectra, const std::vector<double>& alpha_grid,
                      double epsilon) {
  if (level_spectra.size() < 3) {
    throw InsufficientLevels("zeta_probe needs at least 3 refinement levels, got " +
                             std::to_string(level_spectra.size()));
  }
  if (alpha_grid.empty()) throw DomainError("zeta_probe: empty alpha grid");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > 0.0) || (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1]))) {
      throw DomainError("zeta_probe: alpha grid must be positive and ascending");
    }
  }
  ZetaReport r;
  r.alphas = alpha_grid;
  r.epsilon = epsilon;
  for (const auto& spectrum : level_spectra) {
    const std::vector<double> pos = positive_part(spectrum);
    std::vector<double> row;
    for (double alpha : alpha_grid) {
      double z = 0.0;
      for (auto it = pos.rbegin(); it != pos.rend(); ++it) z += std::pow(*it, -0.5 * alpha);
      row.push_back(z);
    }
    r.partial_sums.push_back(std::move(row));
  }
  const std::size_t levels = r.partial_sums.size();
  for (std::size_t m = 1; m < levels; ++m) {
    std::vector<double> row;
    for (std::size_t a = 0; a < alpha_grid.size(); ++a) row.push_back(r.partial_sums[m][a] / r.partial_sums[m - 1][a]);
    r.growth_ratios.push_back(std::move(row));
  }
  for (std::size_t m = 2; m < levels; ++m) {
    std::vector<double> row;
    for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
      const double inc = r.partial_sums[m][a] - r.partial_sums[m - 1][a];
      const double prev = r.partial_sums[m - 1][a] - r.partial_sums[m - 2][a];
      row.push_back(inc / prev);
    }
    r.increment_ratios.push_back(std::move(row));
  }
  const auto& finest = r.increment_ratios.back();
  for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
    if (finest[a] < 1.0 + epsilon) {
      r.found = true;
      r.critical_alpha = alpha_grid[a];
      break;
    }
  }
  return r;
}

namespace {

std::string describe(const DimensionFit& f) {
  std::ostringstream os;
  os.precision(6);
  os << f.quantity << "=" << f.dimension << " window=[" << f.window.lo << ", " << f.window.hi
     << "] residual=" << f.residual << " points=" << f.n_points;
  return os.str();
}

}  // namespace

GateReport theorem_gate(const DimensionFit& spectral, const DimensionFit& cv, double slack) {
  GateReport g;
  g.name = "theorem";
  g.spectral = spectral.dimension;
  g.reference = cv.dimension;
  g.slack = slack;
  g.pass = g.spectral <= g.reference + slack;
  g.detail = describe(spectral) + "; " + describe(cv);
  return g;
}

GateReport two_sided_gate(const DimensionFit& spectral, const DimensionFit& cv, double slack) {
  GateReport g;
  g.name = "two_sided";
  g.spectral = spectral.dimension;
  g.reference = 2.0 * cv.exponent;  // 2δ̂, p_t(x,x) ~ t^{−δ}
  g.slack = slack;
  g.pass = std::abs(g.spectral - g.reference) <= slack;
  g.detail = describe(spectral) + "; delta=" + std::to_string(cv.exponent) + " from " + describe(cv);
  return g;
}

std::uint64_t sphere_count(int k, int n) {
  if (k < 1 || n < 0) throw DomainError("sphere_count: need k >= 1 and n >= 0");
  if (n == 0) return 1;
  std::uint64_t c = 2 * static_cast<std::uint64_t>(k);
  for (int i = 1; i < n; ++i) c *= static_cast<std::uint64_t>(2 * k - 1);
  return c;
}

std::vector<std::uint64_t> sphere_counts_bfs(int k, int depth) {
  if (k < 1 || k > 26 || depth < 0) throw DomainError("sphere_counts_bfs: need 1 <= k <= 26 and depth >= 0");
  // Letter 'a'+i is the i-th generator, 'A'+i its inverse.
  auto inverse = [](char c) { return c >= 'a' ? static_cast<char>(c - 'a' + 'A') : static_cast<char>(c - 'A' + 'a'); };
  std::vector<char> letters;
  for (int i = 0; i < k; ++i) {
    letters.push_back(static_cast<char>('a' + i));
    letters.push_back(static_cast<char>('A' + i));
  }
  std::unordered_set<std::string> visited{""};
  std::vector<std::string> frontier{""};
  std::vector<std::uint64_t> counts{1};
  for (int level = 1; level <= depth; ++level) {
    std::vector<std::string> next;
    for (const auto& word : frontier) {
      for (char c : letters) {
        std::string product = word;
        if (!product.empty() && product.back() == inverse(c)) {
          product.pop_back();
        } else {
          product.push_back(c);
        }
        if (visited.insert(product).second) next.push_back(std::move(product));
      }
    }
    counts.push_back(next.size());
    frontier = std::move(next);
  }
  return counts;
}

std::vector<double> rapid_decay_t_grid() { return half_dyadic_grid(24, 6); }

long rapid_decay_n_max(int r, double t_min) {
  if (r < 1 || !(t_min > 0.0)) throw DomainError("rapid_decay_n_max: need r >= 1 and t > 0");
  const double log_tol = std::log(1e-15);
  long n = static_cast<long>(std::ceil(r / t_min)) + 1;
  while (-2.0 * t_min * n + 2.0 * r * std::log(static_cast<double>(n)) >= log_tol) ++n;
  return n;
}

RapidDecayProfile rapid_decay_profile(int k, int r, const std::vector<double>& t_grid, long n_max) {
  if (k < 2) throw DomainError("rapid_decay_profile: free group rank must be >= 2");
  if (r < 1) throw DomainError("rapid_decay_profile: decay order must be >= 1");
  if (t_grid.empty()) throw WindowError("rapid_decay_profile: empty t grid");
  for (double t : t_grid) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("rapid_decay_profile: t grid must lie in (0, 1)");
  }
  const double t_min = *std::min_element(t_grid.begin(), t_grid.end());
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  if (n_max == 0) n_max = rapid_decay_n_max(r, t_min);
  const double tail_log = -2.0 * t_min * n_max + 2.0 * r * std::log(static_cast<double>(n_max));
  if (n_max <= r / t_min || tail_log >= std::log(1e-15)) {
    throw TailError("rapid_decay_profile: n_max = " + std::to_string(n_max) + " leaves a tail term above 1e-15 at t = " +
                    std::to_string(t_min));
  }

  RapidDecayProfile p;
  p.k = k;
  p.r = r;
  p.n_max = n_max;
  for (int n = 0; n <= 8; ++n) p.sphere_counts.push_back(sphere_count(k, n));
  p.sphere_counts_bfs = sphere_counts_bfs(k, 8);

  std::vector<Sample> squared;
  for (double t : t_grid) {
    double sum = 0.0;
    for (long n = 0; n <= n_max; ++n) {
      sum += std::exp(-2.0 * t * static_cast<double>(n)) * std::pow(static_cast<double>(n + 1), 2.0 * r);
    }
    p.bound_samples.push_back(Sample{t, std::sqrt(sum)});
    squared.push_back(Sample{t, sum});
  }
  p.fit = fit_exponent(std::move(squared), FitWindow{t_min, t_max});
  p.fit.quantity = "rapid_decay";
  p.fit.dimension = 2.0 * p.fit.exponent;
  p.fitted_exponent = p.fit.exponent;
  p.claimed_dimension = 4.0 * r + 2.0;
  return p;
}

std::vector<double> torus_cb_t_grid() { return half_dyadic_grid(40, 10); }

DimensionFit torus_cb_dimension(const TorusFourierModel& fourier, const std::vector<double>& t_grid,
                                std::optional<FitWindow> window) {
  if (t_grid.empty()) throw WindowError("torus_cb_dimension: empty t grid");
  const double t_min = *std::min_element(t_grid.begin(), t_grid.end());
  const FitWindow w = window.value_or(FitWindow{t_min, std::min(1.0, 1.0 / (8.0 * TorusFourierModel::rate))});
  std::vector<Sample> samples;
  for (double t : t_grid) samples.push_back(Sample{t, torus_fourier_heat_sup(fourier, t)});
  DimensionFit fit = fit_exponent(std::move(samples), w);
  fit.quantity = "torus_cb";
  fit.dimension = 2.0 * fit.exponent;
  fit.diagnostics["cutoff"] = fourier.cutoff;
  return fit;
}

}  // namespace heatdim
