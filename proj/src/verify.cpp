#include "heatdim/experiment.hpp"

#include "heatdim/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>

namespace heatdim {

namespace {

CheckRecord check(std::string name, double value, double threshold, std::string detail = {}) {
  return CheckRecord{std::move(name), value, threshold, value <= threshold, false, std::move(detail)};
}

CheckRecord skipped(std::string name, double threshold, std::string why) {
  return CheckRecord{std::move(name), 0.0, threshold, true, true, std::move(why)};
}

std::string t_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

}  // namespace

std::vector<CheckRecord> model_identity_checks(const FiniteModel& model, const std::string& prefix) {
  std::vector<CheckRecord> out;
  const std::string p = prefix + ".";
  const Index n = model.size();
  const Index edges = model.graph().edge_count();

  out.push_back(check(p + "structure", structural_deviation(model), 1e-12));

  if (n + edges <= kDenseDiracLimit) {
    const Derivation d = build_derivation(model);
    out.push_back(check(p + "factorization", factorization_deviation(d), 1e-10, "||d*d - A|| / max(1, ||A||)"));
    const HodgeDirac hd(d);
    out.push_back(check(p + "dirac_square", dirac_square_deviation(hd), 1e-12));
    const SusyReport susy = susy_pairing_check(d);
    CheckRecord c = check(p + "susy_pairing", susy.max_relative_deviation, 1e-9,
                          susy.multiplicities_match ? "multiplicities match" : "multiplicity mismatch");
    c.pass = c.pass && susy.pass;
    out.push_back(c);
  } else {
    const std::string why = "n + |E| = " + std::to_string(n + edges) + " above " + std::to_string(kDenseDiracLimit);
    out.push_back(skipped(p + "factorization", 1e-10, why));
    out.push_back(skipped(p + "dirac_square", 1e-12, why));
    out.push_back(skipped(p + "susy_pairing", 1e-9, why));
  }

  if (n > kDenseKernelLimit) {
    out.push_back(skipped(p + "heat_kernel", 1e-9, "n = " + std::to_string(n) + " above " +
                                                         std::to_string(kDenseKernelLimit)));
    out.push_back(skipped(p + "ergodic", 1e-9, "n above " + std::to_string(kDenseKernelLimit)));
    return out;
  }

  for (double t : {0.01, 0.1, 0.5, 1.0}) {
    const std::string at = " t=" + t_label(t);
    const KernelIdentities k = kernel_identities(model, t);
    out.push_back(check(p + "chapman_kolmogorov" + at, chapman_kolmogorov_check(model, t / 2, t / 2).relative(), 1e-9));
    out.push_back(check(p + "kernel_symmetry" + at, k.symmetry.relative(), 1e-9));
    out.push_back(check(p + "kernel_positivity" + at, k.negativity.relative(), 1e-9));
    out.push_back(check(p + "diagonal_dominance" + at, k.diagonal.relative(), 1e-9));
    out.push_back(check(p + "mass_conservation" + at, k.mass.relative(), 1e-9));
    out.push_back(check(p + "kernel_operator" + at, k.operator_match.relative(), 1e-9));
  }

  const ErgodicData erg = ergodic_data(model);
  const std::vector<double> grid = dyadic_grid(9);
  const ErgodicIdentities e = ergodic_identities(model, erg, grid);
  const double idem = e.idempotence;
  const double adj = e.self_adjointness;
  const double inv = std::max(e.left_invariance, e.right_invariance);
  out.push_back(check(p + "ergodic_idempotence", idem, 1e-9, "fix dim " + std::to_string(erg.fix_dim)));
  out.push_back(check(p + "ergodic_self_adjoint", adj, 1e-9));
  out.push_back(check(p + "ergodic_invariance", inv, 1e-9, "E T_t = T_t E = E"));
  const DecayReport decay = decay_check(model, grid);
  double worst = 0.0;
  for (const auto& s : decay.samples) worst = std::max(worst, s.norm / s.bound);
  CheckRecord dc = check(p + "spectral_gap_decay", worst, 1.0 + 1e-9, "max ||T_t(I-E)|| / e^{-wt}");
  dc.pass = dc.pass && decay.pass;
  out.push_back(dc);
  return out;
}

std::vector<CheckRecord> random_kernel_checks(std::uint64_t seed, int count) {
  SeededRng rng(seed);
  auto random_kernel = [&](Index n) {
    Vector mu(n);
    for (Index i = 0; i < n; ++i) mu(i) = rng.uniform(0.05, 1.0);
    Matrix k(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) k(i, j) = rng.normal();
    }
    return Kernel{FiniteMeasureSpace(mu), k};
  };
  double dp = 0.0;
  double hs = 0.0;
  for (int i = 0; i < count; ++i) dp = std::max(dp, dunford_pettis_check(random_kernel(8)).deviation());
  for (int i = 0; i < count; ++i) hs = std::max(hs, hilbert_schmidt_check(random_kernel(16)).deviation());
  const std::string what = std::to_string(count) + " random kernels";
  return {check("kernels.dunford_pettis", dp, 1e-12, what + ", 8x8"),
          check("kernels.hilbert_schmidt", hs, 1e-10, what + ", 16x16")};
}

namespace {

GateReport band_gate(const std::string& name, double value, double lo, double hi) {
  GateReport g;
  g.name = name;
  g.spectral = value;
  g.reference = 0.5 * (lo + hi);
  g.slack = 0.5 * (hi - lo);
  g.pass = value >= lo && value <= hi;
  g.detail = "band [" + t_label(lo) + ", " + t_label(hi) + "]";
  return g;
}

GateReport closeness_gate(const std::string& name, double value, double target, double tol, std::string detail) {
  GateReport g;
  g.name = name;
  g.spectral = value;
  g.reference = target;
  g.slack = tol;
  g.pass = std::abs(value - target) <= tol;
  g.detail = std::move(detail);
  return g;
}

struct DimensionRun {
  std::string name;
  DimensionFit cv;
  DimensionFit trace;
  std::optional<WeylResult> weyl;
};

DimensionRun dimension_run(std::string name, const FiniteModel& model, bool with_weyl) {
  const std::vector<double> grid = default_t_grid();
  DimensionRun run;
  run.name = name;
  run.cv = cv_local_dimension(model, grid);
  run.cv.quantity = name + ".cv";
  const std::vector<double> d2 = squared_dirac_spectrum(model);
  run.trace = heat_trace_dimension(d2, grid, true);
  run.trace.quantity = name + ".heat_trace";
  if (with_weyl) {
    run.weyl = weyl_counting(d2);
    run.weyl->fit.quantity = name + ".weyl";
  }
  return run;
}

}  // namespace

RunReport run_verify(std::uint64_t seed, const std::filesystem::path& data_dir) {
  RunReport report;
  report.seed = seed;
  report.config = {{"command", "verify"}, {"seed", std::to_string(seed)}};
  auto last = std::chrono::steady_clock::now();
  const auto mark = [&](const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    report.timings.emplace_back(stage, std::chrono::duration<double>(now - last).count());
    last = now;
  };

  // Dimension reproductions run concurrently; each stage is deterministic on its own.
  ModelSpec elliptic_spec;
  elliptic_spec.builder = "elliptic";
  elliptic_spec.n = 512;
  const FiniteModel torus1 = build_torus_lattice(1, 512);
  const FiniteModel torus2 = build_torus_lattice(2, 64);
  const FiniteModel elliptic = build_model(elliptic_spec, seed);
  const FiniteModel gasket6 = build_sierpinski(6);
  auto f_t1 = std::async(std::launch::async, [&] { return dimension_run("torus1_N512", torus1, false); });
  auto f_t2 = std::async(std::launch::async, [&] { return dimension_run("torus2_N64", torus2, true); });
  auto f_el = std::async(std::launch::async, [&] { return dimension_run("elliptic_N512", elliptic, false); });
  auto f_g6 = std::async(std::launch::async, [&] { return dimension_run("gasket_m6", gasket6, false); });

  // Exact identities on the fixtures.
  std::vector<std::pair<std::string, FiniteModel>> fixtures;
  for (const char* file : {"edge2", "p3", "c4", "two_c4", "gasket1"}) {
    fixtures.emplace_back(file, build_from_file(data_dir / "graphs" / (std::string(file) + ".graph")));
  }
  fixtures.emplace_back("torus1_N128", build_torus_lattice(1, 128));
  fixtures.emplace_back("torus2_N32", build_torus_lattice(2, 32));
  fixtures.emplace_back("gasket_m3", build_sierpinski(3));
  ModelSpec small_elliptic = elliptic_spec;
  small_elliptic.n = 64;
  fixtures.emplace_back("elliptic_N64", build_model(small_elliptic, seed));
  report.identities = random_kernel_checks(seed);
  for (const auto& [name, model] : fixtures) {
    const auto checks = model_identity_checks(model, name);
    report.identities.insert(report.identities.end(), checks.begin(), checks.end());
  }
  report.gates.push_back(identities_gate(report.identities));
  mark("identities");

  // Noncommutative torus through the Fourier model.
  const std::vector<double> cb_grid = torus_cb_t_grid();
  const int cutoff = default_fourier_cutoff(*std::min_element(cb_grid.begin(), cb_grid.end()));
  std::vector<DimensionFit> cb_fits;
  for (int d : {1, 2, 3}) {
    DimensionFit f = torus_cb_dimension(TorusFourierModel{d, cutoff}, cb_grid);
    f.quantity = "nc_torus_d" + std::to_string(d);
    report.gates.push_back(closeness_gate(f.quantity, f.dimension, d, 0.05, "cb dimension vs d"));
    cb_fits.push_back(f);
  }
  mark("nc_torus");

  // Rapid decay and sphere counts.
  for (int r : {1, 2}) {
    RapidDecayProfile p = rapid_decay_profile(2, r, rapid_decay_t_grid());
    p.fit.quantity = "rapid_decay_k2_r" + std::to_string(r);
    report.gates.push_back(closeness_gate(p.fit.quantity, p.fitted_exponent, 2 * r + 1, 0.05,
                                          "exponent of B(t)^2 vs 2r+1"));
    report.rapid_decay.push_back(p);
  }
  {
    bool match = true;
    for (int k : {2, 3}) {
      const auto bfs = sphere_counts_bfs(k, 8);
      for (int n = 0; n <= 8; ++n) match = match && bfs[static_cast<std::size_t>(n)] == sphere_count(k, n);
    }
    GateReport g;
    g.name = "sphere_counts";
    g.pass = match;
    g.spectral = match ? 1.0 : 0.0;
    g.reference = 1.0;
    g.detail = "closed form vs enumeration, F2 and F3, n <= 8";
    report.gates.push_back(g);
  }
  mark("rapid_decay");

  // Connes distance on the two-point and path fixtures against closed forms.
  {
    double worst = 0.0;
    std::string detail;
    const auto distance = [&](const FiniteModel& m, Index x, Index y) {
      const HodgeDirac hd(build_derivation(m));
      const ConnesResult c = connes_distance(hd, x, y, 1e-6);
      report.connes.push_back(ConnesRecord{x, y, c.distance, c.upper_bound, c.iterations});
      return c.distance;
    };
    const FiniteModel& edge2 = fixtures[0].second;
    const FiniteModel& p3 = fixtures[1].second;
    // Edge 0 -> 1: the commutator sees |∂f| / √μ_1.
    const double w = edge2.graph().edges()[0].w;
    const double two_point = std::sqrt(edge2.space().weight(1) / w);
    worst = std::max({worst, std::abs(distance(edge2, 0, 1) - two_point), std::abs(distance(edge2, 1, 0) - two_point)});
    const double root = std::sqrt(p3.space().weight(1));
    const double d01 = distance(p3, 0, 1);
    const double d12 = distance(p3, 1, 2);
    const double d02 = distance(p3, 0, 2);
    const double d20 = distance(p3, 2, 0);
    worst = std::max({worst, std::abs(d01 - root), std::abs(d12 - root), std::abs(d02 - 2 * root),
                      std::abs(d20 - d02), std::max(0.0, d02 - d01 - d12)});
    report.gates.push_back(closeness_gate("connes_distance", worst, 0.0, 1e-3,
                                          "max deviation from closed forms, symmetry and triangle inequality"));
  }
  mark("connes");

  // Zeta probe on the circle refinement sequence.
  {
    std::vector<std::vector<double>> spectra;
    for (int n : {64, 128, 256, 512}) spectra.push_back(squared_dirac_spectrum(build_torus_lattice(1, n)));
    std::vector<double> alphas;
    for (int i = 0; i <= 30; ++i) alphas.push_back(0.5 + 0.05 * i);
    report.zeta = zeta_probe(spectra, alphas, 0.05);
    GateReport g = band_gate("zeta_critical_alpha", report.zeta->found ? report.zeta->critical_alpha : 0.0, 0.8, 1.2);
    if (!report.zeta->found) g.pass = false;
    report.gates.push_back(g);
  }
  mark("zeta");

  const DimensionRun t1 = f_t1.get();
  const DimensionRun t2 = f_t2.get();
  const DimensionRun el = f_el.get();
  const DimensionRun g6 = f_g6.get();
  for (const auto* run : {&t1, &t2, &el, &g6}) {
    report.fits.push_back(run->cv);
    report.fits.push_back(run->trace);
  }
  report.fits.insert(report.fits.end(), cb_fits.begin(), cb_fits.end());
  report.weyl = t2.weyl;
  mark("dimensions (remaining wait)");

  report.gates.push_back(band_gate(t1.name + ".cv", t1.cv.dimension, 0.85, 1.15));
  report.gates.push_back(band_gate(t1.name + ".heat_trace", t1.trace.dimension, 0.85, 1.15));
  report.gates.push_back(band_gate(t2.name + ".cv", t2.cv.dimension, 1.8, 2.2));
  report.gates.push_back(band_gate(t2.name + ".heat_trace", t2.trace.dimension, 1.8, 2.2));
  report.gates.push_back(closeness_gate(t2.name + ".weyl", t2.weyl->fit.dimension, t2.trace.dimension, 0.15,
                                        "Weyl dimension vs heat-trace dimension"));
  report.gates.push_back(band_gate(el.name + ".cv", el.cv.dimension, 0.8, 1.2));
  report.gates.push_back(band_gate(g6.name + ".heat_trace", g6.trace.dimension, 1.245, 1.485));
  for (const auto* run : {&t1, &t2, &el, &g6}) {
    GateReport g = theorem_gate(run->trace, run->cv, 0.1);
    g.name = run->name + ".theorem";
    report.gates.push_back(g);
  }
  for (const auto* run : {&t1, &t2, &g6}) {
    GateReport g = two_sided_gate(run->trace, run->cv, 0.2);
    g.name = run->name + ".two_sided";
    report.gates.push_back(g);
  }
  return report;
}

}  // namespace heatdim
