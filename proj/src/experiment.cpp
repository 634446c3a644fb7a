#include "heatdim/experiment.hpp"

#include "heatdim/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace heatdim {

using json = nlohmann::ordered_json;

FiniteModel build_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.builder == "torus") return build_torus_lattice(spec.d, spec.n);
  if (spec.builder == "sierpinski") return build_sierpinski(spec.m);
  if (spec.builder == "file") return build_from_file(spec.path);
  if (spec.builder == "elliptic") {
    std::vector<double> coeffs(static_cast<std::size_t>(spec.n));
    std::istringstream words(spec.coeffs);
    std::string kind;
    words >> kind;
    if (kind == "constant") {
      double a = 0.0;
      words >> a;
      std::fill(coeffs.begin(), coeffs.end(), a);
    } else {
      SeededRng rng(seed);
      for (double& a : coeffs) a = rng.uniform(spec.delta, spec.gamma);
    }
    return build_elliptic_grid(spec.n, coeffs, spec.delta, spec.gamma);
  }
  throw ConfigError("unknown builder '" + spec.builder + "'");
}

bool RunReport::all_gates_pass() const {
  return std::all_of(gates.begin(), gates.end(), [](const GateReport& g) { return g.pass; });
}

const DimensionFit* RunReport::fit(const std::string& quantity) const {
  for (const auto& f : fits) {
    if (f.quantity == quantity) return &f;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json samples_json(const std::vector<Sample>& samples) {
  json out = json::array();
  for (const auto& s : samples) out.push_back(json::array({s.x, s.y}));
  return out;
}

std::vector<Sample> samples_from(const json& j) {
  std::vector<Sample> out;
  for (const auto& s : j) out.push_back(Sample{s.at(0).get<double>(), s.at(1).get<double>()});
  return out;
}

// JSON has no infinity; an unreachable pair is written as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_nullable(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json fit_json(const DimensionFit& f) {
  json diag = json::object();
  for (const auto& [k, v] : f.diagnostics) diag[k] = v;
  return json{{"quantity", f.quantity},   {"exponent", f.exponent},
              {"dimension", f.dimension}, {"intercept", f.intercept},
              {"window", {{"lo", f.window.lo}, {"hi", f.window.hi}}},
              {"residual", f.residual},   {"n_points", f.n_points},
              {"samples", samples_json(f.samples)}, {"diagnostics", diag}};
}

DimensionFit fit_from(const json& j) {
  DimensionFit f;
  f.quantity = j.at("quantity").get<std::string>();
  f.exponent = j.at("exponent").get<double>();
  f.dimension = j.at("dimension").get<double>();
  f.intercept = j.at("intercept").get<double>();
  f.window.lo = j.at("window").at("lo").get<double>();
  f.window.hi = j.at("window").at("hi").get<double>();
  f.residual = j.at("residual").get<double>();
  f.n_points = j.at("n_points").get<int>();
  f.samples = samples_from(j.at("samples"));
  for (const auto& [k, v] : j.at("diagnostics").items()) f.diagnostics[k] = v.get<double>();
  return f;
}

json matrix_json(const std::vector<std::vector<double>>& rows) {
  json out = json::array();
  for (const auto& r : rows) out.push_back(r);
  return out;
}

}  // namespace

json to_json(const RunReport& r) {
  json j;
  j["seed"] = r.seed;
  json cfg = json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  j["config"] = cfg;
  if (r.model) {
    j["model"] = {{"label", r.model->label},           {"vertices", r.model->vertices},
                  {"edges", r.model->edges},           {"kernel_dim", r.model->kernel_dim},
                  {"lambda_max", r.model->lambda_max}, {"gap", r.model->gap}};
  } else {
    j["model"] = nullptr;
  }
  j["fits"] = json::array();
  for (const auto& f : r.fits) j["fits"].push_back(fit_json(f));
  if (r.weyl) {
    j["weyl"] = {{"counts", samples_json(r.weyl->counts)}, {"fit", fit_json(r.weyl->fit)}};
  } else {
    j["weyl"] = nullptr;
  }
  if (r.zeta) {
    j["zeta"] = {{"alphas", r.zeta->alphas},
                 {"partial_sums", matrix_json(r.zeta->partial_sums)},
                 {"growth_ratios", matrix_json(r.zeta->growth_ratios)},
                 {"increment_ratios", matrix_json(r.zeta->increment_ratios)},
                 {"epsilon", r.zeta->epsilon},
                 {"found", r.zeta->found},
                 {"critical_alpha", r.zeta->critical_alpha}};
  } else {
    j["zeta"] = nullptr;
  }
  j["connes"] = json::array();
  for (const auto& c : r.connes) {
    j["connes"].push_back({{"x", c.x},
                           {"y", c.y},
                           {"distance", finite_or_null(c.distance)},
                           {"upper_bound", finite_or_null(c.upper_bound)},
                           {"iterations", c.iterations}});
  }
  j["rapid_decay"] = json::array();
  for (const auto& p : r.rapid_decay) {
    j["rapid_decay"].push_back({{"k", p.k},
                                {"r", p.r},
                                {"n_max", p.n_max},
                                {"sphere_counts", p.sphere_counts},
                                {"sphere_counts_bfs", p.sphere_counts_bfs},
                                {"bound_samples", samples_json(p.bound_samples)},
                                {"fit", fit_json(p.fit)},
                                {"fitted_exponent", p.fitted_exponent},
                                {"claimed_dimension", p.claimed_dimension}});
  }
  j["identities"] = json::array();
  for (const auto& c : r.identities) {
    j["identities"].push_back({{"name", c.name},
                               {"value", c.value},
                               {"threshold", c.threshold},
                               {"pass", c.pass},
                               {"skipped", c.skipped},
                               {"detail", c.detail}});
  }
  j["gates"] = json::array();
  for (const auto& g : r.gates) {
    j["gates"].push_back({{"name", g.name},
                          {"pass", g.pass},
                          {"spectral", g.spectral},
                          {"reference", g.reference},
                          {"slack", g.slack},
                          {"detail", g.detail}});
  }
  j["all_gates_pass"] = r.all_gates_pass();
  return j;
}

RunReport report_from_json(const json& j) {
  RunReport r;
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
  if (const auto& m = j.at("model"); !m.is_null()) {
    r.model = ModelSummary{m.at("label").get<std::string>(), m.at("vertices").get<Index>(),
                           m.at("edges").get<Index>(),       m.at("kernel_dim").get<Index>(),
                           m.at("lambda_max").get<double>(), m.at("gap").get<double>()};
  }
  for (const auto& f : j.at("fits")) r.fits.push_back(fit_from(f));
  if (const auto& w = j.at("weyl"); !w.is_null()) {
    r.weyl = WeylResult{samples_from(w.at("counts")), fit_from(w.at("fit"))};
  }
  if (const auto& z = j.at("zeta"); !z.is_null()) {
    ZetaReport zr;
    zr.alphas = z.at("alphas").get<std::vector<double>>();
    zr.partial_sums = z.at("partial_sums").get<std::vector<std::vector<double>>>();
    zr.growth_ratios = z.at("growth_ratios").get<std::vector<std::vector<double>>>();
    zr.increment_ratios = z.at("increment_ratios").get<std::vector<std::vector<double>>>();
    zr.epsilon = z.at("epsilon").get<double>();
    zr.found = z.at("found").get<bool>();
    zr.critical_alpha = z.at("critical_alpha").get<double>();
    r.zeta = zr;
  }
  for (const auto& c : j.at("connes")) {
    r.connes.push_back(ConnesRecord{c.at("x").get<Index>(), c.at("y").get<Index>(), from_nullable(c.at("distance")),
                                    from_nullable(c.at("upper_bound")), c.at("iterations").get<int>()});
  }
  for (const auto& p : j.at("rapid_decay")) {
    RapidDecayProfile rp;
    rp.k = p.at("k").get<int>();
    rp.r = p.at("r").get<int>();
    rp.n_max = p.at("n_max").get<long>();
    rp.sphere_counts = p.at("sphere_counts").get<std::vector<std::uint64_t>>();
    rp.sphere_counts_bfs = p.at("sphere_counts_bfs").get<std::vector<std::uint64_t>>();
    rp.bound_samples = samples_from(p.at("bound_samples"));
    rp.fit = fit_from(p.at("fit"));
    rp.fitted_exponent = p.at("fitted_exponent").get<double>();
    rp.claimed_dimension = p.at("claimed_dimension").get<double>();
    r.rapid_decay.push_back(rp);
  }
  for (const auto& c : j.at("identities")) {
    r.identities.push_back(CheckRecord{c.at("name").get<std::string>(), c.at("value").get<double>(),
                                       c.at("threshold").get<double>(), c.at("pass").get<bool>(),
                                       c.at("skipped").get<bool>(), c.at("detail").get<std::string>()});
  }
  for (const auto& g : j.at("gates")) {
    r.gates.push_back(GateReport{g.at("name").get<std::string>(), g.at("pass").get<bool>(),
                                 g.at("spectral").get<double>(), g.at("reference").get<double>(),
                                 g.at("slack").get<double>(), g.at("detail").get<std::string>()});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(RunReport& report) : report_(report) {}

  template <typename F>
  auto stage(const std::string& name, F&& body) -> decltype(body()) {
    const auto start = std::chrono::steady_clock::now();
    auto record = [&] {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      report_.timings.emplace_back(name, dt.count());
    };
    try {
      if constexpr (std::is_void_v<decltype(body())>) {
        body();
        record();
      } else {
        auto out = body();
        record();
        return out;
      }
    } catch (const NonConvergence& e) {
      throw NonConvergence("stage '" + name + "': " + e.what());
    } catch (const WindowError& e) {
      throw WindowError("stage '" + name + "': " + e.what());
    } catch (const CutoffError& e) {
      throw CutoffError("stage '" + name + "': " + e.what());
    } catch (const TailError& e) {
      throw TailError("stage '" + name + "': " + e.what());
    } catch (const InsufficientLevels& e) {
      throw InsufficientLevels("stage '" + name + "': " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("stage '" + name + "': " + e.what());
    }
  }

 private:
  RunReport& report_;
};

ModelSummary summarize(const FiniteModel& model) {
  const SpectralData& s = model.spectrum();
  const auto nonzero = s.nonzero_eigenvalues();
  return ModelSummary{model.label(), model.size(), model.graph().edge_count(), s.kernel_dim(),
                      s.max_abs_eigenvalue(), nonzero.empty() ? 0.0 : nonzero.front()};
}

std::vector<double> alpha_grid(double lo, double hi, double step) {
  const long count = std::lround(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (long i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

bool listed(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

GateReport identities_gate(const std::vector<CheckRecord>& checks) {
  GateReport g;
  g.name = "identities";
  g.pass = true;
  int failed = 0;
  int skipped = 0;
  for (const auto& c : checks) {
    if (c.skipped) ++skipped;
    if (!c.pass) {
      g.pass = false;
      ++failed;
      g.detail += (g.detail.empty() ? "failed: " : ", ") + c.name;
    }
  }
  g.spectral = static_cast<double>(failed);
  g.reference = static_cast<double>(checks.size());
  if (g.detail.empty()) g.detail = std::to_string(checks.size()) + " checks passed";
  if (skipped) g.detail += " (" + std::to_string(skipped) + " skipped for size)";
  return g;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  RunReport report;
  report.seed = cfg.seed;
  report.config = cfg.echo;
  Stopwatch clock(report);

  std::optional<FiniteModel> model;
  if (cfg.model) {
    model = clock.stage("build", [&] { return build_model(*cfg.model, cfg.seed); });
    clock.stage("spectrum", [&] { (void)model->spectrum(); });
    report.model = summarize(*model);
  }

  const auto& est = cfg.estimators;
  const std::vector<double> t_grid = cfg.grid.times();
  std::vector<double> d2;
  if (listed(est, "heat_trace") || listed(est, "weyl")) d2 = squared_dirac_spectrum(*model);

  if (listed(est, "cv")) {
    report.fits.push_back(clock.stage("cv", [&] { return cv_local_dimension(*model, t_grid); }));
  }
  if (listed(est, "heat_trace")) {
    report.fits.push_back(clock.stage("heat_trace", [&] {
      DimensionFit f = heat_trace_dimension(d2, t_grid, cfg.restricted);
      f.quantity = "heat_trace";
      return f;
    }));
  }
  if (listed(est, "weyl")) {
    report.weyl = clock.stage("weyl", [&] { return weyl_counting(d2); });
  }
  if (listed(est, "zeta")) {
    report.zeta = clock.stage("zeta", [&] {
      std::vector<std::vector<double>> spectra;
      for (int level : cfg.zeta_levels) {
        ModelSpec spec = *cfg.model;
        (spec.builder == "sierpinski" ? spec.m : spec.n) = level;
        spectra.push_back(squared_dirac_spectrum(build_model(spec, cfg.seed)));
      }
      return zeta_probe(spectra, alpha_grid(cfg.alpha_min, cfg.alpha_max, cfg.alpha_step), cfg.zeta_epsilon);
    });
  }
  if (listed(est, "connes")) {
    clock.stage("connes", [&] {
      if (model->size() + model->graph().edge_count() > kDenseDiracLimit) {
        throw SizeError("connes estimator: model too large for the dense Dirac operator (n + |E| > " +
                        std::to_string(kDenseDiracLimit) + ")");
      }
      const HodgeDirac hd(build_derivation(*model));
      for (const auto& [x, y] : cfg.connes_pairs) {
        if (x >= model->size() || y >= model->size()) {
          throw ConfigError(cfg.source + ": connes pair " + std::to_string(x) + "-" + std::to_string(y) +
                            " out of range for a model with " + std::to_string(model->size()) + " vertices");
        }
        const ConnesResult c = connes_distance(hd, x, y, cfg.connes_tol);
        report.connes.push_back(ConnesRecord{x, y, c.distance, c.upper_bound, c.iterations});
      }
    });
  }
  if (listed(est, "rapid_decay")) {
    clock.stage("rapid_decay", [&] {
      for (int r : cfg.rapid_r) report.rapid_decay.push_back(rapid_decay_profile(cfg.rapid_k, r, rapid_decay_t_grid()));
    });
  }
  if (listed(est, "torus_cb")) {
    clock.stage("torus_cb", [&] {
      const std::vector<double> grid = torus_cb_t_grid();
      const int cutoff = default_fourier_cutoff(*std::min_element(grid.begin(), grid.end()));
      for (int d : cfg.torus_cb_dims) {
        DimensionFit f = torus_cb_dimension(TorusFourierModel{d, cutoff}, grid);
        f.quantity = "torus_cb_d" + std::to_string(d);
        report.fits.push_back(f);
      }
    });
  }

  for (const auto& gate : cfg.gates) {
    if (gate == "theorem") {
      GateReport g = theorem_gate(*report.fit("heat_trace"), *report.fit("cv"), cfg.theorem_slack);
      report.gates.push_back(g);
    } else if (gate == "two_sided") {
      report.gates.push_back(two_sided_gate(*report.fit("heat_trace"), *report.fit("cv"), cfg.two_sided_slack));
    } else if (gate == "identities") {
      clock.stage("identities", [&] {
        report.identities = model_identity_checks(*model, "model");
        report.gates.push_back(identities_gate(report.identities));
      });
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string log_or_nan(double v) { return v > 0.0 ? num(std::log(v)) : std::string("nan"); }

std::string file_stem(const std::string& quantity) {
  std::string out;
  for (char c : quantity) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ? c : '_');
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text, std::vector<std::filesystem::path>& written) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw InputError("write to " + path.string() + " failed");
  written.push_back(path);
}

std::string seed_line(const RunReport& r) { return "# seed = " + std::to_string(r.seed) + "\n"; }

std::string rows_csv(const std::vector<Sample>& samples, const FitWindow& window, const char* x, const char* y) {
  std::string out = std::string(x) + "," + y + ",log_" + x + ",log_" + y + ",in_window\n";
  for (const auto& s : samples) {
    out += num(s.x) + "," + num(s.y) + "," + log_or_nan(s.x) + "," + log_or_nan(s.y) + "," +
           (window.contains(s.x) ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace

std::string fit_csv(const DimensionFit& fit) { return rows_csv(fit.samples, fit.window, "t", "value"); }

std::string summary_table(const RunReport& r) {
  std::ostringstream out;
  char line[512];
  out << "seed: " << r.seed << "\n";
  if (r.model) {
    out << "model: " << r.model->label << " (" << r.model->vertices << " vertices, " << r.model->edges
        << " edges, lambda_max " << num(r.model->lambda_max) << ", gap " << num(r.model->gap) << ")\n";
  }
  if (!r.fits.empty() || r.weyl) {
    std::snprintf(line, sizeof line, "\n%-28s %10s %10s %24s %10s %4s\n", "estimator", "exponent", "dimension",
                  "window", "residual", "n");
    out << line;
    auto row = [&](const DimensionFit& f) {
      std::snprintf(line, sizeof line, "%-28s %10.5f %10.5f [%10.3e, %10.3e] %10.2e %4d\n", f.quantity.c_str(),
                    f.exponent, f.dimension, f.window.lo, f.window.hi, f.residual, f.n_points);
      out << line;
    };
    for (const auto& f : r.fits) row(f);
    if (r.weyl) row(r.weyl->fit);
  }
  if (r.zeta) {
    out << "\nzeta: critical alpha "
        << (r.zeta->found ? num(r.zeta->critical_alpha) : std::string("not found")) << " (epsilon "
        << num(r.zeta->epsilon) << ")\n";
  }
  for (const auto& c : r.connes) {
    out << "connes d(" << c.x << ", " << c.y << ") = " << num(c.distance) << " (upper " << num(c.upper_bound)
        << ", " << c.iterations << " iterations)\n";
  }
  for (const auto& p : r.rapid_decay) {
    out << "rapid decay k=" << p.k << " r=" << p.r << ": B(t)^2 exponent " << num(p.fitted_exponent)
        << " (expected " << 2 * p.r + 1 << "), dimension " << num(p.claimed_dimension) << "\n";
  }
  if (!r.identities.empty()) {
    out << "\nidentities:\n";
    for (const auto& c : r.identities) {
      std::snprintf(line, sizeof line, "  %-4s %-44s %12.3e <= %9.1e %s\n",
                    c.skipped ? "SKIP" : (c.pass ? "PASS" : "FAIL"), c.name.c_str(), c.value, c.threshold,
                    c.detail.c_str());
      out << line;
    }
  }
  if (!r.gates.empty()) {
    out << "\ngates:\n";
    for (const auto& g : r.gates) {
      std::snprintf(line, sizeof line, "  %-4s %-28s value %9.5f reference %9.5f slack %6.3f  %s\n",
                    g.pass ? "PASS" : "FAIL", g.name.c_str(), g.spectral, g.reference, g.slack, g.detail.c_str());
      out << line;
    }
  }
  if (!r.timings.empty()) {
    out << "\ntimings (s):\n";
    for (const auto& [name, s] : r.timings) {
      std::snprintf(line, sizeof line, "  %-28s %9.3f\n", name.c_str(), s);
      out << line;
    }
  }
  out << "\nresult: " << (r.all_gates_pass() ? "all gates pass" : "gate failure") << "\n";
  return out.str();
}

std::vector<std::filesystem::path> write_report(const RunReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  write_file(dir / "report.json", to_json(r).dump(2) + "\n", written);
  for (const auto& f : r.fits) write_file(dir / (file_stem(f.quantity) + ".csv"), seed_line(r) + fit_csv(f), written);
  if (r.weyl) {
    write_file(dir / "weyl.csv", seed_line(r) + rows_csv(r.weyl->counts, r.weyl->fit.window, "lambda", "count"),
               written);
  }
  if (r.zeta) {
    std::string text = seed_line(r) + "alpha";
    const auto& z = *r.zeta;
    for (std::size_t m = 0; m < z.partial_sums.size(); ++m) text += ",Z_" + std::to_string(m);
    for (std::size_t m = 0; m < z.growth_ratios.size(); ++m) text += ",growth_" + std::to_string(m + 1);
    for (std::size_t m = 0; m < z.increment_ratios.size(); ++m) text += ",increment_" + std::to_string(m + 2);
    text += "\n";
    for (std::size_t a = 0; a < z.alphas.size(); ++a) {
      text += num(z.alphas[a]);
      for (const auto* table : {&z.partial_sums, &z.growth_ratios, &z.increment_ratios}) {
        for (const auto& row : *table) text += "," + num(row[a]);
      }
      text += "\n";
    }
    write_file(dir / "zeta.csv", text, written);
  }
  if (!r.connes.empty()) {
    std::string text = seed_line(r) + "x,y,distance,upper_bound,iterations\n";
    for (const auto& c : r.connes) {
      text += std::to_string(c.x) + "," + std::to_string(c.y) + "," + num(c.distance) + "," + num(c.upper_bound) +
              "," + std::to_string(c.iterations) + "\n";
    }
    write_file(dir / "connes.csv", text, written);
  }
  for (const auto& p : r.rapid_decay) {
    const std::string stem = "rapid_decay_k" + std::to_string(p.k) + "_r" + std::to_string(p.r);
    write_file(dir / (stem + ".csv"), seed_line(r) + fit_csv(p.fit), written);
    std::string text = seed_line(r) + "n,closed_form,bfs\n";
    for (std::size_t n = 0; n < p.sphere_counts.size(); ++n) {
      text += std::to_string(n) + "," + std::to_string(p.sphere_counts[n]) + "," +
              (n < p.sphere_counts_bfs.size() ? std::to_string(p.sphere_counts_bfs[n]) : std::string()) + "\n";
    }
    write_file(dir / (stem + "_spheres.csv"), text, written);
  }
  write_file(dir / "summary.txt", summary_table(r), written);
  return written;
}

}  // namespace heatdim
