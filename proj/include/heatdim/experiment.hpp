#pragma once

// Configuration-driven experiment runner: config grammar, the build → spectrum →
// estimators → gates pipeline, report files and the shipped verification suite.
// The config grammar and the output schemas are documented in docs/formats.md.

#include "heatdim/dims.hpp"
#include "heatdim/errors.hpp"
#include "heatdim/forms.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace heatdim {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

struct GridSpec {
  std::string kind = "halfdyadic";  // halfdyadic | dyadic | list
  int depth = 50;
  std::vector<double> values;

  std::vector<double> times() const;
};

struct ModelSpec {
  std::string builder;  // torus | elliptic | sierpinski | file
  int d = 1;
  int n = 0;
  int m = 0;
  double delta = 0.5;
  double gamma = 2.0;
  std::string coeffs = "random";  // random | constant <a>
  std::filesystem::path path;
};

struct ExperimentConfig {
  std::string source = "<config>";
  std::uint64_t seed = 0;
  std::string output;
  std::optional<ModelSpec> model;
  GridSpec grid;
  bool restricted = true;
  std::vector<std::string> estimators;
  std::vector<std::string> gates;
  double theorem_slack = 0.1;
  double two_sided_slack = 0.2;
  std::vector<int> zeta_levels;
  double alpha_min = 0.5;
  double alpha_max = 2.0;
  double alpha_step = 0.05;
  double zeta_epsilon = 0.05;
  std::vector<std::pair<Index, Index>> connes_pairs;
  double connes_tol = 1e-6;
  int rapid_k = 2;
  std::vector<int> rapid_r{1, 2};
  std::vector<int> torus_cb_dims{1, 2, 3};
  /// Every key = value pair in file order, as "section.key".
  std::vector<std::pair<std::string, std::string>> echo;
};

/// Throws ParseError (line-level) or ConfigError.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Model for the config (elliptic coefficients come from the seeded generator).
FiniteModel build_model(const ModelSpec& spec, std::uint64_t seed);

struct ModelSummary {
  std::string label;
  Index vertices = 0;
  Index edges = 0;
  Index kernel_dim = 0;
  double lambda_max = 0.0;
  double gap = 0.0;
};

struct CheckRecord {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool skipped = false;  // too large for the dense check; pass stays true
  std::string detail;
};

struct ConnesRecord {
  Index x = 0;
  Index y = 0;
  double distance = 0.0;
  double upper_bound = 0.0;
  int iterations = 0;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::optional<ModelSummary> model;
  std::vector<DimensionFit> fits;
  std::optional<WeylResult> weyl;
  std::optional<ZetaReport> zeta;
  std::vector<ConnesRecord> connes;
  std::vector<RapidDecayProfile> rapid_decay;
  std::vector<CheckRecord> identities;
  std::vector<GateReport> gates;
  /// Wall-clock seconds per stage. Reported in the summary only, so the JSON and CSV
  /// outputs stay byte-identical across runs.
  std::vector<std::pair<std::string, double>> timings;

  bool all_gates_pass() const;
  const DimensionFit* fit(const std::string& quantity) const;
};

nlohmann::ordered_json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::ordered_json& j);

RunReport run_experiment(const ExperimentConfig& config);

/// report.json, one CSV per estimator and summary.txt under dir (created if needed).
/// Returns the written paths. Throws InputError with the path on IO failure.
std::vector<std::filesystem::path> write_report(const RunReport& report, const std::filesystem::path& dir);
std::string summary_table(const RunReport& report);
/// Rows `t,value,log_t,log_value,in_window` (or `lambda,count,...` for Weyl).
std::string fit_csv(const DimensionFit& fit);

/// Models with n + |E| above this are not given a dense Dirac operator: the Connes
/// estimator refuses them and the D²/SUSY identity checks are skipped.
inline constexpr Index kDenseDiracLimit = 4096;
/// Heat-kernel and ergodic identity checks are skipped above this many vertices.
inline constexpr Index kDenseKernelLimit = 2048;

/// Exact finite identities of one model: structure, ∂*∂ = A, D² blocks, SUSY pairing,
/// heat-kernel identities at t ∈ {0.01, 0.1, 0.5, 1}, ergodic projection and decay on
/// a 10-point dyadic grid. Names are prefixed with `prefix`.
std::vector<CheckRecord> model_identity_checks(const FiniteModel& model, const std::string& prefix);
/// Dunford–Pettis (8×8) and Hilbert–Schmidt (16×16) identities on `count` random
/// kernels with random measures drawn from seed.
std::vector<CheckRecord> random_kernel_checks(std::uint64_t seed, int count = 50);
/// Passes iff every check passes.
GateReport identities_gate(const std::vector<CheckRecord>& checks);

/// Identity and gate suite over the shipped fixtures (graph files are read from
/// data_dir). Randomized fixtures derive from seed.
RunReport run_verify(std::uint64_t seed, const std::filesystem::path& data_dir);

}  // namespace heatdim
