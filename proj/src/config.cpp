#include "heatdim/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace heatdim {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Items separated by commas and/or whitespace.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Ctx {
  const std::string& source;
  int line;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source, line, what); }

  template <typename T>
  T number(const std::string& token, const char* what) const {
    T value{};
    const char* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end) fail(std::string("invalid ") + what + " '" + token + "'");
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(value)) fail(std::string("non-finite ") + what + " '" + token + "'");
    }
    return value;
  }

  bool boolean(const std::string& token) const {
    if (token == "true" || token == "yes" || token == "1") return true;
    if (token == "false" || token == "no" || token == "0") return false;
    fail("expected true or false, got '" + token + "'");
  }
};

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"", {"seed", "output"}},
      {"model", {"builder", "d", "N", "m", "delta", "gamma", "coeffs", "path"}},
      {"grid", {"t", "restricted"}},
      {"estimators", {"run"}},
      {"gates", {"run", "theorem_slack", "two_sided_slack"}},
      {"zeta", {"levels", "alpha_min", "alpha_max", "alpha_step", "epsilon"}},
      {"connes", {"pairs", "tol"}},
      {"rapid_decay", {"k", "r"}},
      {"torus_cb", {"d"}},
  };
  return keys;
}

const std::set<std::string> kEstimators{"cv", "heat_trace", "weyl", "zeta", "connes", "rapid_decay", "torus_cb"};
const std::set<std::string> kGates{"theorem", "two_sided", "identities"};
const std::set<std::string> kModelEstimators{"cv", "heat_trace", "weyl", "zeta", "connes"};

// Keys that belong to each builder; everything else in [model] is rejected.
const std::map<std::string, std::set<std::string>> kBuilderKeys{
    {"torus", {"builder", "d", "N"}},
    {"elliptic", {"builder", "N", "delta", "gamma", "coeffs"}},
    {"sierpinski", {"builder", "m"}},
    {"file", {"builder", "path"}},
};

void check_model(ModelSpec& spec, const std::map<std::string, int>& lines, const std::string& source,
                 const std::filesystem::path& base) {
  const int builder_line = lines.count("builder") ? lines.at("builder") : 0;
  auto at = [&](const std::string& key) { return lines.count(key) ? lines.at(key) : builder_line; };
  const auto allowed = kBuilderKeys.find(spec.builder);
  if (allowed == kBuilderKeys.end()) {
    throw ParseError(source, builder_line,
                     "unknown builder '" + spec.builder + "' (expected torus, elliptic, sierpinski or file)");
  }
  for (const auto& [key, line] : lines) {
    if (!allowed->second.count(key)) {
      throw ParseError(source, line, "key '" + key + "' does not apply to builder '" + spec.builder + "'");
    }
  }
  auto require = [&](const std::string& key) {
    if (!lines.count(key)) throw ParseError(source, builder_line, "builder '" + spec.builder + "' needs key '" + key + "'");
  };
  if (spec.builder == "torus") {
    require("d");
    require("N");
    if (spec.d < 1 || spec.d > 3) throw ParseError(source, at("d"), "torus dimension must be 1, 2 or 3");
    if (spec.n < 3) throw ParseError(source, at("N"), "torus side must be >= 3");
    if (std::pow(static_cast<double>(spec.n), spec.d) > 5000.0) {
      throw ParseError(source, at("N"), "torus lattice would exceed 5000 vertices");
    }
  } else if (spec.builder == "elliptic") {
    require("N");
    if (spec.n < 3 || spec.n > 5000) throw ParseError(source, at("N"), "elliptic grid side must lie in [3, 5000]");
    if (!(spec.delta > 0.0 && spec.delta <= spec.gamma)) {
      throw ParseError(source, at("delta"), "ellipticity bounds need 0 < delta <= gamma");
    }
    const auto words = split_list(spec.coeffs);
    const bool random = words.size() == 1 && words[0] == "random";
    const bool constant = words.size() == 2 && words[0] == "constant";
    if (!random && !constant) throw ParseError(source, at("coeffs"), "coeffs must be 'random' or 'constant <a>'");
    if (constant) {
      const double a = Ctx{source, at("coeffs")}.number<double>(words[1], "coefficient");
      if (a < spec.delta || a > spec.gamma) {
        throw ParseError(source, at("coeffs"), "constant coefficient outside [delta, gamma]");
      }
    }
  } else if (spec.builder == "sierpinski") {
    require("m");
    if (spec.m < 1 || spec.m > 7) throw ParseError(source, at("m"), "gasket level must lie in [1, 7]");
  } else {
    require("path");
    if (spec.path.is_relative()) spec.path = base / spec.path;
  }
}

}  // namespace

std::vector<double> GridSpec::times() const {
  if (kind == "list") return values;
  if (kind == "dyadic") return dyadic_grid(depth);
  return half_dyadic_grid(depth);
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig cfg;
  cfg.source = source;
  const std::filesystem::path base = std::filesystem::path(source).parent_path();

  std::string section;
  std::set<std::string> seen;
  std::set<std::string> sections_seen;
  std::map<std::string, int> model_lines;
  int estimators_line = 0;
  int gates_line = 0;
  int connes_line = 0;
  int zeta_line = 0;
  ModelSpec model;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const Ctx ctx{source, line_no};
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') ctx.fail("unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!known_keys().count(section) || section.empty()) ctx.fail("unknown section [" + section + "]");
      if (!sections_seen.insert(section).second) ctx.fail("section [" + section + "] given twice");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) ctx.fail("expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) ctx.fail("missing key before '='");
    if (value.empty()) ctx.fail("missing value for '" + key + "'");
    if (!known_keys().at(section).count(key)) {
      ctx.fail("unknown key '" + key + "'" + (section.empty() ? std::string() : " in [" + section + "]"));
    }
    const std::string qualified = section.empty() ? key : section + "." + key;
    if (!seen.insert(qualified).second) ctx.fail("key '" + qualified + "' given twice");
    cfg.echo.emplace_back(qualified, value);

    if (section.empty()) {
      if (key == "seed") cfg.seed = ctx.number<std::uint64_t>(value, "seed");
      if (key == "output") cfg.output = value;
    } else if (section == "model") {
      model_lines[key] = line_no;
      if (key == "builder") model.builder = value;
      if (key == "d") model.d = ctx.number<int>(value, "dimension");
      if (key == "N") model.n = ctx.number<int>(value, "side length");
      if (key == "m") model.m = ctx.number<int>(value, "level");
      if (key == "delta") model.delta = ctx.number<double>(value, "delta");
      if (key == "gamma") model.gamma = ctx.number<double>(value, "gamma");
      if (key == "coeffs") model.coeffs = value;
      if (key == "path") model.path = value;
    } else if (section == "grid") {
      if (key == "restricted") cfg.restricted = ctx.boolean(value);
      if (key == "t") {
        const auto words = split_list(value);
        GridSpec g;
        g.kind = words[0];
        if (g.kind == "halfdyadic" || g.kind == "dyadic") {
          if (words.size() != 2) ctx.fail("expected '" + g.kind + " <depth>'");
          g.depth = ctx.number<int>(words[1], "grid depth");
          if (g.depth < 3 || g.depth > 200) ctx.fail("grid depth must lie in [3, 200]");
        } else if (g.kind == "list") {
          for (std::size_t i = 1; i < words.size(); ++i) {
            const double t = ctx.number<double>(words[i], "time");
            if (!(t > 0.0)) ctx.fail("grid times must be > 0");
            g.values.push_back(t);
          }
          if (g.values.size() < 4) ctx.fail("an explicit t list needs at least 4 values");
        } else {
          ctx.fail("unknown grid kind '" + g.kind + "' (expected halfdyadic, dyadic or list)");
        }
        cfg.grid = g;
      }
    } else if (section == "estimators") {
      estimators_line = line_no;
      for (const auto& e : split_list(value)) {
        if (!kEstimators.count(e)) ctx.fail("unknown estimator '" + e + "'");
        if (std::find(cfg.estimators.begin(), cfg.estimators.end(), e) != cfg.estimators.end()) {
          ctx.fail("estimator '" + e + "' listed twice");
        }
        cfg.estimators.push_back(e);
      }
    } else if (section == "gates") {
      if (key == "run") {
        gates_line = line_no;
        for (const auto& g : split_list(value)) {
          if (!kGates.count(g)) ctx.fail("unknown gate '" + g + "'");
          if (std::find(cfg.gates.begin(), cfg.gates.end(), g) != cfg.gates.end()) {
            ctx.fail("gate '" + g + "' listed twice");
          }
          cfg.gates.push_back(g);
        }
      }
      if (key == "theorem_slack") cfg.theorem_slack = ctx.number<double>(value, "slack");
      if (key == "two_sided_slack") cfg.two_sided_slack = ctx.number<double>(value, "slack");
      if (cfg.theorem_slack < 0.0 || cfg.two_sided_slack < 0.0) ctx.fail("slack must be >= 0");
    } else if (section == "zeta") {
      zeta_line = zeta_line ? zeta_line : line_no;
      if (key == "levels") {
        for (const auto& w : split_list(value)) cfg.zeta_levels.push_back(ctx.number<int>(w, "level"));
      }
      if (key == "alpha_min") cfg.alpha_min = ctx.number<double>(value, "alpha_min");
      if (key == "alpha_max") cfg.alpha_max = ctx.number<double>(value, "alpha_max");
      if (key == "alpha_step") cfg.alpha_step = ctx.number<double>(value, "alpha_step");
      if (key == "epsilon") cfg.zeta_epsilon = ctx.number<double>(value, "epsilon");
      if (!(cfg.alpha_step > 0.0)) ctx.fail("alpha_step must be > 0");
      if (!(cfg.zeta_epsilon > 0.0)) ctx.fail("epsilon must be > 0");
    } else if (section == "connes") {
      connes_line = connes_line ? connes_line : line_no;
      if (key == "tol") {
        cfg.connes_tol = ctx.number<double>(value, "tolerance");
        if (!(cfg.connes_tol > 0.0)) ctx.fail("tolerance must be > 0");
      }
      if (key == "pairs") {
        for (const auto& w : split_list(value)) {
          const auto dash = w.find('-');
          if (dash == std::string::npos) ctx.fail("expected vertex pair 'x-y', got '" + w + "'");
          const auto x = ctx.number<Index>(w.substr(0, dash), "vertex");
          const auto y = ctx.number<Index>(w.substr(dash + 1), "vertex");
          if (x < 0 || y < 0) ctx.fail("vertex indices must be >= 0");
          if (x == y) ctx.fail("pair '" + w + "' has equal endpoints");
          cfg.connes_pairs.emplace_back(x, y);
        }
      }
    } else if (section == "rapid_decay") {
      if (key == "k") {
        cfg.rapid_k = ctx.number<int>(value, "generator count");
        if (cfg.rapid_k < 1 || cfg.rapid_k > 16) ctx.fail("generator count must lie in [1, 16]");
      }
      if (key == "r") {
        cfg.rapid_r.clear();
        for (const auto& w : split_list(value)) {
          const int r = ctx.number<int>(w, "order");
          if (r < 1 || r > 8) ctx.fail("decay order must lie in [1, 8]");
          cfg.rapid_r.push_back(r);
        }
      }
    } else if (section == "torus_cb") {
      cfg.torus_cb_dims.clear();
      for (const auto& w : split_list(value)) {
        const int d = ctx.number<int>(w, "dimension");
        if (d < 1 || d > 6) ctx.fail("torus dimension must lie in [1, 6]");
        cfg.torus_cb_dims.push_back(d);
      }
    }
  }

  const auto listed = [&](const std::string& e) {
    return std::find(cfg.estimators.begin(), cfg.estimators.end(), e) != cfg.estimators.end();
  };
  const auto gated = [&](const std::string& g) {
    return std::find(cfg.gates.begin(), cfg.gates.end(), g) != cfg.gates.end();
  };

  if (!model_lines.empty()) {
    if (!model_lines.count("builder")) throw ParseError(source, model_lines.begin()->second, "[model] needs a builder");
    check_model(model, model_lines, source, base);
    cfg.model = model;
  }

  if (cfg.estimators.empty() && cfg.gates.empty()) {
    throw ConfigError(source + ": nothing to run (no estimators and no gates)");
  }
  for (const char* gate : {"theorem", "two_sided"}) {
    if (!gated(gate)) continue;
    for (const char* needed : {"cv", "heat_trace"}) {
      if (!listed(needed)) {
        throw ConfigError(source + ":" + std::to_string(gates_line) + ": gate '" + gate + "' needs estimator '" +
                          needed + "', which is not listed in [estimators] run");
      }
    }
  }
  const bool needs_model = gated("identities") || std::any_of(cfg.estimators.begin(), cfg.estimators.end(),
                                                             [](const std::string& e) { return kModelEstimators.count(e) > 0; });
  if (needs_model && !cfg.model) {
    throw ConfigError(source + ":" + std::to_string(gated("identities") ? gates_line : estimators_line) +
                      ": the requested estimators and gates need a [model] section");
  }
  if (listed("zeta")) {
    if (cfg.zeta_levels.size() < 3) {
      throw ConfigError(source + ":" + std::to_string(zeta_line ? zeta_line : estimators_line) +
                        ": estimator 'zeta' needs [zeta] levels with at least 3 entries");
    }
    if (cfg.model->builder == "file") {
      throw ConfigError(source + ": estimator 'zeta' needs a refinable builder (torus, elliptic or sierpinski)");
    }
    for (int level : cfg.zeta_levels) {
      ModelSpec probe = *cfg.model;
      (probe.builder == "sierpinski" ? probe.m : probe.n) = level;
      std::map<std::string, int> lines = model_lines;
      try {
        check_model(probe, lines, source, base);
      } catch (const ParseError& e) {
        throw ConfigError(source + ":" + std::to_string(zeta_line) + ": zeta level " + std::to_string(level) +
                          " is not a valid model size (" + e.what() + ")");
      }
    }
    if (!(cfg.alpha_min > 0.0 && cfg.alpha_min < cfg.alpha_max)) {
      throw ConfigError(source + ":" + std::to_string(zeta_line) + ": need 0 < alpha_min < alpha_max");
    }
  }
  if (listed("connes") && cfg.connes_pairs.empty()) {
    throw ConfigError(source + ":" + std::to_string(connes_line ? connes_line : estimators_line) +
                      ": estimator 'connes' needs [connes] pairs");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

}  // namespace heatdim
