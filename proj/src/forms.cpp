#include "heatdim/forms.hpp"

#include "heatdim/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace heatdim {

// ---------------------------------------------------------------------------
// WeightedGraph

WeightedGraph::WeightedGraph(Index vertex_count, std::vector<Edge> edges)
    : n_(vertex_count), edges_(std::move(edges)) {
  if (n_ <= 0) throw ValidationError("graph must have at least one vertex");
  for (auto& e : edges_) {
    if (e.u < 0 || e.v < 0 || e.u >= n_ || e.v >= n_) {
      throw ValidationError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") has an endpoint outside 0.." + std::to_string(n_ - 1));
    }
    if (e.u == e.v) throw ValidationError("self-loop at vertex " + std::to_string(e.u));
    if (!(std::isfinite(e.w) && e.w > 0.0)) {
      throw ValidationError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") has non-positive weight " + std::to_string(e.w));
    }
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].u == edges_[i - 1].u && edges_[i].v == edges_[i - 1].v) {
      throw ValidationError("duplicate edge (" + std::to_string(edges_[i].u) + ", " +
                            std::to_string(edges_[i].v) + ")");
    }
  }
}

Matrix WeightedGraph::laplacian() const {
  Matrix l = Matrix::Zero(n_, n_);
  for (const auto& e : edges_) {
    l(e.u, e.u) += e.w;
    l(e.v, e.v) += e.w;
    l(e.u, e.v) -= e.w;
    l(e.v, e.u) -= e.w;
  }
  return l;
}

std::vector<Index> WeightedGraph::components() const {
  std::vector<Index> parent(static_cast<std::size_t>(n_));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };
  for (const auto& e : edges_) {
    const Index a = find(e.u);
    const Index b = find(e.v);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::vector<Index> label(static_cast<std::size_t>(n_));
  for (Index x = 0; x < n_; ++x) label[static_cast<std::size_t>(x)] = find(x);
  return label;
}

Index WeightedGraph::component_count() const {
  const auto label = components();
  Index count = 0;
  for (Index x = 0; x < n_; ++x) count += label[static_cast<std::size_t>(x)] == x ? 1 : 0;
  return count;
}

// ---------------------------------------------------------------------------
// FiniteModel

struct FiniteModel::SpectrumCache {
  std::once_flag once;
  SpectralData data;
};

namespace {

SymMatrix orthonormal_generator(const FiniteMeasureSpace& space, const WeightedGraph& graph) {
  const Vector inv_root = space.weights().cwiseSqrt().cwiseInverse();
  Matrix l = graph.laplacian();
  return SymMatrix(inv_root.asDiagonal() * l * inv_root.asDiagonal());
}

}  // namespace

FiniteModel::FiniteModel(std::string label, FiniteMeasureSpace space, WeightedGraph graph,
                         std::vector<Point2> geometry)
    : label_(std::move(label)),
      space_(std::move(space)),
      graph_(std::move(graph)),
      geometry_(std::move(geometry)),
      sym_generator_(orthonormal_generator(space_, graph_)),
      cache_(std::make_shared<SpectrumCache>()) {
  if (space_.size() != graph_.vertex_count()) {
    throw ValidationError("measure has " + std::to_string(space_.size()) + " atoms but graph has " +
                          std::to_string(graph_.vertex_count()) + " vertices");
  }
  if (!geometry_.empty() && static_cast<Index>(geometry_.size()) != size()) {
    throw ValidationError("geometry size does not match vertex count");
  }
  const double dev = structural_deviation(*this);
  if (dev > 1e-12) {
    throw ValidationError("generator violates structural invariants (deviation " + std::to_string(dev) + ")");
  }
}

Matrix FiniteModel::generator() const {
  return space_.weights().cwiseInverse().asDiagonal() * graph_.laplacian();
}

const SpectralData& FiniteModel::spectrum() const {
  std::call_once(cache_->once, [this] {
    // Tightest Jacobi tolerance: kernel eigenvectors carry errors of order tol·‖A‖ / gap.
    SpectralData s = sym_eig(sym_generator_, 1e-14);
    const double scale = std::max(1.0, s.max_abs_eigenvalue());
    if (s.eigenvalues.size() > 0 && s.eigenvalues(0) < -1e-9 * scale) {
      throw ValidationError("generator of '" + label_ + "' is not positive semidefinite");
    }
    cache_->data = std::move(s);
  });
  return cache_->data;
}

Matrix FiniteModel::eigenfunctions() const {
  return space_.weights().cwiseSqrt().cwiseInverse().asDiagonal() * spectrum().eigenvectors;
}

double structural_deviation(const FiniteModel& model) {
  const Matrix a = model.generator();
  const Vector& mu = model.space().weights();
  const double scale = std::max(1.0, max_abs(a));
  const Matrix weighted = mu.asDiagonal() * a;
  const double sym = max_abs(weighted - weighted.transpose()) / std::max(1.0, max_abs(weighted));
  const double rows = (a * Vector::Ones(model.size())).cwiseAbs().maxCoeff() / scale;
  return std::max(sym, rows);
}

// ---------------------------------------------------------------------------
// Builders

FiniteModel model_from_graph(std::string label, WeightedGraph graph) {
  const Index n = graph.vertex_count();
  return FiniteModel(std::move(label), FiniteMeasureSpace::uniform(n), std::move(graph));
}

FiniteModel model_from_graph(std::string label, WeightedGraph graph, FiniteMeasureSpace space) {
  return FiniteModel(std::move(label), std::move(space), std::move(graph));
}

namespace {

constexpr Index kMaxVertices = 5000;

std::string format_label(const std::string& name, std::initializer_list<std::pair<const char*, double>> params) {
  std::ostringstream os;
  os << name << '(';
  bool first = true;
  for (const auto& [key, value] : params) {
    os << (first ? "" : ", ") << key << '=' << value;
    first = false;
  }
  os << ')';
  return os.str();
}

}  // namespace

FiniteModel build_torus_lattice(int d, int n) {
  if (d < 1 || d > 3) throw SizeError("torus dimension must be 1, 2 or 3");
  if (n < 3) throw SizeError("torus side must be >= 3");
  Index count = 1;
  for (int i = 0; i < d; ++i) {
    count *= n;
    if (count > kMaxVertices) {
      throw SizeError("torus lattice has more than " + std::to_string(kMaxVertices) + " vertices");
    }
  }
  const double mu = 1.0 / static_cast<double>(count);
  const double w = static_cast<double>(n) * static_cast<double>(n) * mu;

  std::vector<Edge> edges;
  std::vector<Point2> geometry;
  edges.reserve(static_cast<std::size_t>(count * d));
  for (Index x = 0; x < count; ++x) {
    Index stride = 1;
    Index rest = x;
    Point2 p{0.0, 0.0};
    for (int axis = 0; axis < d; ++axis) {
      const Index coord = rest % n;
      rest /= n;
      if (axis < 2) p[static_cast<std::size_t>(axis)] = static_cast<double>(coord) / n;
      const Index y = x + ((coord + 1) % n - coord) * stride;
      edges.push_back(Edge{x, y, w});
      stride *= n;
    }
    geometry.push_back(p);
  }
  return FiniteModel(format_label("torus", {{"d", d}, {"N", n}}), FiniteMeasureSpace::uniform(count),
                     WeightedGraph(count, std::move(edges)), std::move(geometry));
}

FiniteModel build_elliptic_grid(int n, std::span<const double> coeffs, double delta, double gamma) {
  if (n < 3) throw SizeError("elliptic grid side must be >= 3");
  if (n > kMaxVertices) throw SizeError("elliptic grid has more than 5000 vertices");
  if (!(delta > 0.0 && delta <= gamma)) throw CoeffError("ellipticity bounds need 0 < delta <= gamma");
  if (static_cast<int>(coeffs.size()) != n) {
    throw CoeffError("expected " + std::to_string(n) + " edge coefficients, got " + std::to_string(coeffs.size()));
  }
  std::vector<Edge> edges;
  std::vector<Point2> geometry;
  for (int i = 0; i < n; ++i) {
    const double a = coeffs[static_cast<std::size_t>(i)];
    if (!(a >= delta && a <= gamma)) {
      throw CoeffError("coefficient " + std::to_string(a) + " of edge " + std::to_string(i) + " outside [" +
                       std::to_string(delta) + ", " + std::to_string(gamma) + "]");
    }
    edges.push_back(Edge{i, (i + 1) % n, static_cast<double>(n) * a});
    geometry.push_back(Point2{static_cast<double>(i) / n, 0.0});
  }
  return FiniteModel(format_label("elliptic", {{"N", n}, {"delta", delta}, {"gamma", gamma}}),
                     FiniteMeasureSpace::uniform(n), WeightedGraph(n, std::move(edges)), std::move(geometry));
}

Index sierpinski_vertex_count(int m) {
  Index p = 1;
  for (int i = 0; i <= m; ++i) p *= 3;
  return (p + 3) / 2;
}

FiniteModel build_sierpinski(int m, GasketMeasure /*measure*/) {
  if (m < 1 || m > 7) throw SizeError("gasket level must lie in [1, 7]");
  // Integer coordinates (i, j) in the basis (1, 0), (1/2, √3/2), scaled by 2^m.
  using Corner = std::array<long, 2>;
  using Cell = std::array<Corner, 3>;
  const long side = 1L << m;
  std::vector<Cell> cells{Cell{Corner{0, 0}, Corner{side, 0}, Corner{0, side}}};
  for (int level = 0; level < m; ++level) {
    std::vector<Cell> next;
    next.reserve(cells.size() * 3);
    for (const auto& c : cells) {
      auto mid = [](const Corner& a, const Corner& b) { return Corner{(a[0] + b[0]) / 2, (a[1] + b[1]) / 2}; };
      // F_i contracts the cell toward its i-th corner.
      for (int i = 0; i < 3; ++i) {
        Cell sub;
        for (int k = 0; k < 3; ++k) sub[static_cast<std::size_t>(k)] = mid(c[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(k)]);
        next.push_back(sub);
      }
    }
    cells = std::move(next);
  }

  // Number vertices row by row (j, then i).
  std::map<std::pair<long, long>, Index> index;
  for (const auto& c : cells) {
    for (const auto& p : c) index.emplace(std::pair{p[1], p[0]}, 0);
  }
  Index next_id = 0;
  std::vector<Point2> geometry;
  const double scale = static_cast<double>(side);
  for (auto& [key, id] : index) {
    id = next_id++;
    const double i = static_cast<double>(key.second);
    const double j = static_cast<double>(key.first);
    geometry.push_back(Point2{(i + 0.5 * j) / scale, 0.5 * std::sqrt(3.0) * j / scale});
  }

  const double w = std::pow(5.0 / 3.0, m);
  std::vector<Edge> edges;
  for (const auto& c : cells) {
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        const Index u = index.at({c[static_cast<std::size_t>(a)][1], c[static_cast<std::size_t>(a)][0]});
        const Index v = index.at({c[static_cast<std::size_t>(b)][1], c[static_cast<std::size_t>(b)][0]});
        edges.push_back(Edge{u, v, w});
      }
    }
  }
  const Index n = next_id;
  return FiniteModel(format_label("sierpinski", {{"m", m}}), FiniteMeasureSpace::uniform(n),
                     WeightedGraph(n, std::move(edges)), std::move(geometry));
}

// ---------------------------------------------------------------------------
// Graph files

namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && !(line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view token, const std::string& source, int line, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(source, line, std::string("invalid ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

FiniteModel parse_graph(std::istream& in, const std::string& source) {
  std::string raw;
  int line_no = 0;
  bool have_header = false;
  Index n = 0;
  Index declared_edges = 0;
  std::vector<Edge> edges;
  std::vector<double> measure;
  std::vector<bool> measured;
  std::map<std::pair<Index, Index>, int> seen;
  Index measure_lines = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_tokens(line);
    if (tok.empty()) continue;

    if (!have_header) {
      if (tok[0] != "graph" || tok.size() != 3) throw ParseError(source, line_no, "expected 'graph <n> <e>' header");
      n = parse_number<Index>(tok[1], source, line_no, "vertex count");
      declared_edges = parse_number<Index>(tok[2], source, line_no, "edge count");
      if (n <= 0 || n > kMaxVertices) throw ParseError(source, line_no, "vertex count must lie in [1, 5000]");
      if (declared_edges < 0) throw ParseError(source, line_no, "edge count must be >= 0");
      measure.assign(static_cast<std::size_t>(n), 0.0);
      measured.assign(static_cast<std::size_t>(n), false);
      have_header = true;
      continue;
    }

    auto vertex = [&](std::string_view t) {
      const auto x = parse_number<Index>(t, source, line_no, "vertex");
      if (x < 0 || x >= n) throw ParseError(source, line_no, "vertex " + std::string(t) + " out of range");
      return x;
    };

    if (tok[0] == "measure") {
      if (tok.size() != 3) throw ParseError(source, line_no, "expected 'measure <x> <mu>'");
      const Index x = vertex(tok[1]);
      const double mu = parse_number<double>(tok[2], source, line_no, "measure value");
      if (measured[static_cast<std::size_t>(x)]) throw ParseError(source, line_no, "measure of vertex given twice");
      if (!(std::isfinite(mu) && mu > 0.0)) {
        throw ValidationError(source + ":" + std::to_string(line_no) + ": measure must be finite and > 0");
      }
      measure[static_cast<std::size_t>(x)] = mu;
      measured[static_cast<std::size_t>(x)] = true;
      ++measure_lines;
    } else if (tok[0] == "edge") {
      if (tok.size() != 4) throw ParseError(source, line_no, "expected 'edge <u> <v> <w>'");
      const Index u = vertex(tok[1]);
      const Index v = vertex(tok[2]);
      const double w = parse_number<double>(tok[3], source, line_no, "weight");
      const std::string where = source + ":" + std::to_string(line_no) + ": ";
      if (u == v) throw ValidationError(where + "self-loop");
      if (!(std::isfinite(w) && w > 0.0)) throw ValidationError(where + "edge weight must be finite and > 0");
      const auto key = std::pair{std::min(u, v), std::max(u, v)};
      if (const auto it = seen.find(key); it != seen.end()) {
        throw ValidationError(where + "duplicate edge, first given on line " + std::to_string(it->second));
      }
      seen.emplace(key, line_no);
      edges.push_back(Edge{u, v, w});
    } else {
      throw ParseError(source, line_no, "unknown record '" + std::string(tok[0]) + "'");
    }
  }
  if (!have_header) throw ParseError(source, line_no, "missing 'graph <n> <e>' header");
  if (static_cast<Index>(edges.size()) != declared_edges) {
    throw ParseError(source, line_no, "header declares " + std::to_string(declared_edges) + " edges, found " +
                                          std::to_string(edges.size()));
  }
  if (measure_lines != 0 && measure_lines != n) {
    throw ValidationError(source + ": measure given for " + std::to_string(measure_lines) + " of " +
                          std::to_string(n) + " vertices (give all or none)");
  }
  FiniteMeasureSpace space = measure_lines == 0
                                 ? FiniteMeasureSpace::uniform(n)
                                 : FiniteMeasureSpace(Eigen::Map<const Vector>(measure.data(), n));
  return FiniteModel("file(" + source + ")", std::move(space), WeightedGraph(n, std::move(edges)));
}

FiniteModel build_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open graph file " + path.string());
  return parse_graph(in, path.string());
}

void write_graph(std::ostream& out, const FiniteModel& model) {
  const auto& g = model.graph();
  out << "graph " << g.vertex_count() << ' ' << g.edge_count() << '\n';
  out << std::setprecision(17);
  for (Index x = 0; x < model.size(); ++x) out << "measure " << x << ' ' << model.space().weight(x) << '\n';
  for (const auto& e : g.edges()) out << "edge " << e.u << ' ' << e.v << ' ' << e.w << '\n';
}

// ---------------------------------------------------------------------------
// Energies

double dirichlet_energy(const FiniteModel& model, const Vector& f, const Vector& g) {
  if (f.size() != model.size() || g.size() != model.size()) {
    throw DomainError("dirichlet_energy: vector length does not match the model");
  }
  return model.space().inner(model.generator() * f, g);
}

double edge_energy(const WeightedGraph& graph, const Vector& f, const Vector& g) {
  double sum = 0.0;
  for (const auto& e : graph.edges()) sum += e.w * (f(e.u) - f(e.v)) * (g(e.u) - g(e.v));
  return sum;
}

// ---------------------------------------------------------------------------
// Fourier torus

double TorusFourierModel::eigenvalue(std::span<const int> frequency) const {
  double sq = 0.0;
  for (int m : frequency) sq += static_cast<double>(m) * m;
  return rate * sq;
}

int default_fourier_cutoff(double t_min) {
  if (!(t_min > 0.0)) throw DomainError("fourier cutoff needs t_min > 0");
  return static_cast<int>(std::ceil(std::sqrt(40.0 / (TorusFourierModel::rate * t_min))));
}

double torus_fourier_heat_sup(const TorusFourierModel& model, double t) {
  if (!(t > 0.0)) throw DomainError("torus_fourier_heat_sup: t must be > 0");
  if (model.dim < 1 || model.cutoff < 1) throw DomainError("torus model needs dim >= 1 and cutoff >= 1");
  const double m = static_cast<double>(model.cutoff);
  const double tail = std::exp(-TorusFourierModel::rate * t * m * m);
  if (tail >= 1e-15) {
    throw CutoffError("cutoff " + std::to_string(model.cutoff) + " too small at t = " + std::to_string(t) +
                      " (tail " + std::to_string(tail) + ")");
  }
  // Ascending |k| order keeps the summation deterministic.
  double one_dim = 1.0;
  for (int k = 1; k <= model.cutoff; ++k) {
    one_dim += 2.0 * std::exp(-TorusFourierModel::rate * t * static_cast<double>(k) * k);
  }
  return std::pow(one_dim, model.dim);
}

}  // namespace heatdim
