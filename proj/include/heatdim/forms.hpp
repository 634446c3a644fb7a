#pragma once

// Finite Dirichlet-form models: weighted graphs, their generators against a finite
// measure, and the builders for torus lattices, elliptic grids, Sierpinski gasket
// approximations and graph files. Also the Fourier model of the (noncommutative)
// torus heat semigroup.

#include "heatdim/kernel_ops.hpp"
#include "heatdim/linalg.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace heatdim {

struct Edge {
  Index u = 0;
  Index v = 0;
  double w = 0.0;
};

/// Undirected graph with positive conductances. Edges are stored with u < v,
/// sorted by (u, v).
class WeightedGraph {
 public:
  /// Throws ValidationError on non-positive weights, self-loops, out-of-range
  /// endpoints or duplicate pairs.
  WeightedGraph(Index vertex_count, std::vector<Edge> edges);

  Index vertex_count() const noexcept { return n_; }
  Index edge_count() const noexcept { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Σ_e w_e (e_u − e_v)(e_u − e_v)ᵀ.
  Matrix laplacian() const;
  /// Component label per vertex, labels numbered by smallest member.
  std::vector<Index> components() const;
  Index component_count() const;

 private:
  Index n_ = 0;
  std::vector<Edge> edges_;
};

using Point2 = std::array<double, 2>;

/// Finite measure space + conductance graph. The generator A = M⁻¹ L (M = diag μ) is
/// self-adjoint on L²(μ); the model stores its orthonormal-atom form M^{-1/2} L M^{-1/2}
/// and caches one eigendecomposition of it (filled once, thread-safe).
class FiniteModel {
 public:
  FiniteModel(std::string label, FiniteMeasureSpace space, WeightedGraph graph,
              std::vector<Point2> geometry = {});

  const std::string& label() const noexcept { return label_; }
  const FiniteMeasureSpace& space() const noexcept { return space_; }
  const WeightedGraph& graph() const noexcept { return graph_; }
  const std::vector<Point2>& geometry() const noexcept { return geometry_; }
  Index size() const noexcept { return space_.size(); }

  /// Generator in function coordinates, (A f)(x) = μ_x⁻¹ Σ_y w_xy (f(x) − f(y)).
  Matrix generator() const;
  /// M^{1/2} A M^{-1/2}, symmetric.
  const SymMatrix& symmetric_generator() const noexcept { return sym_generator_; }

  /// Eigendecomposition of symmetric_generator(). The first call also checks that
  /// A is positive semidefinite (min eigenvalue >= −1e-9 ‖A‖) and throws
  /// ValidationError otherwise.
  const SpectralData& spectrum() const;
  /// φ_k = M^{-1/2} ψ_k; columns orthonormal in L²(μ).
  Matrix eigenfunctions() const;

 private:
  struct SpectrumCache;

  std::string label_;
  FiniteMeasureSpace space_;
  WeightedGraph graph_;
  std::vector<Point2> geometry_;
  SymMatrix sym_generator_;
  std::shared_ptr<SpectrumCache> cache_;
};

/// Structural invariants that do not need a spectrum: μ-symmetry and A·1 = 0.
/// Returns the worst relative deviation; builders reject anything above 1e-12.
double structural_deviation(const FiniteModel& model);

/// (Z_N)^d with nearest-neighbour conductances N^{2−d} against μ = N^{−d}, so that
/// (A f)(x) = N² Σ_{y~x} (f(x) − f(y)). Throws SizeError if N^d > 5000.
FiniteModel build_torus_lattice(int d, int n);

/// Circle Z_N with (A f)(x) = N² Σ_y a_xy (f(x) − f(y)); coeffs[i] belongs to the
/// edge (i, i+1 mod N). Throws CoeffError for coefficients outside [delta, gamma].
FiniteModel build_elliptic_grid(int n, std::span<const double> coeffs, double delta, double gamma);

enum class GasketMeasure { Uniform };

/// Level-m Sierpinski gasket graph V_m with conductances (5/3)^m on the sides of the
/// m-cells and normalized counting measure. Throws SizeError for m outside [1, 7].
FiniteModel build_sierpinski(int m, GasketMeasure measure = GasketMeasure::Uniform);

/// Number of vertices of V_m, (3^{m+1} + 3) / 2.
Index sierpinski_vertex_count(int m);

/// Graph file (see docs/formats.md). Throws ParseError / ValidationError.
FiniteModel parse_graph(std::istream& in, const std::string& source = "<stream>");
FiniteModel build_from_file(const std::filesystem::path& path);
/// Inverse of parse_graph, writes every measure line explicitly.
void write_graph(std::ostream& out, const FiniteModel& model);

/// Model on an explicit graph; the measure defaults to uniform with total 1.
FiniteModel model_from_graph(std::string label, WeightedGraph graph);
FiniteModel model_from_graph(std::string label, WeightedGraph graph, FiniteMeasureSpace space);

/// ⟨A f, g⟩_{L²(μ)} from the generator matrix.
double dirichlet_energy(const FiniteModel& model, const Vector& f, const Vector& g);
/// Σ_e w_e (f(u) − f(v)) (g(u) − g(v)).
double edge_energy(const WeightedGraph& graph, const Vector& f, const Vector& g);

/// Heat semigroup on the d-torus in Fourier form: the frequency m ∈ {−M..M}^d carries
/// the eigenvalue 4π²|m|². Through the intertwining with the classical torus, this is
/// also the model of the heat semigroup on the noncommutative torus.
struct TorusFourierModel {
  static constexpr double rate = 4.0 * std::numbers::pi * std::numbers::pi;

  int dim = 1;
  int cutoff = 1;

  double eigenvalue(std::span<const int> frequency) const;
};

/// Smallest M whose tail e^{−4π² t_min M²} is below e^{−40} across a run's t-grid.
int default_fourier_cutoff(double t_min);

/// ‖h_t‖_∞ = h_t(0) = (Σ_{k=−M..M} e^{−4π² t k²})^d. Every Fourier coefficient of h_t
/// is positive, so the supremum is attained at the identity. Throws CutoffError when
/// e^{−4π² t M²} >= 1e-15.
double torus_fourier_heat_sup(const TorusFourierModel& model, double t);

}  // namespace heatdim
