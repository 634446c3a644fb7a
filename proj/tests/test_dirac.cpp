#include "heatdim/dirac.hpp"
#include "heatdim/errors.hpp"
#include "heatdim/random.hpp"
#include "heatdim/semigroup.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace heatdim;

namespace {

const std::string kGraphs = std::string(HEATDIM_DATA_DIR) + "/graphs/";

FiniteModel single_edge() { return model_from_graph("edge", WeightedGraph(2, {{0, 1, 1.0}})); }

FiniteModel cycle(Index n, SeededRng& rng) {
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) edges.push_back(Edge{i, (i + 1) % n, rng.uniform(0.5, 2.0)});
  return model_from_graph("cycle", WeightedGraph(n, edges), FiniteMeasureSpace(oracle::random_measure(rng, n)));
}

// Random connected graph: a path plus some chords.
FiniteModel random_graph(Index n, int chords, SeededRng& rng) {
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.push_back(Edge{i, i + 1, rng.uniform(0.5, 2.0)});
  for (int c = 0; c < chords; ++c) {
    const Index u = static_cast<Index>(rng.next() % static_cast<std::uint64_t>(n - 2));
    const Index v = u + 2 + static_cast<Index>(rng.next() % static_cast<std::uint64_t>(n - u - 2));
    bool seen = false;
    for (const auto& e : edges) seen = seen || (e.u == u && e.v == v);
    if (!seen) edges.push_back(Edge{u, v, rng.uniform(0.5, 2.0)});
  }
  return model_from_graph("random", WeightedGraph(n, edges), FiniteMeasureSpace(oracle::random_measure(rng, n)));
}

// D assembled from the edge list directly, orthonormal coordinates on both summands.
Matrix dirac_oracle(const FiniteModel& m) {
  const Index n = m.size();
  const Index ne = m.graph().edge_count();
  Matrix d = Matrix::Zero(n + ne, n + ne);
  for (Index e = 0; e < ne; ++e) {
    const auto& ed = m.graph().edges()[static_cast<std::size_t>(e)];
    const double s = std::sqrt(ed.w);
    d(n + e, ed.u) = -s / std::sqrt(m.space().weight(ed.u));
    d(n + e, ed.v) = s / std::sqrt(m.space().weight(ed.v));
  }
  d.topRightCorner(n, ne) = d.bottomLeftCorner(ne, n).transpose();
  return d;
}

}  // namespace

TEST_CASE("single edge") {
  const Derivation d = build_derivation(single_edge());
  Matrix expected(1, 2);
  expected << -1, 1;
  CHECK(max_abs(d.matrix() - expected) == 0.0);
  Matrix a(2, 2);
  a << 2, -2, -2, 2;
  CHECK(max_abs(d.model().generator() - a) <= 1e-14);
  CHECK(factorization_deviation(d) <= 1e-14);

  const HodgeDirac hd = assemble_dirac(d);
  const auto ev = oracle::to_std(oracle::eigenvalues(hd.matrix().entries()));
  REQUIRE(ev.size() == 3);
  CHECK(ev[0] == doctest::Approx(-2.0));
  CHECK(std::abs(ev[1]) <= 1e-14);
  CHECK(ev[2] == doctest::Approx(2.0));

  const SusyReport susy = susy_pairing_check(d);
  REQUIRE(susy.vertex_spectrum.size() == 1);
  REQUIRE(susy.edge_spectrum.size() == 1);
  CHECK(susy.vertex_spectrum[0] == doctest::Approx(4.0));
  CHECK(susy.edge_spectrum[0] == doctest::Approx(4.0));
  CHECK(susy.vertex_kernel == 1);
  CHECK(susy.edge_kernel == 0);
  CHECK(susy.pass);
}

TEST_CASE("derivation basics") {
  SeededRng rng(31);
  SUBCASE("constants are annihilated") {
    const Derivation d = build_derivation(build_sierpinski(2));
    CHECK(d.apply(Vector::Constant(d.vertex_count(), 2.5)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("C4 has rank 3") {
    const Derivation d = build_derivation(build_from_file(kGraphs + "c4.graph"));
    Eigen::JacobiSVD<Matrix> svd(d.matrix());
    const Vector s = svd.singularValues();
    int rank = 0;
    for (Index i = 0; i < s.size(); ++i) rank += s(i) > 1e-10 ? 1 : 0;
    CHECK(rank == 3);
  }
  SUBCASE("adjoint identity <df, xi>_E = <f, d*xi>_mu") {
    const FiniteModel m = cycle(9, rng);
    const Derivation d = build_derivation(m);
    const Vector mu = m.space().weights();
    for (int i = 0; i < 20; ++i) {
      const Vector f = oracle::random_vector(rng, 9);
      const Vector xi = oracle::random_vector(rng, 9);
      const double lhs = d.apply(f).dot(xi);
      const double rhs = (f.array() * d.apply_adjoint(xi).array() * mu.array()).sum();
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
      CHECK((d.adjoint() * xi - d.apply_adjoint(xi)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("d*d reproduces A") {
    for (const auto& m : {cycle(12, rng), random_graph(15, 10, rng), build_sierpinski(3), build_torus_lattice(2, 6)}) {
      const Derivation d = build_derivation(m);
      CHECK(factorization_deviation(d) <= 1e-12);
      const Matrix a = d.adjoint() * d.matrix();
      CHECK(max_abs(a - oracle::generator(m.graph(), m.space().weights())) <= 1e-12 * max_abs(a));
    }
  }
  SUBCASE("ker d = ker A") {
    const FiniteModel two = build_from_file(kGraphs + "two_c4.graph");
    const Derivation d = build_derivation(two);
    Eigen::JacobiSVD<Matrix> svd(d.matrix());
    const Vector s = svd.singularValues();
    Index null_dim = d.vertex_count();
    for (Index i = 0; i < s.size(); ++i) null_dim -= s(i) > 1e-10 ? 1 : 0;
    CHECK(null_dim == two.spectrum().kernel_dim());
    CHECK(null_dim == 2);
  }
  SUBCASE("orthonormal matrix is d M^{-1/2}") {
    const FiniteModel m = cycle(7, rng);
    const Derivation d = build_derivation(m);
    const Matrix expected = d.matrix() * m.space().weights().cwiseSqrt().cwiseInverse().asDiagonal();
    CHECK(max_abs(d.orthonormal_matrix() - expected) <= 1e-13);
  }
}

TEST_CASE("twisted Leibniz rule") {
  SeededRng rng(32);
  const FiniteModel m = random_graph(12, 8, rng);
  const Derivation d = build_derivation(m);
  for (int i = 0; i < 20; ++i) {
    const Vector f = oracle::random_vector(rng, 12);
    const Vector g = oracle::random_vector(rng, 12);
    const Vector lhs = d.apply(f.cwiseProduct(g));
    const Vector rhs = d.left_action(f, d.apply(g)) + d.right_action(d.apply(f), g);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
  }
  SUBCASE("the untwisted rule fails on a lattice") {
    const Derivation t = build_derivation(build_torus_lattice(1, 8));
    Vector f = Vector::Zero(8);
    f(1) = 1.0;
    const Vector lhs = t.apply(f.cwiseProduct(f));
    const Vector naive = t.left_action(f, t.apply(f)) + t.left_action(f, t.apply(f));
    CHECK((lhs - naive).cwiseAbs().maxCoeff() > 0.1);
  }
}

TEST_CASE("Hodge-Dirac operator") {
  SeededRng rng(33);
  const std::vector<FiniteModel> models{single_edge(), build_from_file(kGraphs + "c4.graph"), cycle(10, rng),
                                        random_graph(14, 9, rng), build_sierpinski(2),
                                        build_from_file(kGraphs + "two_c4.graph")};
  for (const auto& m : models) {
    CAPTURE(m.label());
    const HodgeDirac hd = assemble_dirac(build_derivation(m));
    const Matrix oracle_d = dirac_oracle(m);
    const double scale = std::max(1.0, max_abs(oracle_d));
    CHECK(max_abs(hd.matrix().entries() - oracle_d) <= 1e-13 * scale);
    CHECK(dirac_square_deviation(hd) <= 1e-12 * scale * scale);
    CHECK(max_abs(oracle_d * oracle_d - hd.square_blocks()) <= 1e-12 * scale * scale);

    // spectrum of D is symmetric about 0
    const auto ev = oracle::to_std(oracle::eigenvalues(oracle_d));
    for (std::size_t i = 0; i < ev.size(); ++i) CHECK(std::abs(ev[i] + ev[ev.size() - 1 - i]) <= 1e-10 * scale);

    // D² spectrum against the dense square
    auto sq = oracle::to_std(oracle::eigenvalues(oracle_d * oracle_d));
    const auto lib = hd.squared_spectrum();
    CHECK(oracle::max_diff(oracle::sorted(lib), sq) <= 1e-10 * scale * scale);
    CHECK(oracle::max_diff(oracle::sorted(squared_dirac_spectrum(m)), sq) <= 1e-10 * scale * scale);
    CHECK(hd.squared_spectral_radius() == doctest::Approx(sq.back()).epsilon(1e-10));

    // supersymmetry: nonzero spectra pair up and the kernels have dims n − r and |E| − r
    const SusyReport susy = susy_pairing_check(hd.derivation());
    CHECK(susy.pass);
    CHECK(susy.multiplicities_match);
    CHECK(susy.vertex_kernel - susy.edge_kernel == m.size() - m.graph().edge_count());
    CHECK(susy.vertex_kernel == m.graph().component_count());
  }
}

TEST_CASE("C4 D^2 spectrum") {
  // A on C4 with uniform mass 1/4 is 4 × the cycle Laplacian: {0, 8, 8, 16}; ∂∂* has the
  // same nonzero part plus one zero from the cycle.
  const HodgeDirac hd = assemble_dirac(build_derivation(build_from_file(kGraphs + "c4.graph")));
  const auto sq = oracle::sorted(hd.squared_spectrum());
  const auto cyc = oracle::cycle_spectrum(4);
  std::vector<double> expected;
  for (double l : cyc) expected.push_back(l);
  for (double l : cyc) expected.push_back(l);
  expected = oracle::sorted(expected);
  CHECK(oracle::max_diff(sq, expected) <= 1e-12);
}

TEST_CASE("gasket level 2 supersymmetry") {
  const SusyReport r = susy_pairing_check(build_derivation(build_sierpinski(2)));
  CHECK(r.pass);
  CHECK(r.max_relative_deviation <= 1e-9);
  CHECK(r.vertex_kernel == 1);
  CHECK(r.edge_kernel == 27 - 15 + 1);
}

TEST_CASE("orientation does not change the spectra") {
  SeededRng rng(34);
  const FiniteModel m = random_graph(10, 6, rng);
  const Derivation d = build_derivation(m);
  std::vector<Index> flip;
  for (Index e = 0; e < d.edge_count(); e += 2) flip.push_back(e);
  const Derivation r = d.reoriented(flip);
  for (Index e : flip) {
    CHECK(r.source(e) == d.target(e));
    CHECK(r.target(e) == d.source(e));
  }
  CHECK(max_abs(r.adjoint() * r.matrix() - d.adjoint() * d.matrix()) <= 1e-12);
  const auto a = oracle::to_std(oracle::eigenvalues(assemble_dirac(d).matrix().entries()));
  const auto b = oracle::to_std(oracle::eigenvalues(assemble_dirac(r).matrix().entries()));
  CHECK(oracle::max_diff(a, b) <= 1e-10);
}

TEST_CASE("commutators") {
  SeededRng rng(35);
  const FiniteModel m = random_graph(11, 7, rng);
  const HodgeDirac hd = assemble_dirac(build_derivation(m));
  const Vector mu = m.space().weights();
  SUBCASE("constants commute with D") {
    CHECK(max_abs(commutator(hd, Vector::Constant(11, -1.5))) <= 1e-12);
    CHECK(commutator_norm(hd, Vector::Constant(11, 4.0)) <= 1e-12);
  }
  SUBCASE("lower-left block matches the edge oracle") {
    const Vector f = oracle::random_vector(rng, 11);
    const Matrix c = commutator(hd, f);
    const Index n = 11;
    const Index ne = m.graph().edge_count();
    CHECK(max_abs(c.bottomLeftCorner(ne, n) - oracle::commutator_block(m.graph(), mu, f)) <= 1e-12);
    CHECK(max_abs(c + c.transpose()) <= 1e-12);  // anti-self-adjoint
    CHECK(max_abs(c.topLeftCorner(n, n)) == 0.0);
    CHECK(max_abs(c.bottomRightCorner(ne, ne)) == 0.0);
  }
  SUBCASE("norm matches the SVD oracle and is a seminorm") {
    for (int i = 0; i < 20; ++i) {
      const Vector f = oracle::random_vector(rng, 11);
      const Vector g = oracle::random_vector(rng, 11);
      const double nf = commutator_norm(hd, f);
      CHECK(nf == doctest::Approx(oracle::commutator_norm(m.graph(), mu, f)).epsilon(1e-10));
      CHECK(commutator_norm(hd, -3.0 * f) == doctest::Approx(3.0 * nf).epsilon(1e-10));
      CHECK(commutator_norm(hd, f + g) <= nf + commutator_norm(hd, g) + 1e-10);
      CHECK(max_abs(commutator(hd, 2.0 * f + g) - 2.0 * commutator(hd, f) - commutator(hd, g)) <= 1e-11);
    }
  }
  SUBCASE("gradient sup norm") {
    for (int i = 0; i < 10; ++i) {
      const Vector f = oracle::random_vector(rng, 11);
      Vector acc = Vector::Zero(11);
      for (const auto& e : m.graph().edges()) acc(e.v) += e.w * std::pow(f(e.v) - f(e.u), 2);
      const double expected = (acc.array() / mu.array()).sqrt().maxCoeff();
      CHECK(gradient_sup_norm(hd.derivation(), f) == doctest::Approx(expected).epsilon(1e-12));
      // the block C is diagonal in columns with C^T C = diag(acc / μ), so the two norms agree
      CHECK(gradient_sup_norm(hd.derivation(), f) == doctest::Approx(commutator_norm(hd, f)).epsilon(1e-10));
    }
  }
}

TEST_CASE("heat trace of D^2") {
  SeededRng rng(36);
  for (const auto& m : {cycle(8, rng), build_sierpinski(2)}) {
    const HodgeDirac hd = assemble_dirac(build_derivation(m));
    const Matrix d = dirac_oracle(m);
    Eigen::SelfAdjointEigenSolver<Matrix> es(d * d);
    for (double t : {0.001, 0.05, 1.0}) {
      const double dense = (-t * es.eigenvalues().array().max(0.0)).exp().sum();
      CHECK(heat_trace(hd, t) == doctest::Approx(dense).epsilon(1e-10));
      // Tr e^{−tD²} = 2 Tr e^{−tA} − n + |E|
      const double via_a = 2 * heat_trace(m, t) - static_cast<double>(m.size()) +
                           static_cast<double>(m.graph().edge_count());
      CHECK(heat_trace(hd, t) == doctest::Approx(via_a).epsilon(1e-10));
    }
  }
}

TEST_CASE("Connes distance") {
  SUBCASE("two points: sqrt(mu_1 / w)") {
    const HodgeDirac hd = assemble_dirac(build_derivation(build_from_file(kGraphs + "edge2.graph")));
    const double expected = std::sqrt(0.7 / 2.0);
    CHECK(connes_distance(hd, 0, 1).distance == doctest::Approx(expected).epsilon(1e-6));
    CHECK(connes_distance(hd, 1, 0).distance == doctest::Approx(expected).epsilon(1e-6));
    CHECK(oracle::connes_distance(hd.derivation().model().graph(), hd.derivation().model().space().weights(), 0, 1) ==
          doctest::Approx(expected).epsilon(1e-6));
  }
  SUBCASE("path: additive along the path") {
    const HodgeDirac hd = assemble_dirac(build_derivation(build_from_file(kGraphs + "p3.graph")));
    const double s = std::sqrt(1.0 / 3.0);
    CHECK(connes_distance(hd, 0, 1).distance == doctest::Approx(s).epsilon(1e-6));
    CHECK(connes_distance(hd, 1, 2).distance == doctest::Approx(s).epsilon(1e-6));
    CHECK(connes_distance(hd, 0, 2).distance == doctest::Approx(2 * s).epsilon(1e-6));
  }
  SUBCASE("against brute force on random graphs") {
    SeededRng rng(37);
    for (int trial = 0; trial < 3; ++trial) {
      const FiniteModel m = random_graph(6, 3, rng);
      const HodgeDirac hd = assemble_dirac(build_derivation(m));
      for (auto [x, y] : {std::pair<Index, Index>{0, 5}, {1, 3}, {4, 2}}) {
        const ConnesResult r = connes_distance(hd, x, y);
        const double brute = oracle::connes_distance(m.graph(), m.space().weights(), x, y, 100 + trial);
        CHECK(r.distance >= brute * (1 - 1e-6));
        CHECK(r.distance <= brute * (1 + 1e-3));
        CHECK(r.upper_bound >= r.distance * (1 - 1e-12));
        CHECK(r.upper_bound - r.distance <= 1e-6 * std::max(1.0, r.distance));
        CHECK(r.witness(x) - r.witness(y) == doctest::Approx(r.distance).epsilon(1e-9));
        CHECK(commutator_norm(hd, r.witness) <= 1 + 1e-9);
      }
    }
  }
  SUBCASE("metric axioms") {
    SeededRng rng(38);
    const FiniteModel m = random_graph(7, 4, rng);
    const HodgeDirac hd = assemble_dirac(build_derivation(m));
    Matrix d = Matrix::Zero(7, 7);
    for (Index x = 0; x < 7; ++x) {
      for (Index y = 0; y < 7; ++y) {
        if (x != y) d(x, y) = connes_distance(hd, x, y).distance;
      }
    }
    CHECK(d.minCoeff() >= 0.0);
    CHECK(max_abs(d - d.transpose()) <= 1e-6 * d.maxCoeff());
    for (Index x = 0; x < 7; ++x) {
      for (Index y = 0; y < 7; ++y) {
        for (Index z = 0; z < 7; ++z) CHECK(d(x, z) <= d(x, y) + d(y, z) + 1e-6 * d.maxCoeff());
      }
    }
  }
  SUBCASE("degenerate inputs") {
    const HodgeDirac two = assemble_dirac(build_derivation(build_from_file(kGraphs + "two_c4.graph")));
    CHECK(std::isinf(connes_distance(two, 0, 5).distance));
    CHECK(std::isfinite(connes_distance(two, 0, 2).distance));
    CHECK_THROWS_AS(connes_distance(two, 3, 3), DomainError);
  }
}

TEST_CASE("Connes solver converges on badly scaled graphs") {
  SeededRng rng(39);
  for (int trial = 0; trial < 60; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.next() % 30);
    std::vector<Edge> edges;
    for (Index i = 0; i + 1 < n; ++i) edges.push_back(Edge{i, i + 1, rng.uniform(0.01, 100.0)});
    for (Index c = 0; c < n; ++c) {
      Index u = static_cast<Index>(rng.next() % static_cast<std::uint64_t>(n));
      Index v = static_cast<Index>(rng.next() % static_cast<std::uint64_t>(n));
      if (u > v) std::swap(u, v);
      if (v <= u + 1) continue;
      bool seen = false;
      for (const auto& e : edges) seen = seen || (e.u == u && e.v == v);
      if (!seen) edges.push_back(Edge{u, v, rng.uniform(0.01, 100.0)});
    }
    const FiniteModel m = model_from_graph("r", WeightedGraph(n, edges),
                                           FiniteMeasureSpace(oracle::random_measure(rng, n, 1e-4, 1.0)));
    const HodgeDirac hd = assemble_dirac(build_derivation(m));
    const Index x = static_cast<Index>(rng.next() % static_cast<std::uint64_t>(n));
    const Index y = (x + 1 + static_cast<Index>(rng.next() % static_cast<std::uint64_t>(n - 1))) % n;
    ConnesResult r;
    REQUIRE_NOTHROW(r = connes_distance(hd, x, y));
    CHECK(r.iterations < 500);
    CHECK(r.upper_bound >= r.distance);
    CHECK(commutator_norm(hd, r.witness) == doctest::Approx(1.0).epsilon(1e-9));
  }
}
