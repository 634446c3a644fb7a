#include "heatdim/errors.hpp"
#include "heatdim/forms.hpp"
#include "heatdim/kernel_ops.hpp"
#include "heatdim/random.hpp"
#include "heatdim/semigroup.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace heatdim;

namespace {

Kernel random_kernel(SeededRng& rng, Index n) {
  return Kernel{FiniteMeasureSpace(oracle::random_measure(rng, n)), oracle::random_matrix(rng, n, n)};
}

// T_K applied to the unit L¹ atom e_y / μ_y, evaluated pointwise from the kernel.
Vector apply_atom(const Kernel& k, Index y) {
  Vector f = Vector::Zero(k.space.size());
  f(y) = 1.0 / k.space.weight(y);
  Vector out(k.space.size());
  for (Index x = 0; x < out.size(); ++x) {
    double s = 0.0;
    for (Index z = 0; z < out.size(); ++z) s += k.values(x, z) * f(z) * k.space.weight(z);
    out(x) = s;
  }
  return out;
}

}  // namespace

TEST_CASE("FiniteMeasureSpace validation") {
  Vector ok(3);
  ok << 0.1, 0.2, 0.7;
  const FiniteMeasureSpace s(ok);
  CHECK(s.total() == doctest::Approx(1.0));
  CHECK(s.size() == 3);
  Vector bad = ok;
  bad(1) = 0.0;
  CHECK_THROWS_AS(FiniteMeasureSpace{bad}, ValidationError);
  bad(1) = -1.0;
  CHECK_THROWS_AS(FiniteMeasureSpace{bad}, ValidationError);
  bad(1) = std::nan("");
  CHECK_THROWS_AS(FiniteMeasureSpace{bad}, ValidationError);
  CHECK(FiniteMeasureSpace::counting(4).total() == 4.0);
  CHECK(FiniteMeasureSpace::uniform(4).weight(2) == 0.25);
}

TEST_CASE("kernel_to_operator examples") {
  SUBCASE("constant kernel averages") {
    const Kernel k{FiniteMeasureSpace::uniform(2), Matrix::Constant(2, 2, 1.0)};
    Vector f(2);
    f << 3.0, 5.0;
    const Vector g = kernel_to_operator(k) * f;
    CHECK(g(0) == doctest::Approx(4.0));
    CHECK(g(1) == doctest::Approx(4.0));
  }
  SUBCASE("reproducing kernel gives the identity") {
    Vector mu(3);
    mu << 0.2, 0.3, 0.5;
    const FiniteMeasureSpace s(mu);
    const Kernel k{s, Matrix(mu.cwiseInverse().asDiagonal())};
    CHECK(max_abs(kernel_to_operator(k) - Matrix::Identity(3, 3)) <= 1e-15);
  }
  SUBCASE("columns are K(., y) mu_y") {
    SeededRng rng(1);
    Vector mu(4);
    mu << 0.1, 0.2, 0.3, 0.4;
    const Kernel k{FiniteMeasureSpace(mu), oracle::random_matrix(rng, 4, 4)};
    const Matrix op = kernel_to_operator(k);
    for (Index y = 0; y < 4; ++y) CHECK(max_abs(op.col(y) - k.values.col(y) * mu(y)) <= 1e-15);
  }
}

TEST_CASE("operator_to_kernel inverts kernel_to_operator") {
  SeededRng rng(2);
  const Kernel k = random_kernel(rng, 7);
  const Kernel back = operator_to_kernel(kernel_to_operator(k), k.space);
  CHECK(max_abs(back.values - k.values) <= 1e-14);
}

TEST_CASE("kernel_to_operator is linear") {
  SeededRng rng(3);
  for (int i = 0; i < 10; ++i) {
    const Kernel a = random_kernel(rng, 6);
    const Kernel b{a.space, oracle::random_matrix(rng, 6, 6)};
    const Kernel sum{a.space, a.values + 2.5 * b.values};
    CHECK(max_abs(kernel_to_operator(sum) - kernel_to_operator(a) - 2.5 * kernel_to_operator(b)) <= 1e-13);
  }
}

TEST_CASE("composition law") {
  SeededRng rng(4);
  for (int i = 0; i < 10; ++i) {
    const Kernel k1 = random_kernel(rng, 8);
    const Kernel k2{k1.space, oracle::random_matrix(rng, 8, 8)};
    const Kernel c = compose(k1, k2);
    Matrix expected = Matrix::Zero(8, 8);
    for (Index x = 0; x < 8; ++x) {
      for (Index z = 0; z < 8; ++z) {
        for (Index y = 0; y < 8; ++y) expected(x, z) += k1.values(x, y) * k2.values(y, z) * k1.space.weight(y);
      }
    }
    CHECK(max_abs(c.values - expected) <= 1e-12);
    CHECK(max_abs(kernel_to_operator(c) - kernel_to_operator(k1) * kernel_to_operator(k2)) <= 1e-12);
  }
}

TEST_CASE("Dunford-Pettis examples") {
  SUBCASE("constant kernel") {
    const Kernel k{FiniteMeasureSpace::uniform(5), Matrix::Constant(5, 5, -2.5)};
    const auto r = dunford_pettis_check(k);
    CHECK(r.lhs == 2.5);
    CHECK(r.rhs == doctest::Approx(2.5).epsilon(1e-15));
  }
  SUBCASE("single atom") {
    Matrix v = Matrix::Zero(3, 3);
    v(1, 2) = 5.0;
    const auto r = dunford_pettis_check(Kernel{FiniteMeasureSpace::uniform(3), v});
    CHECK(r.lhs == 5.0);
    CHECK(r.rhs == doctest::Approx(5.0).epsilon(1e-15));
  }
}

TEST_CASE("Dunford-Pettis on 50 random 8x8 kernels") {
  SeededRng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Kernel k = random_kernel(rng, 8);
    const auto r = dunford_pettis_check(k);
    double sup = 0.0;
    for (Index y = 0; y < 8; ++y) sup = std::max(sup, apply_atom(k, y).cwiseAbs().maxCoeff());
    CHECK(std::abs(r.lhs - r.rhs) <= 1e-12 * std::max(1.0, r.lhs));
    CHECK(std::abs(r.rhs - sup) <= 1e-12 * std::max(1.0, sup));
    CHECK(r.lhs == k.values.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("Hilbert-Schmidt examples") {
  SUBCASE("zero kernel") {
    const auto r = hilbert_schmidt_check(Kernel{FiniteMeasureSpace::uniform(4), Matrix::Zero(4, 4)});
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
  }
  SUBCASE("rank one") {
    SeededRng rng(6);
    const FiniteMeasureSpace s(oracle::random_measure(rng, 6));
    const Vector u = oracle::random_vector(rng, 6);
    const Vector v = oracle::random_vector(rng, 6);
    const auto r = hilbert_schmidt_check(Kernel{s, u * v.transpose()});
    const double expected = std::sqrt(s.inner(u, u)) * std::sqrt(s.inner(v, v));
    CHECK(r.lhs == doctest::Approx(expected).epsilon(1e-13));
    CHECK(r.rhs == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("Hilbert-Schmidt on 50 random 16x16 kernels") {
  SeededRng rng(7);
  for (int i = 0; i < 50; ++i) {
    const Kernel k = random_kernel(rng, 16);
    const auto r = hilbert_schmidt_check(k);
    const Vector root = k.space.weights().cwiseSqrt();
    const double frob = (root.asDiagonal() * k.values * root.asDiagonal()).norm();
    CHECK(std::abs(r.lhs - r.rhs) <= 1e-10 * std::max(1.0, r.lhs));
    CHECK(std::abs(r.rhs - frob) <= 1e-10 * std::max(1.0, frob));
  }
}

TEST_CASE("orthonormal basis conjugation") {
  SeededRng rng(8);
  const Kernel k = random_kernel(rng, 5);
  const Matrix op = kernel_to_operator(k);
  const Matrix onb = to_orthonormal_basis(op, k.space);
  const Vector r = k.space.weights().cwiseSqrt();
  CHECK(max_abs(onb - r.asDiagonal() * op * r.cwiseInverse().asDiagonal()) <= 1e-14);
}

TEST_CASE("norm_1_to_inf examples") {
  SUBCASE("identity on two half atoms") {
    CHECK(norm_1_to_inf(Matrix::Identity(2, 2), FiniteMeasureSpace::uniform(2)) == doctest::Approx(2.0));
  }
  SUBCASE("averaging operator") {
    const Kernel k{FiniteMeasureSpace::uniform(3), Matrix::Constant(3, 3, 1.0)};
    CHECK(norm_1_to_inf(kernel_to_operator(k), k.space) == doctest::Approx(1.0));
  }
  SUBCASE("heat operator on C8 equals the diagonal maximum") {
    std::vector<Edge> edges;
    for (Index i = 0; i < 8; ++i) edges.push_back(Edge{i, (i + 1) % 8, 1.0});
    const FiniteModel c8 = model_from_graph("c8", WeightedGraph(8, edges));
    const Matrix op = oracle::heat_operator(c8, 0.5);
    double brute = 0.0;
    for (Index y = 0; y < 8; ++y) {
      Vector atom = Vector::Zero(8);
      atom(y) = 1.0 / c8.space().weight(y);
      brute = std::max(brute, (op * atom).cwiseAbs().maxCoeff());
    }
    const double diag = heat_kernel(c8, 0.5).kernel.values.diagonal().maxCoeff();
    CHECK(norm_1_to_inf(op, c8.space()) == doctest::Approx(brute).epsilon(1e-12));
    CHECK(norm_1_to_inf(op, c8.space()) == doctest::Approx(diag).epsilon(1e-10));
  }
}
