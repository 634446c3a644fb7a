#include "heatdim/errors.hpp"
#include "heatdim/linalg.hpp"
#include "heatdim/random.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <Eigen/QR>

#include <cmath>
#include <limits>

using namespace heatdim;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix cycle_laplacian(int n) {
  Matrix l = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    l(i, i) += 1;
    l(j, j) += 1;
    l(i, j) -= 1;
    l(j, i) -= 1;
  }
  return l;
}

SymMatrix random_sym(SeededRng& rng, Index n) {
  const Matrix m = oracle::random_matrix(rng, n, n);
  return SymMatrix(Matrix(m + m.transpose()));
}

void check_spectral_invariants(const SymMatrix& a, const SpectralData& s) {
  const Index n = a.dim();
  for (Index k = 1; k < n; ++k) CHECK(s.eigenvalues(k - 1) <= s.eigenvalues(k));
  CHECK(max_abs(s.eigenvectors.transpose() * s.eigenvectors - Matrix::Identity(n, n)) <= 1e-9);
  const Matrix rebuilt = s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
  CHECK(max_abs(rebuilt - a.entries()) <= 1e-8 * std::max(1.0, a.max_abs()));
  CHECK(s.source_dim == n);
}

}  // namespace

TEST_CASE("sym_eig on closed-form matrices") {
  SUBCASE("2x2 swap") {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    const auto s = sym_eig(SymMatrix(m));
    CHECK(s.eigenvalues(0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(s.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("identity") {
    const auto s = sym_eig(SymMatrix::identity(5));
    for (Index k = 0; k < 5; ++k) CHECK(s.eigenvalues(k) == 1.0);
  }
  SUBCASE("C4 Laplacian") {
    const auto s = sym_eig(SymMatrix(cycle_laplacian(4)));
    const double expected[] = {0, 2, 2, 4};
    for (int k = 0; k < 4; ++k) CHECK(std::abs(s.eigenvalues(k) - expected[k]) <= 1e-12);
  }
}

TEST_CASE("cycle spectra match the cosine formula") {
  for (int n : {5, 8, 33}) {
    const auto s = sym_eig(SymMatrix(cycle_laplacian(n)));
    CHECK(oracle::max_diff(oracle::to_std(s.eigenvalues), oracle::cycle_spectrum(n)) <= 1e-11);
  }
}

TEST_CASE("spectral data invariants for both solvers") {
  SeededRng rng(11);
  const SymMatrix small = random_sym(rng, 40);
  check_spectral_invariants(small, jacobi_eig(small, 1e-12));
  check_spectral_invariants(small, lapack_eig(small));
  const SymMatrix large = random_sym(rng, 300);
  check_spectral_invariants(large, sym_eig(large));
}

TEST_CASE("Jacobi and LAPACK agree, and both agree with Eigen") {
  SeededRng rng(12);
  for (Index n : {3, 17, 64, 120}) {
    const SymMatrix a = random_sym(rng, n);
    const auto j = jacobi_eig(a, 1e-13);
    const auto l = lapack_eig(a);
    const Vector ref = oracle::eigenvalues(a.entries());
    const double scale = std::max(1.0, a.max_abs());
    CHECK(max_abs(j.eigenvalues - l.eigenvalues) <= 1e-10 * scale);
    CHECK(max_abs(j.eigenvalues - ref) <= 1e-10 * scale);
    // Same sign convention: simple eigenvalues give identical columns.
    CHECK(max_abs(j.eigenvectors - l.eigenvectors) <= 1e-6);
  }
}

TEST_CASE("eigenvector signs are normalized") {
  SeededRng rng(13);
  const SymMatrix a = random_sym(rng, 30);
  for (EigenMethod m : {EigenMethod::Jacobi, EigenMethod::Lapack}) {
    const auto s = sym_eig(a, 1e-12, m);
    for (Index k = 0; k < s.eigenvectors.cols(); ++k) {
      Index arg = 0;
      s.eigenvectors.col(k).cwiseAbs().maxCoeff(&arg);
      CHECK(s.eigenvectors(arg, k) > 0.0);
    }
  }
}

TEST_CASE("sym_eig is deterministic") {
  SeededRng rng(14);
  const SymMatrix a = random_sym(rng, 50);
  const auto s1 = sym_eig(a);
  const auto s2 = sym_eig(a);
  CHECK(s1.eigenvalues == s2.eigenvalues);
  CHECK(s1.eigenvectors == s2.eigenvectors);
}

TEST_CASE("sym_eigenvalues matches sym_eig") {
  SeededRng rng(15);
  for (Index n : {20, 400}) {
    const SymMatrix a = random_sym(rng, n);
    CHECK(max_abs(sym_eigenvalues(a) - sym_eig(a).eigenvalues) <= 1e-10 * a.max_abs());
  }
}

TEST_CASE("sym_eig rejects tolerances outside [1e-14, 1e-6]") {
  const SymMatrix a = SymMatrix::identity(3);
  CHECK_THROWS_AS(sym_eig(a, 1e-3), DomainError);
  CHECK_THROWS_AS(sym_eig(a, 1e-16), DomainError);
  CHECK_NOTHROW(sym_eig(a, 1e-14));
  CHECK_NOTHROW(sym_eig(a, 1e-6));
}

TEST_CASE("SymMatrix construction") {
  Matrix m(2, 2);
  m << 1, 2, 2 + 1e-14, 3;
  const SymMatrix s(m);
  CHECK(s(0, 1) == s(1, 0));
  m(1, 0) = 2.1;
  CHECK_THROWS_AS(SymMatrix{m}, DomainError);
  CHECK_THROWS_AS(SymMatrix{Matrix::Zero(2, 3)}, DomainError);
  m(1, 0) = 2.0;
  m(0, 0) = std::nan("");
  CHECK_THROWS_AS(SymMatrix{m}, DomainError);
}

TEST_CASE("Schatten norms of diag(3, -4)") {
  Vector d(2);
  d << 3, -4;
  const SymMatrix a = SymMatrix::diagonal(d);
  CHECK(schatten_norm(a, 1) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(schatten_norm(a, 2) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(schatten_norm(a, kInf) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_THROWS_AS(schatten_norm(a, 3.0), DomainError);
}

TEST_CASE("trace identity on Gram matrices") {
  SeededRng rng(16);
  for (int i = 0; i < 10; ++i) {
    const Matrix b = oracle::random_matrix(rng, 12, 7);
    const SymMatrix gram(Matrix(b * b.transpose()));
    CHECK(schatten_norm(gram, 1) == doctest::Approx(gram.trace()).epsilon(1e-12));
    const SymMatrix general = random_sym(rng, 12);
    CHECK(schatten_norm(general, 1) >= std::abs(general.trace()) - 1e-12);
  }
}

TEST_CASE("spectral_function examples") {
  SeededRng rng(17);
  SUBCASE("exp(-0 x) is the identity") {
    const SymMatrix a = random_sym(rng, 9);
    const SymMatrix e = spectral_function(sym_eig(a), [](double l) { return std::exp(-0.0 * l); });
    CHECK(max_abs(e.entries() - Matrix::Identity(9, 9)) <= 1e-12);
  }
  SUBCASE("squaring diag(0, 2)") {
    Vector d(2);
    d << 0, 2;
    const SymMatrix sq = spectral_function(sym_eig(SymMatrix::diagonal(d)), [](double l) { return l * l; });
    CHECK(std::abs(sq(0, 0)) <= 1e-15);
    CHECK(sq(1, 1) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(std::abs(sq(0, 1)) <= 1e-15);
  }
  SUBCASE("inverse square root on the nonzero part of C4") {
    const auto s = sym_eig(SymMatrix(cycle_laplacian(4)));
    const SymMatrix r = spectral_function(s, [](double l) { return 1.0 / std::sqrt(l); }, KernelPolicy::Zero);
    const Vector ev = oracle::eigenvalues(r.entries());
    const double expected[] = {0.0, 0.5, 1 / std::sqrt(2.0), 1 / std::sqrt(2.0)};
    for (int k = 0; k < 4; ++k) CHECK(std::abs(ev(k) - expected[k]) <= 1e-12);
  }
  SUBCASE("identity map reproduces the matrix") {
    const SymMatrix a = random_sym(rng, 30);
    const SymMatrix b = spectral_function(sym_eig(a), [](double l) { return l; });
    CHECK(max_abs(a.entries() - b.entries()) <= 1e-8 * a.max_abs());
  }
}

TEST_CASE("spectral_function reports non-finite values") {
  Vector d(3);
  d << 0, 1, 2;
  const auto s = sym_eig(SymMatrix::diagonal(d));
  const auto inv = [](double l) { return 1.0 / l; };
  CHECK_THROWS_AS(spectral_function(s, inv, KernelPolicy::Evaluate), DomainError);
  CHECK_NOTHROW(spectral_function(s, inv, KernelPolicy::Zero));
}

TEST_CASE("semigroup law at matrix level") {
  SeededRng rng(18);
  const Index n = 25;
  const Matrix b = oracle::random_matrix(rng, n, n);
  const auto s = sym_eig(SymMatrix(Matrix(b * b.transpose() / n)));
  auto heat = [&](double t) { return spectral_function(s, [t](double l) { return std::exp(-t * l); }).entries(); };
  for (auto [t1, t2] : {std::pair{0.1, 0.2}, std::pair{0.5, 1.5}, std::pair{1e-3, 2.0}}) {
    CHECK(max_abs(heat(t1 + t2) - heat(t1) * heat(t2)) <= 1e-10 * n);
  }
}

TEST_CASE("orthogonal invariance") {
  SeededRng rng(19);
  for (Index n : {10, 60, 300}) {
    const SymMatrix a = random_sym(rng, n);
    const Eigen::HouseholderQR<Matrix> qr(oracle::random_matrix(rng, n, n));
    const Matrix q = qr.householderQ();
    const SymMatrix rotated(Matrix(q.transpose() * a.entries() * q));
    CHECK(max_abs(sym_eig(a).eigenvalues - sym_eig(rotated).eigenvalues) <= 1e-9 * std::max(1.0, a.max_abs()));
  }
}

TEST_CASE("kernel threshold") {
  SpectralData s;
  s.eigenvalues.resize(4);
  s.eigenvalues << 0.0, 5e-11, 2e-10, 1.0;
  CHECK(s.zero_cutoff() == doctest::Approx(1e-10));
  CHECK(s.kernel_dim() == 2);
  CHECK(s.nonzero_eigenvalues() == std::vector<double>{2e-10, 1.0});
}
