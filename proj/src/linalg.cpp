#include "heatdim/linalg.hpp"

#include "heatdim/errors.hpp"

#include <dlfcn.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>

namespace heatdim {

SymMatrix::SymMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw DomainError("SymMatrix: matrix is " + std::to_string(entries_.rows()) + "x" +
                      std::to_string(entries_.cols()) + ", not square");
  }
  if (!entries_.allFinite()) throw DomainError("SymMatrix: non-finite entry");
  const double scale = std::max(1.0, heatdim::max_abs(entries_));
  // One blocked pass over the upper triangle: measure the asymmetry and symmetrize.
  const Index n = entries_.rows();
  constexpr Index kBlock = 64;
  double asym = 0.0;
  for (Index jb = 0; jb < n; jb += kBlock) {
    for (Index ib = 0; ib <= jb; ib += kBlock) {
      const Index jend = std::min(jb + kBlock, n);
      for (Index j = jb; j < jend; ++j) {
        const Index iend = std::min(ib + kBlock, j);
        for (Index i = ib; i < iend; ++i) {
          const double a = entries_(i, j);
          const double b = entries_(j, i);
          asym = std::max(asym, std::abs(a - b));
          entries_(i, j) = entries_(j, i) = 0.5 * (a + b);
        }
      }
    }
  }
  if (asym > 1e-12 * scale) {
    throw DomainError("SymMatrix: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

double SymMatrix::max_abs() const { return heatdim::max_abs(entries_); }

double SpectralData::max_abs_eigenvalue() const {
  return eigenvalues.size() == 0 ? 0.0 : eigenvalues.cwiseAbs().maxCoeff();
}

bool SpectralData::is_zero(double lambda) const { return std::abs(lambda) <= zero_cutoff(); }

Index SpectralData::kernel_dim() const {
  const double cut = zero_cutoff();
  return static_cast<Index>(
      std::count_if(eigenvalues.begin(), eigenvalues.end(), [cut](double l) { return std::abs(l) <= cut; }));
}

std::vector<double> SpectralData::nonzero_eigenvalues() const {
  const double cut = zero_cutoff();
  std::vector<double> out;
  for (double l : eigenvalues) {
    if (std::abs(l) > cut) out.push_back(l);
  }
  return out;
}

namespace {

void check_tol(double tol) {
  if (!(tol >= 1e-14 && tol <= 1e-6)) {
    throw DomainError("sym_eig: tol " + std::to_string(tol) + " outside [1e-14, 1e-6]");
  }
}

// Sort ascending, then fix signs so each column's largest-magnitude entry is positive.
SpectralData finalize(Vector values, Matrix vectors) {
  const Index n = values.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) < values(b); });

  SpectralData out;
  out.source_dim = n;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = values(src);
    auto col = vectors.col(src);
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < n; ++i) {
      // Ties broken toward the lower index; 1e-12 guards against rounding flips.
      if (std::abs(col(i)) > best + 1e-12) {
        best = std::abs(col(i));
        arg = i;
      }
    }
    out.eigenvectors.col(k) = col(arg) < 0.0 ? Vector(-col) : Vector(col);
  }
  return out;
}

}  // namespace

SpectralData jacobi_eig(const SymMatrix& sym, double tol) {
  check_tol(tol);
  Matrix a = sym.entries();
  const Index n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  const double norm = a.norm();
  const long long budget = static_cast<long long>(n) * static_cast<long long>(n);

  auto off_diagonal = [&]() {
    double s = 0.0;
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        if (i != j) s += a(i, j) * a(i, j);
      }
    }
    return std::sqrt(s);
  };

  bool converged = n <= 1 || norm == 0.0;
  for (long long sweep = 0; !converged && sweep < budget; ++sweep) {
    if (off_diagonal() <= tol * norm) {
      converged = true;
      break;
    }
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Entries below the precision of both diagonal entries are dropped outright.
        if (sweep > 3 && std::abs(a(p, p)) + 100.0 * std::abs(apq) == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + 100.0 * std::abs(apq) == std::abs(a(q, q))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged && off_diagonal() > tol * norm) {
    throw NonConvergence("jacobi_eig: " + std::to_string(budget) + " sweeps exhausted at n = " +
                         std::to_string(n));
  }
  return finalize(a.diagonal(), std::move(v));
}

namespace {

lapack_int dsyevd(Matrix& a, Vector& w) {
  const Index n = a.rows();
  return LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n), a.data(),
                        static_cast<lapack_int>(n), w.data());
}

// Some OpenBLAS builds pick kernels that the CPU advertises but mis-executes (seen with
// the Cooperlake kernels of 0.3.20 under virtualization). Solve a fixed problem large
// enough to reach the blocked code paths and check the residual.
bool backend_sound() {
  const Index n = 300;
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) a(i, j) = std::sin(0.37 * static_cast<double>(i * j + i + j)) + (i == j ? 2.0 : 0.0);
  }
  a = (0.5 * (a + a.transpose())).eval();
  Matrix v = a;
  Vector w(n);
  if (dsyevd(v, w) != 0) return false;
  const double residual = max_abs(a * v - v * w.asDiagonal());
  const double orth = max_abs(v.transpose() * v - Matrix::Identity(n, n));
  return residual < 1e-10 * std::max(1.0, max_abs(a)) && orth < 1e-10;
}

// Asks a dynamic-arch OpenBLAS to reselect its kernels; false if the hooks are absent.
bool reselect_openblas(const char* core) {
  using hook = void (*)();
  auto quit = reinterpret_cast<hook>(dlsym(RTLD_DEFAULT, "gotoblas_dynamic_quit"));
  auto init = reinterpret_cast<hook>(dlsym(RTLD_DEFAULT, "gotoblas_dynamic_init"));
  if (!quit || !init) return false;
  setenv("OPENBLAS_CORETYPE", core, 1);
  quit();
  init();
  return true;
}

bool lapack_usable() {
  static std::once_flag once;
  static bool usable = false;
  std::call_once(once, [] {
    usable = backend_sound();
    for (const char* core : {"SkylakeX", "Haswell", "Sandybridge", "Nehalem"}) {
      if (usable || !reselect_openblas(core)) break;
      usable = backend_sound();
    }
  });
  return usable;
}

}  // namespace

SpectralData lapack_eig(const SymMatrix& sym) {
  Matrix a = sym.entries();
  const Index n = a.rows();
  Vector w(n);
  if (n == 0) return finalize(w, a);
  if (!lapack_usable()) {
    // Unreliable LAPACK backend: Eigen's tridiagonal QR is slower but self-contained.
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) throw NonConvergence("lapack_eig: fallback eigensolver failed");
    return finalize(es.eigenvalues(), es.eigenvectors());
  }
  const lapack_int info = dsyevd(a, w);
  if (info != 0) {
    throw NonConvergence("lapack_eig: dsyevd returned info = " + std::to_string(info));
  }
  return finalize(std::move(w), std::move(a));
}

Vector sym_eigenvalues(const SymMatrix& sym) {
  const Index n = sym.dim();
  if (n <= kJacobiMaxDim) return jacobi_eig(sym, 1e-12).eigenvalues;
  Matrix a = sym.entries();
  Vector w(n);
  if (!lapack_usable()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NonConvergence("sym_eigenvalues: fallback eigensolver failed");
    return es.eigenvalues();
  }
  // dsyev rather than dsyevd: without vectors both end in dsterf, and dsyev measured ~1.8x
  // faster on OpenBLAS 0.3.20.
  const lapack_int info = LAPACKE_dsyev(LAPACK_COL_MAJOR, 'N', 'U', static_cast<lapack_int>(n), a.data(),
                                        static_cast<lapack_int>(n), w.data());
  if (info != 0) throw NonConvergence("sym_eigenvalues: dsyev returned info = " + std::to_string(info));
  return w;
}

SpectralData sym_eig(const SymMatrix& a, double tol, EigenMethod method) {
  check_tol(tol);
  if (method == EigenMethod::Auto) {
    method = a.dim() <= kJacobiMaxDim ? EigenMethod::Jacobi : EigenMethod::Lapack;
  }
  return method == EigenMethod::Jacobi ? jacobi_eig(a, tol) : lapack_eig(a);
}

double schatten_norm(const SpectralData& s, double p) {
  if (s.eigenvalues.size() == 0) return 0.0;
  const Vector abs = s.eigenvalues.cwiseAbs();
  if (p == 1.0) return abs.sum();
  if (p == 2.0) return abs.norm();
  if (std::isinf(p) && p > 0) return abs.maxCoeff();
  throw DomainError("schatten_norm: p must be 1, 2 or inf");
}

double schatten_norm(const SymMatrix& a, double p) {
  if (p == 2.0) return a.entries().norm();
  SpectralData s;
  s.eigenvalues = sym_eigenvalues(a);
  s.source_dim = a.dim();
  return schatten_norm(s, p);
}

SymMatrix spectral_function(const SpectralData& s, const std::function<double(double)>& f,
                            KernelPolicy policy) {
  const Index n = s.eigenvalues.size();
  Vector fv(n);
  for (Index k = 0; k < n; ++k) {
    const double lambda = s.eigenvalues(k);
    if (policy == KernelPolicy::Zero && s.is_zero(lambda)) {
      fv(k) = 0.0;
      continue;
    }
    fv(k) = f(lambda);
    if (!std::isfinite(fv(k))) {
      throw DomainError("spectral_function: f is not finite at eigenvalue " + std::to_string(lambda));
    }
  }
  Matrix scaled = s.eigenvectors * fv.asDiagonal();
  return SymMatrix(scaled * s.eigenvectors.transpose());
}

}  // namespace heatdim
