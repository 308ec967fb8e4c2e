#pragma once

// Dense column-major linear algebra, SPD solves, spectral norms and a
// seeded RNG. Everything here is plain double precision; problem sizes
// stay below d ~ 1000 so direct methods are fine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace dane {

using Vector = std::vector<double>;

inline void check_finite(const Vector& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline void axpy(double alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vector& v, double alpha) {
  for (double& x : v) x *= alpha;
}

inline Vector operator-(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector sub: dimension mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vector operator+(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector add: dimension mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vector operator*(double alpha, const Vector& v) {
  Vector r(v);
  scale(r, alpha);
  return r;
}

// Column-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("Matrix: non-positive shape");
  }

  static Matrix identity(int n) {
    Matrix I(n, n);
    for (int i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  static Matrix diag(const Vector& d) {
    Matrix D(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) D(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return D;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(c) * rows_ + r]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(c) * rows_ + r]; }

  const std::vector<double>& data() const { return data_; }

  Vector mul(const Vector& x) const {
    if (static_cast<int>(x.size()) != cols_) throw std::invalid_argument("Matrix::mul: dimension mismatch");
    Vector y(rows_, 0.0);
    for (int c = 0; c < cols_; ++c) {
      const double xc = x[c];
      const double* col = &data_[static_cast<std::size_t>(c) * rows_];
      for (int r = 0; r < rows_; ++r) y[r] += col[r] * xc;
    }
    return y;
  }

  // y = A^T x
  Vector tmul(const Vector& x) const {
    if (static_cast<int>(x.size()) != rows_) throw std::invalid_argument("Matrix::tmul: dimension mismatch");
    Vector y(cols_, 0.0);
    for (int c = 0; c < cols_; ++c) {
      const double* col = &data_[static_cast<std::size_t>(c) * rows_];
      double s = 0.0;
      for (int r = 0; r < rows_; ++r) s += col[r] * x[r];
      y[c] = s;
    }
    return y;
  }

  Matrix transpose() const {
    Matrix T(cols_, rows_);
    for (int c = 0; c < cols_; ++c)
      for (int r = 0; r < rows_; ++r) T(c, r) = (*this)(r, c);
    return T;
  }

  Matrix mul(const Matrix& B) const {
    if (cols_ != B.rows_) throw std::invalid_argument("Matrix::mul: dimension mismatch");
    Matrix C(rows_, B.cols_);
    for (int j = 0; j < B.cols_; ++j)
      for (int k = 0; k < cols_; ++k) {
        const double bkj = B(k, j);
        if (bkj == 0.0) continue;
        const double* col = &data_[static_cast<std::size_t>(k) * rows_];
        double* out = &C.data_[static_cast<std::size_t>(j) * rows_];
        for (int r = 0; r < rows_; ++r) out[r] += col[r] * bkj;
      }
    return C;
  }

  Matrix& add_scaled(const Matrix& B, double alpha) {
    if (rows_ != B.rows_ || cols_ != B.cols_) throw std::invalid_argument("add_scaled: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * B.data_[i];
    return *this;
  }

  Matrix& operator*=(double alpha) {
    for (double& x : data_) x *= alpha;
    return *this;
  }

  Matrix& add_diagonal(double alpha) {
    if (rows_ != cols_) throw std::invalid_argument("add_diagonal: not square");
    for (int i = 0; i < rows_; ++i) (*this)(i, i) += alpha;
    return *this;
  }

  bool finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
  }

  // Symmetry check with relative tolerance against the largest entry.
  bool symmetric(double rel_tol = 1e-12) const {
    if (rows_ != cols_) return false;
    const double scale = std::max(max_abs(), 1.0);
    for (int c = 0; c < cols_; ++c)
      for (int r = 0; r < c; ++r)
        if (std::abs((*this)(r, c) - (*this)(c, r)) > rel_tol * scale) return false;
    return true;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator-(const Matrix& A, const Matrix& B) {
  Matrix C = A;
  C.add_scaled(B, -1.0);
  return C;
}

inline Matrix operator+(const Matrix& A, const Matrix& B) {
  Matrix C = A;
  C.add_scaled(B, 1.0);
  return C;
}

// Unpivoted Cholesky factorization of a symmetric PD matrix, L L^T = A.
// Throws on a non-positive pivot instead of propagating NaNs.
class Cholesky {
 public:
  explicit Cholesky(const Matrix& A) : L_(A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("Cholesky: not square");
    if (!A.finite()) throw std::invalid_argument("Cholesky: non-finite input");
    if (!A.symmetric(1e-12)) throw std::invalid_argument("Cholesky: matrix not symmetric");
    const int n = A.rows();
    for (int j = 0; j < n; ++j) {
      double d = L_(j, j);
      for (int k = 0; k < j; ++k) d -= L_(j, k) * L_(j, k);
      if (d <= 0.0 || !std::isfinite(d))
        throw std::runtime_error("Cholesky: non-positive pivot at column " + std::to_string(j));
      const double ljj = std::sqrt(d);
      L_(j, j) = ljj;
      for (int i = j + 1; i < n; ++i) {
        double s = L_(i, j);
        for (int k = 0; k < j; ++k) s -= L_(i, k) * L_(j, k);
        L_(i, j) = s / ljj;
      }
      for (int i = 0; i < j; ++i) L_(i, j) = 0.0;
    }
  }

  Vector solve(const Vector& b) const {
    const int n = L_.rows();
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("Cholesky::solve: dimension mismatch");
    Vector y(b);
    for (int i = 0; i < n; ++i) {
      double s = y[i];
      for (int k = 0; k < i; ++k) s -= L_(i, k) * y[k];
      y[i] = s / L_(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = y[i];
      for (int k = i + 1; k < n; ++k) s -= L_(k, i) * y[k];
      y[i] = s / L_(i, i);
    }
    return y;
  }

 private:
  Matrix L_;
};

// Solve A x = b for symmetric positive definite A.
inline Vector spd_solve(const Matrix& A, const Vector& b) { return Cholesky(A).solve(b); }

inline Matrix spd_inverse(const Matrix& A) {
  Cholesky chol(A);
  const int n = A.rows();
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    Vector col = chol.solve(e);
    for (int i = 0; i < n; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

// Eigenvalues (and optionally eigenvectors) of a symmetric matrix via
// cyclic Jacobi rotations. Returns eigenvalues in ascending order.
inline Vector sym_eigenvalues(const Matrix& A_in, Matrix* eigvecs = nullptr) {
  if (A_in.rows() != A_in.cols()) throw std::invalid_argument("sym_eigenvalues: not square");
  const int n = A_in.rows();
  Matrix A = A_in;
  Matrix V = Matrix::identity(n);
  const double base = std::max(A.max_abs(), 1.0);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(A(p, q)));
    if (off <= 1e-15 * base) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::abs(apq) <= 1e-18 * base) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  Vector evals(n);
  for (int i = 0; i < n; ++i) evals[i] = A(i, i);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return evals[a] < evals[b]; });
  Vector sorted(n);
  for (int i = 0; i < n; ++i) sorted[i] = evals[order[i]];
  if (eigvecs) {
    Matrix W(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) W(i, j) = V(i, order[j]);
    *eigvecs = W;
  }
  return sorted;
}

inline double min_eigenvalue(const Matrix& A) { return sym_eigenvalues(A).front(); }

// Largest singular value. Power iteration on A^T A with a fixed
// normalized all-ones start, tolerance 1e-10, cap 10*d iterations;
// falls back to a full symmetric eigen-solve when it fails to settle.
inline double spectral_norm(const Matrix& A) {
  if (!A.finite()) throw std::invalid_argument("spectral_norm: non-finite input");
  const int d = A.cols();
  Vector v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  double lambda_prev = 0.0;
  bool converged = false;
  const int cap = 10 * d;
  for (int it = 0; it < cap; ++it) {
    Vector w = A.tmul(A.mul(v));  // (A^T A) v
    const double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    scale(w, 1.0 / nw);
    const double lambda = dot(w, A.tmul(A.mul(w)));
    v = std::move(w);
    if (it > 0 && std::abs(lambda - lambda_prev) <= 1e-10 * std::max(lambda, 1e-300)) {
      lambda_prev = lambda;
      converged = true;
      break;
    }
    lambda_prev = lambda;
  }
  if (!converged && d <= 600) {
    Matrix AtA(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int k = 0; k < A.rows(); ++k) s += A(k, i) * A(k, j);
        AtA(i, j) = s;
      }
    return std::sqrt(std::max(0.0, sym_eigenvalues(AtA).back()));
  }
  return std::sqrt(std::max(0.0, lambda_prev));
}

// Seeded RNG: xoshiro256++ initialized through splitmix64, uniform
// doubles from the top 53 bits, normals via Box-Muller (each pair is
// drawn from two uniforms; the sine branch is held as a spare for the
// next call). Identical seeds give identical streams on every platform.
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& si : s_) {
      // splitmix64
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      si = z ^ (z >> 31);
    }
  }

  std::uint64_t seed() const { return seed_; }
  static const char* algorithm() { return "xoshiro256++/box-muller"; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in (0, 1].
  double uniform() {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  // One Box-Muller pair.
  std::pair<double, double> normal_pair() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    auto [z0, z1] = normal_pair();
    spare_ = z1;
    have_spare_ = true;
    return z0;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Derive an independent stream, used for per-trial seeding.
  RngState spawn(std::uint64_t stream) const { return RngState(seed_ ^ (0x5851f42d4c957f2dULL * (stream + 1))); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t seed_;
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Independent normals with per-coordinate variance cov_diag[i], shifted by mean.
inline Vector gaussian_vector(RngState& rng, int dim, double mean, const Vector& cov_diag) {
  if (static_cast<int>(cov_diag.size()) != dim)
    throw std::invalid_argument("gaussian_vector: cov_diag dimension mismatch");
  for (double v : cov_diag)
    if (!(v > 0.0)) throw std::invalid_argument("gaussian_vector: non-positive variance");
  Vector out(dim);
  for (int i = 0; i < dim; ++i) out[i] = mean + std::sqrt(cov_diag[i]) * rng.normal();
  return out;
}

}  // namespace dane
