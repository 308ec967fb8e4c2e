#pragma once

// Objective-function abstractions: the smooth convex contract every
// machine exposes, explicit quadratic forms (ridge regression), the
// regularized smooth-hinge GLM, and the scalar exp construction used by
// the one-shot-averaging lower-bound experiments.

#include <cmath>
#include <memory>
#include <optional>

#include "numkit.hpp"

namespace dane {

class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dim() const = 0;
  virtual double value(const Vector& w) const = 0;
  virtual Vector gradient(const Vector& w) const = 0;
  // Present iff the objective is quadratic (constant Hessian).
  virtual const Matrix* hessian() const { return nullptr; }
};

using ObjectivePtr = std::shared_ptr<const Objective>;

// value(w) = 1/2 w^T A w - b^T w + c, with A symmetric PSD.
class QuadraticForm final : public Objective {
 public:
  QuadraticForm(Matrix A, Vector b, double c) : A_(std::move(A)), b_(std::move(b)), c_(c) {
    if (A_.rows() != A_.cols() || A_.rows() != static_cast<int>(b_.size()))
      throw std::invalid_argument("QuadraticForm: shape mismatch");
    if (!A_.symmetric(1e-12)) throw std::invalid_argument("QuadraticForm: A not symmetric");
  }

  int dim() const override { return A_.rows(); }

  double value(const Vector& w) const override {
    return 0.5 * dot(w, A_.mul(w)) - dot(b_, w) + c_;
  }

  Vector gradient(const Vector& w) const override {
    Vector g = A_.mul(w);
    axpy(-1.0, b_, g);
    return g;
  }

  const Matrix* hessian() const override { return &A_; }

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  double c() const { return c_; }

  Vector minimizer() const { return spd_solve(A_, b_); }

 private:
  Matrix A_;
  Vector b_;
  double c_;
};

// Ridge regression in the form (1/n) sum (<x_i,w> - y_i)^2 + reg*||w||^2,
// canonicalized as a QuadraticForm: A = (2/n) X^T X + 2*reg*I,
// b = (2/n) X^T y, c = (1/n) ||y||^2.
inline std::shared_ptr<QuadraticForm> quadratic_from_ridge(const Matrix& features,
                                                           const Vector& targets, double reg) {
  const int n = features.rows();
  const int d = features.cols();
  if (n < 1) throw std::invalid_argument("quadratic_from_ridge: empty data");
  if (static_cast<int>(targets.size()) != n)
    throw std::invalid_argument("quadratic_from_ridge: target count mismatch");
  if (reg < 0) throw std::invalid_argument("quadratic_from_ridge: negative regularizer");
  Matrix A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += features(k, i) * features(k, j);
      A(i, j) = A(j, i) = (2.0 / n) * s;
    }
  A.add_diagonal(2.0 * reg);
  Vector b = features.tmul(targets);
  scale(b, 2.0 / n);
  const double c = dot(targets, targets) / n;
  return std::make_shared<QuadraticForm>(std::move(A), std::move(b), c);
}

// Smooth hinge: 0 for a >= 1, 1/2 - a for a <= 0, (1-a)^2/2 between.
inline double smooth_hinge(double a) {
  if (a >= 1.0) return 0.0;
  if (a <= 0.0) return 0.5 - a;
  return 0.5 * (1.0 - a) * (1.0 - a);
}

inline double smooth_hinge_deriv(double a) {
  if (a >= 1.0) return 0.0;
  if (a <= 0.0) return -1.0;
  return a - 1.0;
}

// (1/n) sum l(y_i <x_i,w>) + (reg/2) ||w||^2 with l the smooth hinge.
class SmoothHingeGLM final : public Objective {
 public:
  SmoothHingeGLM(Matrix features, std::vector<int> labels, double reg)
      : X_(std::move(features)), y_(std::move(labels)), reg_(reg) {
    if (X_.rows() != static_cast<int>(y_.size()))
      throw std::invalid_argument("SmoothHingeGLM: label count mismatch");
    if (reg_ < 0) throw std::invalid_argument("SmoothHingeGLM: negative regularizer");
    for (int y : y_)
      if (y != 1 && y != -1) throw std::invalid_argument("SmoothHingeGLM: labels must be +-1");
  }

  int dim() const override { return X_.cols(); }

  double value(const Vector& w) const override {
    const Vector margins = X_.mul(w);
    double s = 0.0;
    for (int i = 0; i < X_.rows(); ++i) s += smooth_hinge(y_[i] * margins[i]);
    return s / X_.rows() + 0.5 * reg_ * dot(w, w);
  }

  Vector gradient(const Vector& w) const override {
    const int n = X_.rows();
    const Vector margins = X_.mul(w);
    Vector coeff(n);
    for (int i = 0; i < n; ++i) coeff[i] = y_[i] * smooth_hinge_deriv(y_[i] * margins[i]) / n;
    Vector g = X_.tmul(coeff);
    axpy(reg_, w, g);
    return g;
  }

  double reg() const { return reg_; }

 private:
  Matrix X_;
  std::vector<int> y_;
  double reg_;
};

// Scalar instantaneous loss f(w;z) = lam*(w^2/2 + exp(w)) - z*w, which is
// lam-strongly convex on the interval [-2/lam, log(1/lam)].
struct ExpScalarLoss {
  double lam;

  explicit ExpScalarLoss(double lam_) : lam(lam_) {
    if (!(lam > 0)) throw std::invalid_argument("ExpScalarLoss: lam must be positive");
  }

  double domain_lo() const { return -2.0 / lam; }
  double domain_hi() const { return std::log(1.0 / lam); }

  double value(double w, double z) const { return lam * (0.5 * w * w + std::exp(w)) - z * w; }
  double deriv(double w, double z) const { return lam * (w + std::exp(w)) - z; }
  double second_deriv(double w) const { return lam * (1.0 + std::exp(w)); }
};

// Unique root of w + exp(w) = c. Safeguarded Newton with a bisection
// fallback on an analytic bracket; |residual| <= 1e-12 at the answer
// (plus a term of order eps*|c|, the evaluation granularity of exp).
inline double exp_plus_id_root(double c) {
  double lo = std::min(c - 1.0, -1.0);
  while (lo + std::exp(lo) > c) lo -= std::max(1.0, std::abs(lo));
  double hi = std::max(c, 1.0);
  while (hi + std::exp(hi) < c) hi += std::max(1.0, hi);
  double w = std::clamp(c > 0 ? std::log(std::max(c, 1e-300)) : c, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double ew = std::exp(w);
    const double f = w + ew - c;
    if (std::abs(f) <= 1e-12 + 4e-15 * std::abs(c)) return w;
    if (f > 0)
      hi = w;
    else
      lo = w;
    double step = f / (1.0 + ew);
    double next = w - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    w = next;
  }
  return w;
}

// Minimizer of (1/n) sum f(w; z_i) over the domain, i.e. the root of
// lam*n*(w + exp(w)) = sum z_i, clamped to [-2/lam, log(1/lam)].
inline double exp_scalar_erm(const Vector& samples, double lam) {
  if (samples.empty()) throw std::invalid_argument("exp_scalar_erm: no samples");
  const ExpScalarLoss loss(lam);
  const double total = std::accumulate(samples.begin(), samples.end(), 0.0);
  const double root = exp_plus_id_root(total / (lam * samples.size()));
  return std::clamp(root, loss.domain_lo(), loss.domain_hi());
}

// Unconstrained variant used by the bias-correction study.
inline double exp_scalar_erm_unclamped(const Vector& samples, double lam) {
  if (samples.empty()) throw std::invalid_argument("exp_scalar_erm: no samples");
  if (!(lam > 0)) throw std::invalid_argument("exp_scalar_erm: lam must be positive");
  const double total = std::accumulate(samples.begin(), samples.end(), 0.0);
  return exp_plus_id_root(total / (lam * samples.size()));
}

// lambda = sqrt(G^2 / (B^2 N)), the regularizer matched to the sample size.
inline double regularizer_for_sample_size(double G, double B, double N) {
  if (!(G > 0) || !(B > 0) || !(N > 0))
    throw std::invalid_argument("regularizer_for_sample_size: inputs must be positive");
  return std::sqrt(G * G / (B * B * N));
}

struct RegularizerPolicy {
  double G, B;
  long N;
  double lambda() const { return regularizer_for_sample_size(G, B, static_cast<double>(N)); }
};

}  // namespace dane
