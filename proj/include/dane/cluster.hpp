#pragma once

// Simulated m-machine cluster. Machines hold the shard data plus the
// objective built from it; every vector-averaging "communication round"
// is counted explicitly. Averaging sums in machine-index order so runs
// are bitwise reproducible.

#include <cstdio>
#include <functional>

#include "data.hpp"
#include "objectives.hpp"

namespace dane {

namespace detail {
inline std::string fmt_norm(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}
}  // namespace detail

enum class LocalMethod { closed_form_quadratic, inner_gradient_descent };

struct LocalSolverSpec {
  LocalMethod method = LocalMethod::inner_gradient_descent;
  double tol = 1e-10;           // gradient-norm stopping criterion
  long max_inner_iters = 100000;

  LocalSolverSpec() = default;
  LocalSolverSpec(LocalMethod m, double t, long iters) : method(m), tol(t), max_inner_iters(iters) {
    if (!(tol > 0)) throw std::invalid_argument("LocalSolverSpec: tol must be positive");
  }
};

// Deterministic full-gradient descent with Armijo backtracking
// (halving, c = 1e-4). Throws if the gradient-norm tolerance is not
// reached within max_inner_iters, reporting the final gradient norm.
inline Vector gradient_descent(const Objective& obj, Vector w, double tol, long max_iters) {
  double step = 1.0;
  Vector g = obj.gradient(w);
  double fw = obj.value(w);
  for (long it = 0; it < max_iters; ++it) {
    const double gnorm = norm2(g);
    if (gnorm <= tol) return w;
    const double g2 = gnorm * gnorm;
    // grow the step back after successful iterations
    step = std::min(step * 2.0, 1e12);
    Vector trial(w.size());
    double ftrial;
    Vector gtrial;
    bool have_gtrial = false;
    // below this, value differences are rounding noise and the Armijo
    // test is meaningless: control the gradient norm instead
    const double noise = 4e-16 * (std::abs(fw) + 1.0);
    for (;;) {
      for (std::size_t i = 0; i < w.size(); ++i) trial[i] = w[i] - step * g[i];
      const double needed = 1e-4 * step * g2;
      if (needed > noise) {
        ftrial = obj.value(trial);
        if (ftrial <= fw - needed) break;
      } else {
        ftrial = fw;
        gtrial = obj.gradient(trial);
        if (norm2(gtrial) <= (1.0 - 1e-3) * gnorm) {
          have_gtrial = true;
          break;
        }
      }
      step *= 0.5;
      if (step < 1e-20)
        throw std::runtime_error("gradient_descent: line search failed, |g| = " + detail::fmt_norm(gnorm));
    }
    w.swap(trial);
    fw = ftrial;
    g = have_gtrial ? std::move(gtrial) : obj.gradient(w);
  }
  throw std::runtime_error("gradient_descent: max iterations reached, |g| = " +
                           detail::fmt_norm(norm2(obj.gradient(w))));
}

// Minimize a strongly convex subproblem: exact SPD solve when it is
// quadratic, inner gradient descent otherwise.
inline Vector local_solve(const Objective& subproblem, const Vector& start, const LocalSolverSpec& spec) {
  if (const Matrix* H = subproblem.hessian()) {
    // grad(w) = H w - b with b = H*start - grad(start)
    Vector b = H->mul(start);
    axpy(-1.0, subproblem.gradient(start), b);
    return spd_solve(*H, b);
  }
  if (spec.method == LocalMethod::closed_form_quadratic)
    throw std::invalid_argument("local_solve: closed form requested for a non-quadratic subproblem");
  return gradient_descent(subproblem, start, spec.tol, spec.max_inner_iters);
}

class Cluster {
 public:
  using ObjectiveBuilder = std::function<ObjectivePtr(const Dataset&)>;

  Cluster(ShardSet shards, ObjectiveBuilder builder)
      : shards_(std::move(shards)), builder_(std::move(builder)) {
    if (shards_.shards.empty()) throw std::invalid_argument("Cluster: no shards");
    for (const Dataset& s : shards_.shards) machines_.push_back(builder_(s));
    d_ = machines_.front()->dim();
    for (const auto& m : machines_)
      if (m->dim() != d_) throw std::invalid_argument("Cluster: machine dimension mismatch");
  }

  // Objectives only, no shard data (sufficient for everything except
  // subsample-based estimators).
  explicit Cluster(std::vector<ObjectivePtr> machines) : machines_(std::move(machines)) {
    if (machines_.empty()) throw std::invalid_argument("Cluster: no machines");
    d_ = machines_.front()->dim();
    for (const auto& m : machines_)
      if (m->dim() != d_) throw std::invalid_argument("Cluster: machine dimension mismatch");
  }

  int machine_count() const { return static_cast<int>(machines_.size()); }
  int dim() const { return d_; }
  long comm_rounds() const { return comm_rounds_; }
  void reset_comm_rounds() { comm_rounds_ = 0; }

  const Objective& machine(int i) const { return *machines_.at(i); }
  ObjectivePtr machine_ptr(int i) const { return machines_.at(i); }

  bool has_shards() const { return !shards_.shards.empty(); }
  const Dataset& shard(int i) const { return shards_.shards.at(i); }
  ObjectivePtr build_objective(const Dataset& ds) const {
    if (!builder_) throw std::logic_error("Cluster: no objective builder");
    return builder_(ds);
  }

  bool all_quadratic() const {
    for (const auto& m : machines_)
      if (!m->hessian()) return false;
    return true;
  }

  // One communication round: arithmetic mean in machine-index order.
  Vector average_vectors(const std::vector<Vector>& per_machine) {
    if (static_cast<int>(per_machine.size()) != machine_count())
      throw std::invalid_argument("average_vectors: need one vector per machine");
    Vector sum(d_, 0.0);
    for (const Vector& v : per_machine) {
      if (static_cast<int>(v.size()) != d_)
        throw std::invalid_argument("average_vectors: dimension mismatch");
      axpy(1.0, v, sum);
    }
    scale(sum, 1.0 / machine_count());
    ++comm_rounds_;
    return sum;
  }

  // Mean of the local gradients; costs one communication round.
  Vector global_gradient(const Vector& w) {
    std::vector<Vector> grads;
    grads.reserve(machines_.size());
    for (const auto& m : machines_) grads.push_back(m->gradient(w));
    return average_vectors(grads);
  }

  // Measurement-only helpers: these evaluate the pooled objective
  // directly and do not touch the communication counter.
  double pooled_value(const Vector& w) const {
    double s = 0.0;
    for (const auto& m : machines_) s += m->value(w);
    return s / machine_count();
  }

  Vector pooled_gradient(const Vector& w) const {
    Vector g(d_, 0.0);
    for (const auto& m : machines_) axpy(1.0, m->gradient(w), g);
    scale(g, 1.0 / machine_count());
    return g;
  }

  // Pooled quadratic (mean of the per-machine forms); quadratic clusters only.
  QuadraticForm pooled_quadratic() const {
    Matrix A(d_, d_);
    Vector b(d_, 0.0);
    double c = 0.0;
    for (const auto& m : machines_) {
      const auto* q = dynamic_cast<const QuadraticForm*>(m.get());
      if (!q) throw std::logic_error("pooled_quadratic: cluster is not quadratic");
      A.add_scaled(q->A(), 1.0 / machine_count());
      axpy(1.0 / machine_count(), q->b(), b);
      c += q->c() / machine_count();
    }
    return QuadraticForm(std::move(A), std::move(b), c);
  }

 private:
  ShardSet shards_;
  ObjectiveBuilder builder_;
  std::vector<ObjectivePtr> machines_;
  int d_ = 0;
  long comm_rounds_ = 0;
};

}  // namespace dane
