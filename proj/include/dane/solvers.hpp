#pragma once

// Optimization algorithms on a simulated cluster: DANE (general form,
// quadratic closed form, single-machine variant), one-shot averaging
// (plain and bias-corrected), distributed gradient descent, global
// consensus ADMM, an exact Newton oracle and the centralized reference
// solver that anchors every suboptimality measurement.

#include <chrono>

#include "cluster.hpp"

namespace dane {

enum class DaneVariant { average, single_machine };

struct DaneConfig {
  double eta = 1.0;
  double mu = 0.0;
  DaneVariant variant = DaneVariant::average;
  LocalSolverSpec local{};

  void validate() const {
    if (!(eta > 0)) throw std::invalid_argument("DaneConfig: eta must be positive");
    if (mu < 0) throw std::invalid_argument("DaneConfig: mu must be non-negative");
  }
};

struct TraceRow {
  long iter = 0;
  long comm_rounds = 0;
  double objective = 0.0;
  double subopt = 0.0;
  double grad_norm = 0.0;
  double dist_to_opt = 0.0;
  double wall_ms = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  Vector reference_w;
  double reference_value = 0.0;
  bool converged = false;   // a stop-rule target was met
  bool diverged = false;    // suboptimality blew past 1e6x its initial value
  Vector final_w;

  // Iterations needed to reach the given suboptimality, or -1.
  long iters_to_subopt(double eps) const {
    for (const TraceRow& r : rows)
      if (r.subopt <= eps) return r.iter;
    return -1;
  }
};

struct StopRule {
  long max_iters = 100;
  double target_subopt = -1.0;     // disabled when negative
  double target_grad_norm = -1.0;  // disabled when negative

  bool satisfied(double subopt, double grad_norm) const {
    if (target_subopt >= 0 && subopt <= target_subopt) return true;
    if (target_grad_norm >= 0 && grad_norm <= target_grad_norm) return true;
    return false;
  }
};

// base(w) - linear.w + (prox/2) ||w - center||^2. Covers both the DANE
// local subproblem and the ADMM x-update.
class ProxLinearObjective final : public Objective {
 public:
  ProxLinearObjective(ObjectivePtr base, Vector linear, Vector center, double prox)
      : base_(std::move(base)), linear_(std::move(linear)), center_(std::move(center)), prox_(prox) {
    if (static_cast<int>(linear_.size()) != base_->dim() ||
        static_cast<int>(center_.size()) != base_->dim())
      throw std::invalid_argument("ProxLinearObjective: dimension mismatch");
    if (const Matrix* H = base_->hessian()) {
      hess_ = *H;
      hess_->add_diagonal(prox_);
    }
  }

  int dim() const override { return base_->dim(); }

  double value(const Vector& w) const override {
    const Vector diff = w - center_;
    return base_->value(w) - dot(linear_, w) + 0.5 * prox_ * dot(diff, diff);
  }

  Vector gradient(const Vector& w) const override {
    Vector g = base_->gradient(w);
    axpy(-1.0, linear_, g);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += prox_ * (w[i] - center_[i]);
    return g;
  }

  const Matrix* hessian() const override { return hess_ ? &*hess_ : nullptr; }

 private:
  ObjectivePtr base_;
  Vector linear_, center_;
  double prox_;
  std::optional<Matrix> hess_;
};

// Adapter exposing the pooled cluster objective to the centralized solver.
class PooledObjective final : public Objective {
 public:
  explicit PooledObjective(const Cluster& c) : cluster_(c) {}
  int dim() const override { return cluster_.dim(); }
  double value(const Vector& w) const override { return cluster_.pooled_value(w); }
  Vector gradient(const Vector& w) const override { return cluster_.pooled_gradient(w); }

 private:
  const Cluster& cluster_;
};

// Minimizer of one shard objective, gradient norm <= 1e-10.
inline Vector local_erm(const Objective& obj, const LocalSolverSpec& spec = {}) {
  return local_solve(obj, Vector(obj.dim(), 0.0), spec);
}

// (w_hat, phi(w_hat)): exact SPD solve for quadratic clusters, otherwise
// a centralized solve to gradient norm 1e-12.
inline std::pair<Vector, double> reference_optimum(const Cluster& cluster) {
  if (cluster.all_quadratic()) {
    const QuadraticForm pooled = cluster.pooled_quadratic();
    Vector w = pooled.minimizer();
    return {w, pooled.value(w)};
  }
  const PooledObjective pooled(cluster);
  Vector w = gradient_descent(pooled, Vector(cluster.dim(), 0.0), 1e-12, 2000000);
  return {w, pooled.value(w)};
}

// One-shot parameter averaging: exactly one communication round.
inline Vector one_shot_average(Cluster& cluster, const LocalSolverSpec& spec = {}) {
  std::vector<Vector> erms;
  for (int i = 0; i < cluster.machine_count(); ++i) erms.push_back(local_erm(cluster.machine(i), spec));
  return cluster.average_vectors(erms);
}

// Bias-corrected OSA: each machine combines its full-shard ERM with a
// subsample ERM on floor(r*n) examples drawn without replacement, as
// (w1 - r*w2)/(1 - r); one averaging round at the end.
inline Vector osa_bias_corrected(Cluster& cluster, double r, std::uint64_t seed,
                                 const LocalSolverSpec& spec = {}) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("osa_bias_corrected: r must be in (0,1)");
  if (!cluster.has_shards()) throw std::invalid_argument("osa_bias_corrected: cluster carries no shard data");
  RngState base_rng(seed);
  std::vector<Vector> combined;
  for (int k = 0; k < cluster.machine_count(); ++k) {
    const Dataset& shard = cluster.shard(k);
    const int n = shard.size();
    const int sub = static_cast<int>(r * n);
    if (sub < 1) throw std::invalid_argument("osa_bias_corrected: subsample is empty");
    const Vector w1 = local_erm(cluster.machine(k), spec);

    RngState rng = base_rng.spawn(static_cast<std::uint64_t>(k));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(idx[i], idx[static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
    idx.resize(sub);
    const ObjectivePtr sub_obj = cluster.build_objective(shard.rows(idx));
    const Vector w2 = local_erm(*sub_obj, spec);

    Vector wk(w1.size());
    for (std::size_t i = 0; i < wk.size(); ++i) wk[i] = (w1[i] - r * w2[i]) / (1.0 - r);
    combined.push_back(std::move(wk));
  }
  return cluster.average_vectors(combined);
}

// One DANE iteration: global gradient (round 1), per-machine subproblem
// solves, averaged result (round 2). The single-machine variant returns
// machine 1's iterate and skips the second round.
inline Vector dane_step(Cluster& cluster, const Vector& w_prev, const DaneConfig& config) {
  config.validate();
  const Vector g = cluster.global_gradient(w_prev);
  const int m = cluster.machine_count();
  const int upto = config.variant == DaneVariant::single_machine ? 1 : m;
  std::vector<Vector> locals;
  for (int i = 0; i < upto; ++i) {
    Vector linear = cluster.machine(i).gradient(w_prev);
    axpy(-config.eta, g, linear);  // grad_i(w) - eta*grad(w)
    const ProxLinearObjective sub(cluster.machine_ptr(i), std::move(linear), w_prev, config.mu);
    try {
      locals.push_back(local_solve(sub, w_prev, config.local));
    } catch (const std::exception& e) {
      throw std::runtime_error("dane_step: machine " + std::to_string(i) + " failed: " + e.what());
    }
  }
  if (config.variant == DaneVariant::single_machine) return locals.front();
  return cluster.average_vectors(locals);
}

// Closed-form quadratic step: w - eta * mean_i (H_i + mu I)^{-1} grad.
inline Vector dane_quadratic_step(const std::vector<Matrix>& H_list, const Vector& pooled_grad,
                                  const Vector& w_prev, const DaneConfig& config) {
  config.validate();
  if (H_list.empty()) throw std::invalid_argument("dane_quadratic_step: no Hessians");
  Vector mean_step(w_prev.size(), 0.0);
  for (const Matrix& H : H_list) {
    Matrix Hmu = H;
    Hmu.add_diagonal(config.mu);
    axpy(1.0 / H_list.size(), spd_solve(Hmu, pooled_grad), mean_step);
  }
  Vector w = w_prev;
  axpy(-config.eta, mean_step, w);
  return w;
}

// True Newton update with the pooled Hessian (quadratic clusters only).
inline Vector newton_step(Cluster& cluster, const Vector& w_prev, double eta) {
  if (!cluster.all_quadratic()) throw std::invalid_argument("newton_step: cluster is not quadratic");
  const Vector g = cluster.global_gradient(w_prev);
  const QuadraticForm pooled = cluster.pooled_quadratic();
  Vector w = w_prev;
  axpy(-eta, spd_solve(pooled.A(), g), w);
  return w;
}

// Distributed gradient descent; one communication round.
inline Vector dgd_step(Cluster& cluster, const Vector& w_prev, double stepsize) {
  if (!(stepsize > 0)) throw std::invalid_argument("dgd_step: stepsize must be positive");
  const Vector g = cluster.global_gradient(w_prev);
  Vector w = w_prev;
  axpy(-stepsize, g, w);
  return w;
}

struct AdmmState {
  Vector z;
  std::vector<Vector> x, u;
  double primal_residual = 0.0;
  double dual_residual = 0.0;

  static AdmmState initial(const Cluster& cluster) {
    AdmmState s;
    s.z.assign(cluster.dim(), 0.0);
    s.x.assign(cluster.machine_count(), Vector(cluster.dim(), 0.0));
    s.u.assign(cluster.machine_count(), Vector(cluster.dim(), 0.0));
    return s;
  }
};

// Global-consensus ADMM: per-machine proximal solve, consensus average
// (one communication round), dual update.
inline AdmmState admm_step(Cluster& cluster, const AdmmState& state, double penalty,
                           const LocalSolverSpec& spec = {}) {
  if (!(penalty > 0)) throw std::invalid_argument("admm_step: penalty must be positive");
  const int m = cluster.machine_count();
  AdmmState next = state;
  std::vector<Vector> xu(m);
  for (int i = 0; i < m; ++i) {
    const Vector center = state.z - state.u[i];
    const ProxLinearObjective sub(cluster.machine_ptr(i), Vector(cluster.dim(), 0.0), center, penalty);
    try {
      next.x[i] = local_solve(sub, state.x[i], spec);
    } catch (const std::exception& e) {
      throw std::runtime_error("admm_step: machine " + std::to_string(i) + " failed: " + e.what());
    }
    xu[i] = next.x[i] + state.u[i];
  }
  next.z = cluster.average_vectors(xu);
  double primal_sq = 0.0;
  for (int i = 0; i < m; ++i) {
    Vector diff = next.x[i] - next.z;
    primal_sq += dot(diff, diff);
    next.u[i] = state.u[i] + diff;
  }
  next.primal_residual = std::sqrt(primal_sq);
  const Vector dz = next.z - state.z;
  next.dual_residual = penalty * std::sqrt(static_cast<double>(m)) * norm2(dz);
  return next;
}

enum class Algorithm { dane, dane_single, osa, osa_bc, dgd, admm, newton };

struct RunConfig {
  Algorithm algorithm = Algorithm::dane;
  DaneConfig dane{};
  double dgd_stepsize = 0.1;
  double admm_penalty = 1.0;
  double osa_r = 0.5;
  std::uint64_t seed = 0;
  double newton_eta = 1.0;
};

// Iterate an algorithm under a stop rule, recording one trace row per
// iteration (plus the starting point). Measurement columns are computed
// outside the communication accounting. A run whose suboptimality
// exceeds 1e6x its initial value is flagged diverged and stopped; a
// non-finite iterate is an error.
inline Trace run(Cluster& cluster, const RunConfig& config, const StopRule& stop) {
  Trace trace;
  auto [ref_w, ref_value] = reference_optimum(cluster);
  trace.reference_w = ref_w;
  trace.reference_value = ref_value;
  cluster.reset_comm_rounds();
  const auto t0 = std::chrono::steady_clock::now();

  Vector w(cluster.dim(), 0.0);
  AdmmState admm = AdmmState::initial(cluster);

  auto record = [&](long iter, const Vector& wi) {
    TraceRow row;
    row.iter = iter;
    row.comm_rounds = cluster.comm_rounds();
    row.objective = cluster.pooled_value(wi);
    row.subopt = row.objective - ref_value;
    row.grad_norm = norm2(cluster.pooled_gradient(wi));
    row.dist_to_opt = norm2(wi - ref_w);
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    trace.rows.push_back(row);
    return row;
  };

  const TraceRow first = record(0, w);
  const double initial_subopt = std::max(first.subopt, 1e-300);

  if (config.algorithm == Algorithm::osa || config.algorithm == Algorithm::osa_bc) {
    w = config.algorithm == Algorithm::osa
            ? one_shot_average(cluster, config.dane.local)
            : osa_bias_corrected(cluster, config.osa_r, config.seed, config.dane.local);
    const TraceRow row = record(1, w);
    trace.converged = stop.satisfied(row.subopt, row.grad_norm);
    trace.final_w = w;
    return trace;
  }

  for (long t = 1; t <= stop.max_iters; ++t) {
    switch (config.algorithm) {
      case Algorithm::dane:
        w = dane_step(cluster, w, config.dane);
        break;
      case Algorithm::dane_single: {
        DaneConfig cfg = config.dane;
        cfg.variant = DaneVariant::single_machine;
        w = dane_step(cluster, w, cfg);
        break;
      }
      case Algorithm::dgd:
        w = dgd_step(cluster, w, config.dgd_stepsize);
        break;
      case Algorithm::admm:
        admm = admm_step(cluster, admm, config.admm_penalty, config.dane.local);
        w = admm.z;
        break;
      case Algorithm::newton:
        w = newton_step(cluster, w, config.newton_eta);
        break;
      default:
        throw std::logic_error("run: unhandled algorithm");
    }
    for (double x : w)
      if (!std::isfinite(x))
        throw std::runtime_error("run: non-finite iterate at iteration " + std::to_string(t));
    const TraceRow row = record(t, w);
    if (stop.satisfied(row.subopt, row.grad_norm)) {
      trace.converged = true;
      break;
    }
    if (row.subopt > 1e6 * initial_subopt) {
      trace.diverged = true;
      break;
    }
  }
  trace.final_w = w;
  return trace;
}

}  // namespace dane
