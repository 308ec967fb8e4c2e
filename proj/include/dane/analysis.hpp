#pragma once

// Computable theory quantities: contraction norms, the mu selection and
// its bound, Hessian concentration, the general-loss rate rho, Bregman
// divergences, and the Monte Carlo studies for the one-shot-averaging
// lower bound and its bias-corrected variant.

#include "solvers.hpp"

namespace dane {

// ||I - eta * Htilde^{-1} H||_2 with Htilde^{-1} the mean of (H_i + mu I)^{-1}.
inline double contraction_factor(const std::vector<Matrix>& H_list, double eta, double mu) {
  if (H_list.empty()) throw std::invalid_argument("contraction_factor: no Hessians");
  const int d = H_list.front().rows();
  Matrix H(d, d);
  Matrix Htilde_inv(d, d);
  for (const Matrix& Hi : H_list) {
    H.add_scaled(Hi, 1.0 / H_list.size());
    Matrix Hmu = Hi;
    Hmu.add_diagonal(mu);
    Htilde_inv.add_scaled(spd_inverse(Hmu), 1.0 / H_list.size());
  }
  Matrix M = Matrix::identity(d);
  M.add_scaled(Htilde_inv.mul(H), -eta);
  return spectral_norm(M);
}

// mu = max(0, 8 beta^2 / lam - lam).
inline double optimal_mu(double lam, double beta) {
  if (!(lam > 0)) throw std::invalid_argument("optimal_mu: lam must be positive");
  if (beta < 0) throw std::invalid_argument("optimal_mu: beta must be non-negative");
  return std::max(0.0, 8.0 * beta * beta / lam - lam);
}

// Two-branch contraction bound for eta = 1, mu = optimal_mu(lam, beta).
inline double lemma2_bound(double lam, double beta) {
  if (!(lam > 0)) throw std::invalid_argument("lemma2_bound: lam must be positive");
  const double q = 4.0 * beta * beta / (lam * lam);
  return q <= 0.5 ? q : 1.0 - lam * lam / (16.0 * beta * beta);
}

// Pair (||I - (H + mu I)^{-1} H||_2, mu / (lambda_min + mu)); the two
// agree for any symmetric PD H.
inline std::pair<double, double> lemma_hh1_check(const Matrix& H, double mu) {
  if (mu < 0) throw std::invalid_argument("lemma_hh1_check: mu must be non-negative");
  const int d = H.rows();
  Matrix Hmu = H;
  Hmu.add_diagonal(mu);
  Matrix M = Matrix::identity(d);
  M.add_scaled(spd_inverse(Hmu).mul(H), -1.0);
  const double computed = spectral_norm(M);
  const double lam_min = min_eigenvalue(H);
  return {computed, mu / (lam_min + mu)};
}

// beta = max_i ||H_i - H||_2 plus the per-machine deviations.
inline std::pair<double, Vector> hessian_deviation(const std::vector<Matrix>& H_list) {
  if (H_list.empty()) throw std::invalid_argument("hessian_deviation: empty list");
  const int d = H_list.front().rows();
  Matrix H(d, d);
  for (const Matrix& Hi : H_list) H.add_scaled(Hi, 1.0 / H_list.size());
  Vector devs;
  double beta = 0.0;
  for (const Matrix& Hi : H_list) {
    const double dev = spectral_norm(Hi - H);
    devs.push_back(dev);
    beta = std::max(beta, dev);
  }
  return {beta, devs};
}

// sqrt(32 L^2 log(dm/delta) / n), natural log.
inline double lemma3_bound(double L, int d, int m, double delta, long n) {
  if (L < 0 || d <= 0 || m <= 0 || n <= 0 || !(delta > 0 && delta < 1))
    throw std::invalid_argument("lemma3_bound: bad parameters");
  return std::sqrt(32.0 * L * L * std::log(static_cast<double>(d) * m / delta) / n);
}

// rho = (1/m) sum_i [1/(mu+L_i) - eta*L/(2(mu+lambda_i)^2)] * eta * lambda.
inline double rho_general(const Vector& lam_i, const Vector& L_i, double lam, double L, double eta,
                          double mu) {
  if (lam_i.size() != L_i.size() || lam_i.empty())
    throw std::invalid_argument("rho_general: per-machine constants mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < lam_i.size(); ++i) {
    if (!(mu + lam_i[i] > 0)) throw std::invalid_argument("rho_general: mu + lambda_i must be positive");
    s += 1.0 / (mu + L_i[i]) - eta * L / (2.0 * (mu + lam_i[i]) * (mu + lam_i[i]));
  }
  return (s / lam_i.size()) * eta * lam;
}

// D_h(w_to; w_from) = h(w_to) - h(w_from) - <grad h(w_from), w_to - w_from>.
inline double bregman(const Objective& h, const Vector& w_to, const Vector& w_from) {
  return h.value(w_to) - h.value(w_from) - dot(h.gradient(w_from), w_to - w_from);
}

struct ContractionReport {
  double predicted = 0.0;            // ||I - eta*Htilde^{-1} H||_2
  Vector measured_per_iter;          // ||w_t - w_hat|| / ||w_{t-1} - w_hat||
  double beta = 0.0;                 // max_i ||H_i - H||_2
  double lemma3_bound_value = 0.0;
  double lambda_min = 0.0;
  double L_max = 0.0;
};

inline ContractionReport contraction_report(const std::vector<Matrix>& H_list, double eta, double mu,
                                            const Trace& trace, double delta, long n_per_shard) {
  ContractionReport rep;
  rep.predicted = contraction_factor(H_list, eta, mu);
  auto [beta, devs] = hessian_deviation(H_list);
  rep.beta = beta;
  const int d = H_list.front().rows();
  Matrix H(d, d);
  for (const Matrix& Hi : H_list) H.add_scaled(Hi, 1.0 / H_list.size());
  const Vector evals = sym_eigenvalues(H);
  rep.lambda_min = evals.front();
  rep.L_max = evals.back();
  rep.lemma3_bound_value =
      lemma3_bound(rep.L_max, d, static_cast<int>(H_list.size()), delta, n_per_shard);
  for (std::size_t t = 1; t < trace.rows.size(); ++t) {
    const double prev = trace.rows[t - 1].dist_to_opt;
    if (prev > 0) rep.measured_per_iter.push_back(trace.rows[t].dist_to_opt / prev);
  }
  return rep;
}

struct LowerBoundReport {
  long n = 0;
  int m = 0;
  double lam = 0.0;
  long trials = 0;
  double mean_single_machine_erm = 0.0;
  double se_single_machine_erm = 0.0;
  double mean_osa = 0.0;
  double mean_pooled_erm = 0.0;
  double mse_osa = 0.0;
  double mse_pooled = 0.0;
  double wstar = 0.0;
};

// Monte Carlo study of one-shot averaging on the scalar exp construction:
// standard normal samples, per-machine ERMs on the clamped domain, the
// averaged estimator and the pooled ERM, all measured against the
// population optimum w* (root of w + exp(w) = 0).
inline LowerBoundReport lowbound_experiment(long n, int m, double lam, long trials,
                                            std::uint64_t seed) {
  if (n < 9) throw std::invalid_argument("lowbound_experiment: n must be >= 9");
  if (m < 1) throw std::invalid_argument("lowbound_experiment: m must be >= 1");
  if (!(lam > 0) || lam > 1.0 / (9.0 * std::sqrt(static_cast<double>(n))))
    throw std::invalid_argument("lowbound_experiment: need 0 < lam <= 1/(9 sqrt(n))");
  if (trials < 100) throw std::invalid_argument("lowbound_experiment: trials must be >= 100");

  LowerBoundReport rep;
  rep.n = n;
  rep.m = m;
  rep.lam = lam;
  rep.trials = trials;
  rep.wstar = exp_plus_id_root(0.0);

  RngState base(seed);
  double sum_w1 = 0.0, sum_w1_sq = 0.0, sum_osa = 0.0, sum_pooled = 0.0;
  double sum_sq_osa = 0.0, sum_sq_pooled = 0.0;
  Vector shard(n);
  for (long t = 0; t < trials; ++t) {
    RngState rng = base.spawn(static_cast<std::uint64_t>(t));
    double osa_sum = 0.0, pooled_total = 0.0;
    double w1 = 0.0;
    for (int k = 0; k < m; ++k) {
      double shard_total = 0.0;
      for (long j = 0; j < n; ++j) {
        shard[j] = rng.normal();
        shard_total += shard[j];
      }
      const double wk = std::clamp(exp_plus_id_root(shard_total / (lam * n)), -2.0 / lam,
                                   std::log(1.0 / lam));
      if (k == 0) w1 = wk;
      osa_sum += wk;
      pooled_total += shard_total;
    }
    const double osa = osa_sum / m;
    const double pooled = std::clamp(exp_plus_id_root(pooled_total / (lam * n * m)), -2.0 / lam,
                                     std::log(1.0 / lam));
    sum_w1 += w1;
    sum_w1_sq += w1 * w1;
    sum_osa += osa;
    sum_pooled += pooled;
    sum_sq_osa += (osa - rep.wstar) * (osa - rep.wstar);
    sum_sq_pooled += (pooled - rep.wstar) * (pooled - rep.wstar);
  }
  rep.mean_single_machine_erm = sum_w1 / trials;
  const double var_w1 = sum_w1_sq / trials - rep.mean_single_machine_erm * rep.mean_single_machine_erm;
  rep.se_single_machine_erm = std::sqrt(std::max(var_w1, 0.0) / trials);
  rep.mean_osa = sum_osa / trials;
  rep.mean_pooled_erm = sum_pooled / trials;
  rep.mse_osa = sum_sq_osa / trials;
  rep.mse_pooled = sum_sq_pooled / trials;
  return rep;
}

struct BiasCorrectedReport {
  long n = 0;
  long trials = 0;
  double lam = 0.0;
  double mean_combined = 0.0;  // E[2 w_full - w_half]
  double se_combined = 0.0;
  double mean_full = 0.0;      // E[w_full]
  double mean_half = 0.0;      // E[w_half]
  double wstar = 0.0;
};

// Bias-corrected one-shot averaging on the same construction with
// lam = 1/(10 sqrt(n)) and r = 1/2, on the unconstrained domain: the
// combination 2*w_full - w_half stays biased away from w*.
inline BiasCorrectedReport lowbound_bias_corrected(long n, long trials, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("lowbound_bias_corrected: n must be >= 2");
  if (trials < 1) throw std::invalid_argument("lowbound_bias_corrected: trials must be >= 1");
  BiasCorrectedReport rep;
  rep.n = n;
  rep.trials = trials;
  rep.lam = 1.0 / (10.0 * std::sqrt(static_cast<double>(n)));
  rep.wstar = exp_plus_id_root(0.0);

  const long half = n / 2;
  RngState base(seed);
  double sum_c = 0.0, sum_c_sq = 0.0, sum_full = 0.0, sum_half = 0.0;
  std::vector<double> z(n);
  std::vector<int> idx(n);
  for (long t = 0; t < trials; ++t) {
    RngState rng = base.spawn(static_cast<std::uint64_t>(t));
    double total = 0.0;
    for (long j = 0; j < n; ++j) {
      z[j] = rng.normal();
      total += z[j];
    }
    // subsample of floor(n/2) examples without replacement
    std::iota(idx.begin(), idx.end(), 0);
    for (long i = n - 1; i > 0; --i)
      std::swap(idx[i], idx[static_cast<long>(rng.below(static_cast<std::uint64_t>(i) + 1))]);
    double sub_total = 0.0;
    for (long j = 0; j < half; ++j) sub_total += z[idx[j]];

    const double w_full = exp_plus_id_root(total / (rep.lam * n));
    const double w_half = exp_plus_id_root(sub_total / (rep.lam * half));
    const double combined = 2.0 * w_full - w_half;
    sum_c += combined;
    sum_c_sq += combined * combined;
    sum_full += w_full;
    sum_half += w_half;
  }
  rep.mean_combined = sum_c / trials;
  const double var_c = sum_c_sq / trials - rep.mean_combined * rep.mean_combined;
  rep.se_combined = std::sqrt(std::max(var_c, 0.0) / trials);
  rep.mean_full = sum_full / trials;
  rep.mean_half = sum_half / trials;
  return rep;
}

}  // namespace dane
