#pragma once

#include "piccolo/meta.hpp"

#include <vector>

namespace piccolo {

struct WindowRegret {
  long start = 1, end = 1;  // inclusive round range
  double regret = 0;
};

struct RegretReport {
  double static_regret = 0;
  double dynamic_regret = 0;
  double epsilon = 0;          // expressiveness: min accumulated loss / w_{1:N}
  double epsilon_dynamic = 0;  // per-round minima variant
  double average_regret = 0;   // static_regret / w_{1:N}
  double weight_total = 0;
  Vec comparator;
  std::vector<WindowRegret> windows;
};

struct BoundAudit {
  double lhs = 0;         // sum w_n <g_n, pi_n - comparator>
  double rhs = 0;         // m_hat + error_term - gap_term
  double slack = 0;       // rhs - lhs
  double m_hat = 0;       // recomputed from metric snapshots
  double error_term = 0;  // sum (w_n^2 / 2) ||e_n||_{*,n}^2
  double gap_term = 0;    // sum (1/2) ||pi_n - pi_hat_n||_{n-1}^2
  long rounds = 0;
};

// Minimizer of the weighted accumulated loss over the set (exact for linear
// losses; closed form plus projected-gradient polish for quadratics).
Vec comparator(const FeasibleSet& set, const std::vector<LossRecord>& losses,
               const std::vector<double>& weights);

// Exact minimum of a single loss over the set.
double min_loss_over_set(const FeasibleSet& set, const LossRecord& loss);

RegretReport regret_report(const FeasibleSet& set, const std::vector<RoundRecord>& trace,
                           const std::vector<std::pair<long, long>>& windows = {});

// Regret-bound audit. Only algorithms whose update is an exact proximal
// or argmin step are supported (BasicMD, AdaGrad, FTRL, Adam with beta1 = 0).
BoundAudit audit_regret_bound(const BaseAlgorithm& alg, const RunResult& run, const Vec& comp);

// Recomputes the regularization-change budget from the serialized metric
// snapshots (independent of the learner's own tracked value).
double recompute_m_hat(const BaseAlgorithm& alg, const RunResult& run);

// Prefix of the same budget after each round.
std::vector<double> m_hat_prefix_series(const BaseAlgorithm& alg, const RunResult& run);

// Log-log least-squares slope; nonpositive values are floored at 1e-12 and
// reported through `floored`.
double fit_rate(const std::vector<std::pair<double, double>>& n_vs_regret,
                bool* floored = nullptr);

struct FtlBookkeeping {
  std::vector<double> deltas;  // Delta_n, one per round (Delta_1 = 0)
  std::vector<double> gaps;    // per-round follow-the-leader gaps
  double surrogate_regret = 0;
  double min_delta = 0;
  double identity_residual = 0;  // sum(gap - delta) - surrogate_regret
};

FtlBookkeeping ftl_bookkeeping(const BaseAlgorithm& ftrl_alg, const RunResult& run);

}  // namespace piccolo
