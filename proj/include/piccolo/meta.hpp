#pragma once

#include "piccolo/base_alg.hpp"
#include "piccolo/models.hpp"
#include "piccolo/problems.hpp"

#include <vector>

namespace piccolo {

enum class MetaMode { Piccolo, ModelFree, ModelBased, Dyna };

struct RoundRecord {
  long n = 0;
  double w = 1.0;
  Vec pi_hat, pi, ghat, g, e;
  double e_dual = 0;         // ||e_n||_{*,n} under H_n
  double gap_prev = 0;       // ||pi_n - pi_hat_n||_{n-1} under H_{n-1}
  double reg_increment = 0;  // growth of the tracked M statistic this round
  double loss = 0;           // exact l_n(pi_n)
  double performance = std::numeric_limits<double>::quiet_NaN();
  double fp_residual = std::numeric_limits<double>::quiet_NaN();
  LossRecord exact_loss;
  MetricSnapshot metric_before;  // H_{n-1} (after shift, when enabled)
  MetricSnapshot metric_after;   // H_n
  double ftrl_kappa = 0;         // proximal coefficient appended this round (FTRL)
};

struct RunResult {
  std::vector<RoundRecord> trace;
  Vec pi_bar;  // weighted random iterate, pi_{K-1} with K=1 mapped to pi_1
  long sampled_k = 1;
  double m_hat_final = 0;
  MetricSnapshot metric_initial;  // H_0
  Vec initial_decision;           // pi_1
  double ftrl_kappa0 = 0;         // coefficient of the initial proximal term
  bool aborted = false;
  long aborted_round = 0;
};

struct RunOptions {
  MetaMode mode = MetaMode::Piccolo;
  bool shift_enabled = false;
  bool fixed_point = false;
  FixedPointConfig fp;
  long rounds = 100;
};

// Prediction step: one update against the frozen regularizer. Returns the new
// learner state together with the (possibly shifted) regularizer to continue
// the round with; the regularizer is otherwise untouched.
std::pair<LearnerState, RegularizerState> prediction_step(const BaseAlgorithm& alg,
                                                          const LearnerState& h_hat,
                                                          const RegularizerState& H_prev,
                                                          const Vec& ghat, double w,
                                                          bool shift_enabled);

// Correction step: adapt then update along the mode's correction direction.
std::pair<RegularizerState, LearnerState> correction_step(const BaseAlgorithm& alg,
                                                          const LearnerState& h_n,
                                                          const RegularizerState& H_prev,
                                                          const Vec& e, const Vec& g, double w,
                                                          MetaMode mode);

RunResult run(const Problem& problem, const BaseAlgorithm& alg, PredictiveModel& model,
              const WeightSchedule& schedule, const RunOptions& opt, const Vec& pi1,
              std::uint64_t base_seed, std::uint64_t seed_index);

// Max trajectory deviation between the recomposed two-step learner (constant
// regularization mirror descent) and the classical optimistic mirror descent
// recursion, over the given gradient/prediction streams.
double equivalence_check_omd(const BregmanGeometry& geom, const FeasibleSet& set, const Vec& x0,
                             const std::vector<Vec>& gradients, const std::vector<Vec>& predictions,
                             double eta);

// Same against the direct two-line follow-the-regularized-leader recursion
// with proximal regularizers.
double equivalence_check_mobil(const BaseAlgorithm& ftrl_alg, const WeightSchedule& schedule,
                               const Vec& pi1, const std::vector<Vec>& gradients,
                               const std::vector<Vec>& predictions);

}  // namespace piccolo
