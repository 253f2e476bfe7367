#pragma once

#include "piccolo/base_alg.hpp"
#include "piccolo/problems.hpp"

#include <deque>
#include <memory>

namespace piccolo {

enum class ModelKind {
  Zero,
  LastGradient,
  ReplayAverage,
  OracleTrue,
  BiasedOracle,
  Adversarial,
  LearnedLinear
};

struct RoundData {
  Vec pi;       // decision played this round
  Vec g;        // sampled gradient received
  Vec pi_hat;   // anchor the prediction was made from
  Vec ghat;     // the prediction itself
  LossRecord realized_loss;
};

// First-order oracle approximating the gradient of the upcoming loss.
// begin_round freezes any per-round randomness so repeated queries within a
// round (fixed-point solves) see one consistent oracle.
class PredictiveModel {
 public:
  virtual ~PredictiveModel() = default;
  virtual void begin_round(ProblemSession& session, Eigen::Index dim) {
    (void)session;
    (void)dim;
  }
  virtual Vec predict(ProblemSession& session, const Vec& point) = 0;
  virtual void update(const RoundData& data) { (void)data; }
  virtual bool supports_fixed_point() const { return false; }
};

struct ModelParams {
  ModelKind kind = ModelKind::Zero;
  int replay_size = 4;        // buffer length K
  double learn_rate = 0.5;    // LearnedLinear step multiplier
  double sigma_ghat = 0.0;    // oracle query noise scale
};

std::unique_ptr<PredictiveModel> make_model(const ModelParams& params, std::uint64_t base_seed,
                                            std::uint64_t seed_index);

struct FixedPointConfig {
  int max_iters = 20;
  double tolerance = 1e-8;
};

struct FixedPointResult {
  Vec ghat;         // effective prediction Phi(pi_n)
  Vec pi_fp;        // the fixed-point iterate the prediction was evaluated at
  double residual;  // || pi_fp - update(h_hat, H, ghat, w) ||
  int iterations = 0;
  bool converged = false;
};

// Solves h_n = update(h_hat, H, Phi(pi(h_n)), w) by damped-free fixed-point
// iteration, initialized at the heuristic step with Phi(pi_hat). On
// non-contractive instances, returns the visited iterate with the smallest
// residual (flagged via `converged`).
FixedPointResult fixed_point_predict(PredictiveModel& model, ProblemSession& session,
                                     const BaseAlgorithm& alg, const LearnerState& h_hat,
                                     const RegularizerState& H, double w,
                                     const FixedPointConfig& cfg);

}  // namespace piccolo
