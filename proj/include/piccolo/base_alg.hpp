#pragma once

#include "piccolo/geometry.hpp"

#include <functional>
#include <vector>

namespace piccolo {

enum class AlgKind { BasicMD, AdaGrad, Adam, AdaNatGrad, Ftrl };

struct AlgorithmConfig {
  AlgKind kind = AlgKind::AdaGrad;
  double eta = 0.1;        // step multiplier; AdaGrad uses it as its constant step
  double c = 1.0;          // schedule decay rate, eta_n = eta / (1 + c * w_{1:n} / sqrt(n))
  double grad_bound = 1.0; // G constant of BasicMD / FTRL
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;   // AdaGrad/Adam metric floor
  double fisher_floor = 1e-6;
  bool adam_shared_m = false;  // keep the prediction-step momentum blend (default: transient)
  // AdaNatGrad only: Fisher information of the policy decoded from a decision vector.
  std::function<Mat(const Vec&)> fisher_fn;
};

// Decision-side representation h. Mirror-descent learners keep the decision
// itself; FTRL keeps the accumulated weighted gradient. Adam additionally
// carries its first-moment memory here (it belongs to the decision side).
struct LearnerState {
  Vec h;
  Vec adam_m;
  long adam_count = 0;
};

// Regularization-side representation H plus the cumulative
// regularization-change statistic used by the regret-bound audits.
struct RegularizerState {
  long round = 0;        // number of adapt calls absorbed
  double weight_sum = 0; // accumulated w_{1:n}
  double eta_n = 0;      // current schedule multiplier (constant for AdaGrad)
  Vec adagrad_sq;        // AdaGrad accumulator G_n (sums of squares)
  Vec adam_v;            // Adam second moment
  long adam_vcount = 0;
  double nat_acc = 0;    // AdaNatGrad moving average of (1/2) g' F^{-1} g
  Mat fisher;            // AdaNatGrad anchor Fisher (floor included)
  std::vector<Vec> centers;     // FTRL proximal centers (centers[0] = pi_1)
  std::vector<double> coeffs;   // FTRL proximal coefficients kappa_m
  double kappa_sum = 0;         // cached sum of coeffs
  Vec kappa_center;             // cached sum kappa_m * pi_m (Euclidean geometry)
  Vec kappa_log_center;         // cached sum kappa_m * log(pi_m) (entropy geometry)
  double m_hat = 0;             // ||H_0||_R + sum ||H_n - H_{n-1}||_R so far
};

// The local-norm data of one regularizer state, in serializable form; audits
// recompute all norms from these rather than trusting learner-recorded values.
struct MetricSnapshot {
  enum class Kind { Scaled, Diagonal, Full } kind = Kind::Scaled;
  double scale = 1.0;  // Scaled: ||x||_n^2 = scale * geometry_norm(x)^2
  Vec diag;            // Diagonal: ||x||_n^2 = x' diag(d) x
  Mat full;            // Full (AdaNatGrad only)
};

// argmin over the set of <g, z> + B_R(z||x) / eta, solved exactly for the
// supported geometry/set pairs.
Vec bregman_prox(const BregmanGeometry& geom, const FeasibleSet& set, const Vec& x,
                 const Vec& g, double eta);

// Bregman diameter of the set under the generator: an upper bound on
// B_R(u||v) over feasible u and interior-kept v. Used by the declared
// regularizer-size norms behind the M-statistic.
double bregman_diameter(const BregmanGeometry& geom, const FeasibleSet& set);

// Entropy learners keep simplex iterates away from the domain boundary; mixing
// toward uniform triggers only when a coordinate falls below the trigger.
inline constexpr double kInteriorMix = 1e-12;
inline constexpr double kInteriorTrigger = 1e-15;

class BaseAlgorithm {
 public:
  BaseAlgorithm(AlgorithmConfig cfg, FeasibleSet set, BregmanGeometry geom);

  const AlgorithmConfig& config() const { return cfg_; }
  const FeasibleSet& set() const { return set_; }
  const BregmanGeometry& geometry() const { return geom_; }
  AlgKind kind() const { return cfg_.kind; }

  LearnerState init_learner(const Vec& pi1) const;
  RegularizerState init_regularizer(const Vec& pi1) const;

  enum class UpdateMode { Standard, TransientMomentum };

  // update op: decision-side step against the supplied (frozen) regularizer.
  LearnerState update(const LearnerState& h, const RegularizerState& H, const Vec& g,
                      double w, UpdateMode mode = UpdateMode::Standard) const;

  // adapt op: regularization update driven by the supplied gradient.
  RegularizerState adapt(const LearnerState& h, const RegularizerState& H, const Vec& g,
                         double w) const;

  // Schedule-only advance (counters and step multiplier move, gradient-driven
  // accumulators do not). Used by the pure model-based baseline.
  RegularizerState advance_schedule(const LearnerState& h, const RegularizerState& H,
                                    double w) const;

  // project op: decode the abstract representation to a feasible decision.
  Vec decision(const LearnerState& h, const RegularizerState& H) const;

  // shift op (identity except AdaNatGrad, which re-anchors its Fisher).
  RegularizerState shift(const LearnerState& h_hat, const RegularizerState& H) const;

  MetricSnapshot metric(const RegularizerState& H) const;
  double primal_norm(const RegularizerState& H, const Vec& x) const;
  double dual_norm(const RegularizerState& H, const Vec& g) const;

  double primal_norm(const MetricSnapshot& m, const Vec& x) const;
  double dual_norm(const MetricSnapshot& m, const Vec& g) const;

  // kappa coefficient the most recent adapt/advance added (FTRL), 0 otherwise.
  double last_ftrl_kappa(const RegularizerState& before, const RegularizerState& after) const;

 private:
  double schedule_eta(long n, double weight_sum) const;
  Vec adam_metric_diag(const RegularizerState& H) const;
  Vec adagrad_metric_diag(const RegularizerState& H) const;
  Vec interior_fix(const Vec& pi) const;
  Vec ftrl_argmin(const Vec& lin, const RegularizerState& H) const;

  AlgorithmConfig cfg_;
  FeasibleSet set_;
  BregmanGeometry geom_;
  double bregman_diam_;
  double sq_diam_half_;  // (euclidean diameter)^2 / 2
};

struct MirrorStepResult {
  Vec y;
  double slack_solution_min = 0;  // min over samples of rhs - lhs of the new-decision inequality
  double slack_anchor_min = 0;  // same for the old-decision inequality
};

// Solves y = argmin <g,z> + B_{R/alpha}(z||x)/eta and evaluates the two
// proximal-map inequalities over sampled comparison points.
MirrorStepResult mirror_step_audit(const BregmanGeometry& geom, const FeasibleSet& set,
                                   const Vec& x, const Vec& g, double eta, int num_samples,
                                   Rng& rng);

}  // namespace piccolo
