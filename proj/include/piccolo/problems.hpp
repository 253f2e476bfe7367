#pragma once

#include "piccolo/geometry.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace piccolo {

// One realized (or mean) per-round loss in a form models can reevaluate.
struct LossRecord {
  enum class Kind { Linear, Quadratic, Stored } kind = Kind::Linear;
  Vec a;          // Linear: coefficient; Quadratic: center; Stored: the sampled gradient
  double q = 1.0; // Quadratic curvature

  double value(const Vec& pi) const;
  Vec gradient(const Vec& pi) const;
};

struct NoiseSpec {
  double sigma_g = 0.0;     // gradient noise scale (uniform on a centered ball)
  double sigma_ghat = 0.0;  // model noise scale
  double bias = 0.0;        // sqrt(E_Phi): oracle bias magnitude
};

struct RoundOutcome {
  Vec g;                    // sampled gradient at the committed decision
  LossRecord exact_loss;    // mean per-round loss (for regret computation)
  LossRecord realized_loss; // sampled loss (for off-policy model buffers)
  double loss_value = 0;    // exact l_n(pi_n)
  double performance = std::numeric_limits<double>::quiet_NaN();  // J(pi_n) when defined
};

// Per-run stateful view of a problem; rounds advance via commit().
class ProblemSession {
 public:
  virtual ~ProblemSession() = default;
  // Mean gradient of the upcoming round's loss at an arbitrary query point,
  // under the true model; usable before committing the decision.
  virtual Vec oracle_gradient(const Vec& query) = 0;
  // Same under the perturbed/biased model.
  virtual Vec biased_oracle_gradient(const Vec& query) = 0;
  // Play pi_n: realize the round's loss, sample feedback, advance state.
  virtual RoundOutcome commit(const Vec& pi_n) = 0;
  virtual long round() const = 0;  // upcoming round index (1-based)
};

class Problem {
 public:
  virtual ~Problem() = default;
  virtual const FeasibleSet& set() const = 0;
  virtual std::unique_ptr<ProblemSession> start_session(std::uint64_t base_seed,
                                                        std::uint64_t seed_index,
                                                        const Vec& initial_policy) const = 0;
  virtual bool losses_linear() const = 0;
  virtual const NoiseSpec& noise() const = 0;
};

// ---------------------------------------------------------------------------
// Synthetic predictable online convex optimization

enum class SyntheticFamily { Linear, Quadratic };

struct SyntheticSpec {
  SyntheticFamily family = SyntheticFamily::Linear;
  int dim = 10;
  double scale = 1.0;        // G_g-type magnitude of the coefficient path
  double drift = 0.5;        // relative amplitude of the drift component
  double period = 200.0;     // drift period in rounds
  double quad_curvature = 1.0;
  std::uint64_t path_seed = 7;  // fixes the deterministic coefficient path
  NoiseSpec noise;
};

class SyntheticOCO : public Problem {
 public:
  SyntheticOCO(SyntheticSpec spec, FeasibleSet set);

  const FeasibleSet& set() const override { return set_; }
  std::unique_ptr<ProblemSession> start_session(std::uint64_t base_seed,
                                                std::uint64_t seed_index,
                                                const Vec& initial_policy) const override;
  bool losses_linear() const override { return spec_.family == SyntheticFamily::Linear; }
  const NoiseSpec& noise() const override { return spec_.noise; }

  const SyntheticSpec& spec() const { return spec_; }
  LossRecord mean_loss(long n) const;  // deterministic coefficient path
  double declared_gradient_bound() const;
  Vec bias_direction() const;  // fixed unit vector scaled by noise.bias in the biased oracle

 private:
  SyntheticSpec spec_;
  FeasibleSet set_;
  Vec base_, amp_, phase_;
};

// ---------------------------------------------------------------------------
// Tabular MDPs

struct PolicyEval {
  Mat Q;  // S x A
  Vec V;  // S
  Mat A;  // S x A, Q - V
};

class TabularMDP {
 public:
  TabularMDP(int S, int A, Mat transitions, Mat cost, double gamma, Vec mu);

  int num_states() const { return S_; }
  int num_actions() const { return A_; }
  double gamma() const { return gamma_; }
  const Vec& initial_distribution() const { return mu_; }
  const Mat& transitions() const { return P_; }  // (S*A) x S
  const Mat& cost() const { return cost_; }      // S x A

  // Policies are S*A vectors, row-major by state, each state block on the simplex.
  Mat policy_matrix(const Vec& pi) const;  // S x A view with validation

  Vec occupancy(const Vec& pi) const;       // normalized discounted state distribution
  PolicyEval evaluate(const Vec& pi) const; // exact Q, V, A
  double performance(const Vec& pi) const;  // J(pi) = E_{d_pi} E_pi[c]
  Vec greedy_policy(const Mat& Q) const;
  Vec optimal_policy() const;  // exact policy iteration

  TabularMDP perturb_transitions(double beta) const;  // biased-model construction

  static TabularMDP load(const std::string& path);
  void save(const std::string& path) const;

  static TabularMDP random_garnet(int S, int A, int branching, Rng& rng, double gamma);
  static TabularMDP gridworld5(double gamma = 0.9, double stay_prob = 0.1);

 private:
  int S_, A_;
  Mat P_;     // (S*A) x S
  Mat cost_;  // S x A
  double gamma_;
  Vec mu_;
};

enum class TabularLoss { PolicyImprovement, ExpertImitation };
enum class FeedbackKind { Exact, Rollout };

struct TabularSpec {
  TabularLoss loss = TabularLoss::PolicyImprovement;
  FeedbackKind feedback = FeedbackKind::Exact;
  int rollouts = 64;       // state samples per round when feedback = Rollout
  double bias_beta = 0.8;  // transition perturbation of the biased oracle
  NoiseSpec noise;         // sigma_ghat applies to oracle models on this problem
};

class TabularPolicyOpt : public Problem {
 public:
  TabularPolicyOpt(TabularMDP mdp, TabularSpec spec);

  const FeasibleSet& set() const override { return set_; }
  std::unique_ptr<ProblemSession> start_session(std::uint64_t base_seed,
                                                std::uint64_t seed_index,
                                                const Vec& initial_policy) const override;
  bool losses_linear() const override { return true; }
  const NoiseSpec& noise() const override { return spec_.noise; }

  const TabularMDP& mdp() const { return mdp_; }
  const TabularMDP& biased_mdp() const { return biased_; }
  const TabularSpec& spec() const { return spec_; }
  const Vec& expert_policy() const { return expert_; }
  const Mat& expert_advantage() const { return expert_adv_; }

 private:
  TabularMDP mdp_;
  TabularMDP biased_;
  TabularSpec spec_;
  FeasibleSet set_;
  Vec expert_;      // exact optimal policy (imitation target)
  Mat expert_adv_;  // A_{pi*}
};

// Softmax-parametrized variant for the adaptive natural-gradient harness.
// Decisions are logits theta in a wide box; losses are not linear in theta.
class SoftmaxPolicyOpt : public Problem {
 public:
  SoftmaxPolicyOpt(TabularMDP mdp, TabularSpec spec, double logit_bound = 50.0);

  const FeasibleSet& set() const override { return set_; }
  std::unique_ptr<ProblemSession> start_session(std::uint64_t base_seed,
                                                std::uint64_t seed_index,
                                                const Vec& initial_theta) const override;
  bool losses_linear() const override { return false; }
  const NoiseSpec& noise() const override { return spec_.noise; }

  const TabularMDP& mdp() const { return mdp_; }
  Vec policy_from_logits(const Vec& theta) const;
  Mat fisher(const Vec& theta) const;  // exact Fisher information at theta

 private:
  TabularMDP mdp_;
  TabularSpec spec_;
  FeasibleSet set_;
};

}  // namespace piccolo
