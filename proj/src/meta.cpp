#include "piccolo/meta.hpp"

namespace piccolo {

std::pair<LearnerState, RegularizerState> prediction_step(const BaseAlgorithm& alg,
                                                          const LearnerState& h_hat,
                                                          const RegularizerState& H_prev,
                                                          const Vec& ghat, double w,
                                                          bool shift_enabled) {
  RegularizerState H = shift_enabled ? alg.shift(h_hat, H_prev) : H_prev;
  LearnerState h_n = alg.update(h_hat, H, ghat, w, BaseAlgorithm::UpdateMode::TransientMomentum);
  return {std::move(h_n), std::move(H)};
}

std::pair<RegularizerState, LearnerState> correction_step(const BaseAlgorithm& alg,
                                                          const LearnerState& h_n,
                                                          const RegularizerState& H_prev,
                                                          const Vec& e, const Vec& g, double w,
                                                          MetaMode mode) {
  switch (mode) {
    case MetaMode::Piccolo:
    case MetaMode::ModelFree: {
      RegularizerState H_n = alg.adapt(h_n, H_prev, e, w);
      LearnerState next = alg.update(h_n, H_n, e, w);
      return {std::move(H_n), std::move(next)};
    }
    case MetaMode::Dyna: {
      RegularizerState H_n = alg.adapt(h_n, H_prev, g, w);
      LearnerState next = alg.update(h_n, H_n, g, w);
      return {std::move(H_n), std::move(next)};
    }
    case MetaMode::ModelBased: {
      RegularizerState H_n = alg.advance_schedule(h_n, H_prev, w);
      return {std::move(H_n), h_n};
    }
  }
  throw StructuralError("correction_step: unknown mode");
}

RunResult run(const Problem& problem, const BaseAlgorithm& alg, PredictiveModel& model,
              const WeightSchedule& schedule, const RunOptions& opt, const Vec& pi1,
              std::uint64_t base_seed, std::uint64_t seed_index) {
  if (opt.rounds < 1) throw StructuralError("run: need at least one round");
  const Eigen::Index dim = problem.set().dim();
  require_dim(pi1, dim, "run initial point");

  LearnerState learner = alg.init_learner(pi1);
  RegularizerState reg = alg.init_regularizer(pi1);
  Vec pi_initial = alg.decision(learner, reg);
  auto session = problem.start_session(base_seed, seed_index, pi_initial);

  RunResult result;
  result.metric_initial = alg.metric(reg);
  result.initial_decision = pi_initial;
  result.ftrl_kappa0 =
      (alg.kind() == AlgKind::Ftrl) ? alg.config().grad_bound / alg.config().eta : 0.0;
  result.trace.reserve(opt.rounds);

  // Algorithm-1 random iterate: K in [1, N] with P(K = n) proportional to w_n.
  Rng ksampler = derive_rng(base_seed, "k-sampler", seed_index);
  Vec weights(opt.rounds);
  for (long n = 1; n <= opt.rounds; ++n) weights[n - 1] = schedule.weight(n);
  result.sampled_k = static_cast<long>(ksampler.categorical(weights)) + 1;

  const bool use_fp = opt.fixed_point && model.supports_fixed_point();
  for (long n = 1; n <= opt.rounds; ++n) {
    RoundRecord rec;
    rec.n = n;
    rec.w = schedule.weight(n);
    rec.pi_hat = alg.decision(learner, reg);
    model.begin_round(*session, dim);

    double fp_residual = std::numeric_limits<double>::quiet_NaN();
    Vec ghat;
    if (use_fp) {
      FixedPointResult fp = fixed_point_predict(model, *session, alg, learner, reg, rec.w, opt.fp);
      ghat = fp.ghat;
      fp_residual = fp.residual;
    } else {
      ghat = model.predict(*session, rec.pi_hat);
    }

    auto [h_n, H_pred] = prediction_step(alg, learner, reg, ghat, rec.w, opt.shift_enabled);
    rec.pi = alg.decision(h_n, H_pred);
    RoundOutcome outcome = session->commit(rec.pi);
    rec.g = outcome.g;
    rec.ghat = ghat;
    rec.e = outcome.g - ghat;
    rec.loss = outcome.loss_value;
    rec.performance = outcome.performance;
    rec.fp_residual = fp_residual;
    rec.exact_loss = outcome.exact_loss;
    rec.metric_before = alg.metric(H_pred);
    rec.gap_prev = alg.primal_norm(rec.metric_before, rec.pi - rec.pi_hat);

    auto [H_n, h_next] = correction_step(alg, h_n, H_pred, rec.e, rec.g, rec.w, opt.mode);
    rec.metric_after = alg.metric(H_n);
    rec.e_dual = alg.dual_norm(rec.metric_after, rec.e);
    rec.reg_increment = H_n.m_hat - reg.m_hat;
    rec.ftrl_kappa = alg.last_ftrl_kappa(reg, H_n);

    RoundData data;
    data.pi = rec.pi;
    data.g = rec.g;
    data.pi_hat = rec.pi_hat;
    data.ghat = rec.ghat;
    data.realized_loss = outcome.realized_loss;
    model.update(data);

    const bool finite = rec.pi.allFinite() && rec.g.allFinite() && rec.ghat.allFinite() &&
                        std::isfinite(rec.loss);
    result.trace.push_back(std::move(rec));
    result.m_hat_final = H_n.m_hat;
    if (!finite) {
      result.aborted = true;
      result.aborted_round = n;
      break;
    }
    learner = std::move(h_next);
    reg = std::move(H_n);
  }

  long k_index = (result.sampled_k <= 1) ? 1 : result.sampled_k - 1;
  k_index = std::min<long>(k_index, static_cast<long>(result.trace.size()));
  result.pi_bar = result.trace[k_index - 1].pi;
  return result;
}

double equivalence_check_omd(const BregmanGeometry& geom, const FeasibleSet& set, const Vec& x0,
                             const std::vector<Vec>& gradients, const std::vector<Vec>& predictions,
                             double eta) {
  if (gradients.size() != predictions.size())
    throw StructuralError("equivalence_check_omd: stream lengths differ");
  // Recomposed two-step learner with constant regularization.
  AlgorithmConfig cfg;
  cfg.kind = AlgKind::BasicMD;
  cfg.eta = eta;
  cfg.c = 0.0;  // constant regularizer
  cfg.grad_bound = 1.0;
  BaseAlgorithm alg(cfg, set, geom);
  LearnerState learner = alg.init_learner(x0);
  RegularizerState reg = alg.init_regularizer(x0);

  // Reference recursion: both half-steps centered at pi_hat.
  Vec ref_hat = x0;
  double worst = 0.0;
  for (size_t n = 0; n < gradients.size(); ++n) {
    auto [h_n, H] = prediction_step(alg, learner, reg, predictions[n], 1.0, false);
    Vec pi = alg.decision(h_n, H);
    Vec e = gradients[n] - predictions[n];
    auto [H_n, h_next] = correction_step(alg, h_n, H, e, gradients[n], 1.0, MetaMode::Piccolo);

    Vec ref_pi = bregman_prox(geom, set, ref_hat, predictions[n], eta);
    Vec ref_next = bregman_prox(geom, set, ref_hat, gradients[n], eta);

    worst = std::max(worst, (pi - ref_pi).norm());
    worst = std::max(worst, (alg.decision(h_next, H_n) - ref_next).norm());

    learner = std::move(h_next);
    reg = std::move(H_n);
    ref_hat = ref_next;
  }
  return worst;
}

double equivalence_check_mobil(const BaseAlgorithm& ftrl_alg, const WeightSchedule& schedule,
                               const Vec& pi1, const std::vector<Vec>& gradients,
                               const std::vector<Vec>& predictions) {
  if (ftrl_alg.kind() != AlgKind::Ftrl)
    throw StructuralError("equivalence_check_mobil: needs an FTRL base");
  if (gradients.size() != predictions.size())
    throw StructuralError("equivalence_check_mobil: stream lengths differ");

  LearnerState learner = ftrl_alg.init_learner(pi1);
  RegularizerState reg = ftrl_alg.init_regularizer(pi1);

  // Direct two-line recursion: its own accumulated gradient and proximal pool.
  RegularizerState ref_reg = ftrl_alg.init_regularizer(pi1);
  LearnerState ref_acc = ftrl_alg.init_learner(pi1);

  double worst = 0.0;
  for (size_t i = 0; i < gradients.size(); ++i) {
    const long n = static_cast<long>(i) + 1;
    const double w = schedule.weight(n);

    auto [h_n, H] = prediction_step(ftrl_alg, learner, reg, predictions[i], w, false);
    Vec pi = ftrl_alg.decision(h_n, H);
    Vec e = gradients[i] - predictions[i];
    auto [H_n, h_next] = correction_step(ftrl_alg, h_n, H, e, gradients[i], w, MetaMode::Piccolo);

    // pi_n = argmin <w_n ghat_n, .> + sum_{m<n} <w_m g_m, .> + B_{r_m}(.||pi_m)
    LearnerState probe = ref_acc;
    probe.h = ref_acc.h + w * predictions[i];
    Vec ref_pi = ftrl_alg.decision(probe, ref_reg);
    worst = std::max(worst, (pi - ref_pi).norm());

    // pi_hat_{n+1} = argmin sum_{m<=n} <w_m g_m, .> + B_{r_m}(.||pi_m);
    // adapt anchors the new proximal term at decision(probe, ref_reg) = ref_pi.
    RegularizerState ref_next_reg = ftrl_alg.adapt(probe, ref_reg, e, w);
    ref_acc.h = ref_acc.h + w * gradients[i];
    Vec ref_hat_next = ftrl_alg.decision(ref_acc, ref_next_reg);
    worst = std::max(worst, (ftrl_alg.decision(h_next, H_n) - ref_hat_next).norm());

    learner = std::move(h_next);
    reg = std::move(H_n);
    ref_reg = std::move(ref_next_reg);
  }
  return worst;
}

}  // namespace piccolo
