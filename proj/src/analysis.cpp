#include "piccolo/analysis.hpp"

#include <cmath>

namespace piccolo {

namespace {

bool all_kind(const std::vector<LossRecord>& losses, LossRecord::Kind k) {
  for (const auto& l : losses)
    if (l.kind != k) return false;
  return true;
}

Vec linear_argmin(const FeasibleSet& set, const Vec& v) {
  switch (set.kind()) {
    case SetKind::ProductSimplex: {
      Vec out = Vec::Zero(set.dim());
      const int bd = set.block_dim();
      for (int b = 0; b < set.num_blocks(); ++b) {
        int best = 0;
        for (int i = 1; i < bd; ++i)
          if (v[b * bd + i] < v[b * bd + best]) best = i;  // ties keep the lowest index
        out[b * bd + best] = 1.0;
      }
      return out;
    }
    case SetKind::L2Ball: {
      double n = v.norm();
      if (n == 0.0) return set.center();
      return set.center() - (set.radius() / n) * v;
    }
    case SetKind::Box: {
      Vec out(set.dim());
      for (Eigen::Index i = 0; i < set.dim(); ++i)
        out[i] = (v[i] > 0) ? set.lower()[i] : (v[i] < 0 ? set.upper()[i] : set.lower()[i]);
      return out;
    }
  }
  throw StructuralError("linear_argmin: unknown set");
}

}  // namespace

Vec comparator(const FeasibleSet& set, const std::vector<LossRecord>& losses,
               const std::vector<double>& weights) {
  if (losses.empty() || losses.size() != weights.size())
    throw StructuralError("comparator: empty or mismatched inputs");
  if (all_kind(losses, LossRecord::Kind::Linear)) {
    Vec v = Vec::Zero(set.dim());
    for (size_t i = 0; i < losses.size(); ++i) v += weights[i] * losses[i].a;
    return linear_argmin(set, v);
  }
  if (all_kind(losses, LossRecord::Kind::Quadratic)) {
    double total = 0;
    Vec mean = Vec::Zero(set.dim());
    for (size_t i = 0; i < losses.size(); ++i) {
      total += weights[i] * losses[i].q;
      mean += weights[i] * losses[i].q * losses[i].a;
    }
    Vec x = set.project(mean / total);
    // projected-gradient polish of sum w_i q_i/2 ||x - b_i||^2
    for (int it = 0; it < 100; ++it) {
      Vec grad = total * x - mean;
      x = set.project(x - grad / total);
    }
    return x;
  }
  throw UnsupportedError("comparator: losses must be uniformly linear or quadratic");
}

double min_loss_over_set(const FeasibleSet& set, const LossRecord& loss) {
  switch (loss.kind) {
    case LossRecord::Kind::Linear:
    case LossRecord::Kind::Stored:
      return loss.value(linear_argmin(set, loss.a));
    case LossRecord::Kind::Quadratic:
      return loss.value(set.project(loss.a));
  }
  throw StructuralError("min_loss_over_set");
}

RegretReport regret_report(const FeasibleSet& set, const std::vector<RoundRecord>& trace,
                           const std::vector<std::pair<long, long>>& windows) {
  if (trace.empty()) throw StructuralError("regret_report: empty trace");
  std::vector<LossRecord> losses;
  std::vector<double> weights;
  losses.reserve(trace.size());
  for (const auto& r : trace) {
    losses.push_back(r.exact_loss);
    weights.push_back(r.w);
  }
  RegretReport rep;
  rep.comparator = comparator(set, losses, weights);
  double played = 0, at_comp = 0, dyn_min = 0;
  for (size_t i = 0; i < trace.size(); ++i) {
    played += weights[i] * trace[i].loss;
    at_comp += weights[i] * losses[i].value(rep.comparator);
    dyn_min += weights[i] * min_loss_over_set(set, losses[i]);
    rep.weight_total += weights[i];
  }
  rep.static_regret = played - at_comp;
  rep.dynamic_regret = played - dyn_min;
  rep.epsilon = at_comp / rep.weight_total;
  rep.epsilon_dynamic = dyn_min / rep.weight_total;
  rep.average_regret = rep.static_regret / rep.weight_total;
  for (auto [a, b] : windows) {
    if (a < 1 || b > static_cast<long>(trace.size()) || a > b)
      throw StructuralError("regret_report: bad window");
    std::vector<LossRecord> wl(losses.begin() + (a - 1), losses.begin() + b);
    std::vector<double> ww(weights.begin() + (a - 1), weights.begin() + b);
    Vec comp = comparator(set, wl, ww);
    double p = 0, c = 0;
    for (long i = a; i <= b; ++i) {
      p += weights[i - 1] * trace[i - 1].loss;
      c += weights[i - 1] * wl[i - a].value(comp);
    }
    rep.windows.push_back({a, b, p - c});
  }
  return rep;
}

std::vector<double> m_hat_prefix_series(const BaseAlgorithm& alg, const RunResult& run) {
  const FeasibleSet& set = alg.set();
  const double diam = set.euclidean_diameter();
  const double half_sq = 0.5 * diam * diam;
  const double breg_diam = (alg.kind() == AlgKind::BasicMD || alg.kind() == AlgKind::Ftrl)
                               ? bregman_diameter(alg.geometry(), set)
                               : 0.0;
  const double alpha = alg.geometry().strong_convexity();
  auto contribution = [&](const MetricSnapshot& prev, const MetricSnapshot& cur) {
    if (cur.kind == MetricSnapshot::Kind::Scaled) {
      // scale = coefficient * alpha; regularizer growth is (d scale / alpha) * Bregman diameter
      return std::max(0.0, (cur.scale - prev.scale) / alpha) * breg_diam;
    }
    if (cur.kind == MetricSnapshot::Kind::Diagonal) {
      double d = (cur.diag - prev.diag).maxCoeff();
      return std::max(0.0, d) * half_sq;
    }
    return (cur.full - prev.full).norm() * half_sq;
  };
  double m = 0;  // ||H_0||_R
  if (run.metric_initial.kind == MetricSnapshot::Kind::Scaled)
    m += (run.metric_initial.scale / alpha) * breg_diam;
  else if (run.metric_initial.kind == MetricSnapshot::Kind::Diagonal)
    m += run.metric_initial.diag.maxCoeff() * half_sq;
  else
    m += run.metric_initial.full.norm() * half_sq;
  std::vector<double> out;
  out.reserve(run.trace.size());
  const MetricSnapshot* prev = &run.metric_initial;
  for (const auto& rec : run.trace) {
    m += contribution(*prev, rec.metric_after);
    prev = &rec.metric_after;
    out.push_back(m);
  }
  return out;
}

double recompute_m_hat(const BaseAlgorithm& alg, const RunResult& run) {
  auto series = m_hat_prefix_series(alg, run);
  return series.empty() ? 0.0 : series.back();
}

BoundAudit audit_regret_bound(const BaseAlgorithm& alg, const RunResult& run, const Vec& comp) {
  switch (alg.kind()) {
    case AlgKind::BasicMD:
    case AlgKind::AdaGrad:
    case AlgKind::Ftrl:
      break;
    case AlgKind::Adam:
      if (alg.config().beta1 == 0.0) break;
      throw UnsupportedError("audit: Adam with beta1 > 0 breaks the proximal structure");
    case AlgKind::AdaNatGrad:
      throw UnsupportedError("audit: AdaNatGrad is outside the audited family");
  }
  if (run.aborted) throw NumericError("audit: run aborted, trace incomplete");
  BoundAudit audit;
  audit.m_hat = recompute_m_hat(alg, run);
  for (const auto& rec : run.trace) {
    audit.lhs += rec.w * rec.g.dot(rec.pi - comp);
    double dual = alg.dual_norm(rec.metric_after, rec.e);
    double gap = alg.primal_norm(rec.metric_before, rec.pi - rec.pi_hat);
    audit.error_term += 0.5 * rec.w * rec.w * dual * dual;
    audit.gap_term += 0.5 * gap * gap;
    ++audit.rounds;
  }
  audit.rhs = audit.m_hat + audit.error_term - audit.gap_term;
  audit.slack = audit.rhs - audit.lhs;
  return audit;
}

double fit_rate(const std::vector<std::pair<double, double>>& n_vs_regret, bool* floored) {
  if (n_vs_regret.size() < 3) throw StructuralError("fit_rate: need at least 3 points");
  if (floored) *floored = false;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(n_vs_regret.size());
  for (auto [N, y] : n_vs_regret) {
    if (!(N > 0)) throw StructuralError("fit_rate: round counts must be positive");
    double yy = y;
    if (yy <= 0) {
      yy = 1e-12;
      if (floored) *floored = true;
    }
    double lx = std::log(N), ly = std::log(yy);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

FtlBookkeeping ftl_bookkeeping(const BaseAlgorithm& alg, const RunResult& run) {
  if (alg.kind() != AlgKind::Ftrl) throw UnsupportedError("ftl_bookkeeping: FTRL runs only");
  const auto& geom = alg.geometry();
  // rebuild the surrogate pool: kappa_0 at pi_1 plus one proximal term per round
  std::vector<Vec> centers{run.initial_decision};
  std::vector<double> coeffs{run.ftrl_kappa0};
  std::vector<Vec> argmins;   // pi*_n = argmin L_n, L_n = f_{0:n}
  std::vector<Vec> lin_sums;  // accumulated weighted gradients
  Vec lin = Vec::Zero(alg.set().dim());

  auto pool_value = [&](const Vec& lin_coeff, const Vec& x, size_t terms) {
    double v = lin_coeff.dot(x);
    for (size_t m = 0; m < terms; ++m) v += coeffs[m] * geom.bregman(x, centers[m]);
    return v;
  };
  auto pool_argmin = [&](const Vec& lin_coeff, size_t terms) {
    RegularizerState rs;
    rs.eta_n = alg.config().eta;
    rs.kappa_sum = 0;
    rs.kappa_center = Vec::Zero(alg.set().dim());
    if (geom.kind() == GenKind::NegativeEntropy)
      rs.kappa_log_center = Vec::Zero(alg.set().dim());
    for (size_t m = 0; m < terms; ++m) {
      rs.kappa_sum += coeffs[m];
      rs.kappa_center += coeffs[m] * centers[m];
      if (geom.kind() == GenKind::NegativeEntropy)
        rs.kappa_log_center += coeffs[m] * centers[m].array().log().matrix();
    }
    LearnerState ls;
    ls.h = lin_coeff;
    return alg.decision(ls, rs);
  };

  FtlBookkeeping bk;
  bk.min_delta = std::numeric_limits<double>::infinity();
  double played = 0;  // sum over rounds of f_n(pi_n)
  for (size_t i = 0; i < run.trace.size(); ++i) {
    const auto& rec = run.trace[i];
    centers.push_back(rec.pi);
    coeffs.push_back(rec.ftrl_kappa);
    lin += rec.w * rec.g;
    lin_sums.push_back(lin);
    size_t terms = i + 2;  // kappa_0 plus rounds 1..i+1

    // Delta_n = L_{n-1}(pi_n) - L_{n-1}(pi*_{n-1}); L_0 is the initial proximal
    // term alone, minimized at the initial decision with value zero.
    const Vec prev_lin = (i == 0) ? Vec(Vec::Zero(lin.size())) : lin_sums[i - 1];
    const Vec& prev_star = (i == 0) ? run.initial_decision : argmins[i - 1];
    double delta = pool_value(prev_lin, rec.pi, terms - 1) -
                   pool_value(prev_lin, prev_star, terms - 1);
    Vec star = pool_argmin(lin, terms);
    argmins.push_back(star);
    double gap = pool_value(lin, rec.pi, terms) - pool_value(lin, star, terms);
    bk.deltas.push_back(delta);
    bk.gaps.push_back(gap);
    bk.min_delta = std::min(bk.min_delta, delta);
    played += rec.w * rec.g.dot(rec.pi) + rec.ftrl_kappa * geom.bregman(rec.pi, rec.pi);
  }
  double best = pool_value(lin, argmins.back(), centers.size());
  bk.surrogate_regret = played - best;
  double sum = 0;
  for (size_t i = 0; i < bk.gaps.size(); ++i) sum += bk.gaps[i] - bk.deltas[i];
  bk.identity_residual = sum - bk.surrogate_regret;
  return bk;
}

}  // namespace piccolo
