#include "piccolo/base_alg.hpp"

#include <cmath>

namespace piccolo {

namespace {

BregmanGeometry rescaled_unit(const BregmanGeometry& geom) {
  switch (geom.kind()) {
    case GenKind::SquaredEuclidean:
      return BregmanGeometry::squared_euclidean(1.0);
    case GenKind::NegativeEntropy:
      return BregmanGeometry::negative_entropy(1.0);
    case GenKind::DiagonalQuadratic:
    case GenKind::FisherQuadratic:
      return geom;  // already 1-strongly convex against their own norm
  }
  throw StructuralError("rescaled_unit: unknown generator");
}

Vec entropy_multiplicative_step(const FeasibleSet& set, const Vec& x, const Vec& exponent) {
  // per-block: z_i proportional to x_i * exp(exponent_i)
  Vec out(x.size());
  const int bd = set.block_dim();
  for (int b = 0; b < set.num_blocks(); ++b) {
    auto xb = x.segment(b * bd, bd);
    auto eb = exponent.segment(b * bd, bd);
    Vec logz(bd);
    for (int i = 0; i < bd; ++i) {
      if (xb[i] <= 0) throw DomainError("entropy step: center must be interior");
      logz[i] = std::log(xb[i]) + eb[i];
    }
    double mx = logz.maxCoeff();
    Vec z = (logz.array() - mx).exp();
    out.segment(b * bd, bd) = z / z.sum();
  }
  return out;
}

}  // namespace

Vec bregman_prox(const BregmanGeometry& geom, const FeasibleSet& set, const Vec& x,
                 const Vec& g, double eta) {
  require_finite(g, "bregman_prox gradient");
  if (!(eta > 0)) throw StructuralError("bregman_prox: eta must be positive");
  switch (geom.kind()) {
    case GenKind::SquaredEuclidean:
      return set.project(x - (eta / geom.scale()) * g);
    case GenKind::NegativeEntropy: {
      if (set.kind() != SetKind::ProductSimplex)
        throw UnsupportedError("entropy prox requires a product simplex");
      return entropy_multiplicative_step(set, x, (-(eta / geom.scale()) * g).eval());
    }
    case GenKind::DiagonalQuadratic: {
      Vec d = geom.diag() / eta;
      return set.project_weighted(x - g.cwiseQuotient(d), d);
    }
    case GenKind::FisherQuadratic: {
      Mat m = geom.matrix() / eta;
      Eigen::LDLT<Mat> ldlt(m);
      Vec unc = x - ldlt.solve(g);
      if (set.kind() == SetKind::L2Ball) {
        if ((unc - set.center()).norm() <= set.radius()) return unc;
        // KKT: (M/eta)(y - x) + g + lambda (y - c) = 0
        auto solve_for = [&](double lambda) {
          Mat a = m + lambda * Mat::Identity(m.rows(), m.cols());
          Vec rhs = m * x - g + lambda * set.center();
          return Vec(Eigen::LDLT<Mat>(a).solve(rhs));
        };
        double lo = 0.0, hi = 1.0;
        while ((solve_for(hi) - set.center()).norm() > set.radius()) hi *= 2.0;
        for (int it = 0; it < 120; ++it) {
          double mid = 0.5 * (lo + hi);
          if ((solve_for(mid) - set.center()).norm() > set.radius())
            lo = mid;
          else
            hi = mid;
        }
        Vec y = solve_for(0.5 * (lo + hi));
        Vec d = y - set.center();
        double n = d.norm();
        if (n > set.radius()) y = set.center() + (set.radius() / n) * d;
        return y;
      }
      if (set.contains(unc)) return unc;
      throw UnsupportedError("fisher prox only solved on balls or interior points");
    }
  }
  throw StructuralError("bregman_prox: unknown generator");
}

double bregman_diameter(const BregmanGeometry& geom, const FeasibleSet& set) {
  const double diam = set.euclidean_diameter();
  switch (geom.kind()) {
    case GenKind::SquaredEuclidean:
      return 0.5 * geom.scale() * diam * diam;
    case GenKind::NegativeEntropy: {
      if (set.kind() != SetKind::ProductSimplex)
        throw UnsupportedError("entropy diameter requires product simplex");
      double floor = std::min(kInteriorTrigger, kInteriorMix / set.block_dim());
      return geom.scale() * set.num_blocks() * std::log(1.0 / floor);
    }
    case GenKind::DiagonalQuadratic: {
      if (set.kind() == SetKind::Box) {
        Vec side = set.upper() - set.lower();
        return 0.5 * side.dot(geom.diag().cwiseProduct(side));
      }
      return 0.5 * geom.diag().maxCoeff() * diam * diam;
    }
    case GenKind::FisherQuadratic:
      return 0.5 * geom.matrix().norm() * diam * diam;  // Frobenius bounds the spectral norm
  }
  throw StructuralError("bregman_diameter: unknown generator");
}

// ---------------------------------------------------------------------------
// BaseAlgorithm

BaseAlgorithm::BaseAlgorithm(AlgorithmConfig cfg, FeasibleSet set, BregmanGeometry geom)
    : cfg_(std::move(cfg)), set_(std::move(set)), geom_(std::move(geom)) {
  if (!(cfg_.eta > 0)) throw ConfigError("algorithm: eta must be positive");
  if (!(cfg_.c >= 0)) throw ConfigError("algorithm: c must be nonnegative");
  if (!(cfg_.grad_bound > 0)) throw ConfigError("algorithm: gradient bound must be positive");
  if (!(cfg_.epsilon > 0)) throw ConfigError("algorithm: epsilon must be positive");
  if (cfg_.kind == AlgKind::AdaGrad || cfg_.kind == AlgKind::Adam) {
    if (geom_.kind() != GenKind::SquaredEuclidean || geom_.scale() != 1.0)
      throw ConfigError("AdaGrad/Adam carry their own diagonal metric; use euclidean geometry");
  }
  if (geom_.kind() == GenKind::NegativeEntropy && set_.kind() != SetKind::ProductSimplex)
    throw ConfigError("entropy geometry requires a product simplex set");
  if (cfg_.kind == AlgKind::AdaNatGrad && !cfg_.fisher_fn)
    throw ConfigError("AdaNatGrad requires a Fisher callback");
  const double d = set_.euclidean_diameter();
  sq_diam_half_ = 0.5 * d * d;
  bregman_diam_ = (cfg_.kind == AlgKind::AdaNatGrad) ? 0.0 : bregman_diameter(geom_, set_);
}

double BaseAlgorithm::schedule_eta(long n, double weight_sum) const {
  if (n < 1) return cfg_.eta;
  return cfg_.eta / (1.0 + cfg_.c * weight_sum / std::sqrt(static_cast<double>(n)));
}

Vec BaseAlgorithm::interior_fix(const Vec& pi) const {
  if (geom_.kind() != GenKind::NegativeEntropy) return pi;
  const int bd = set_.block_dim();
  if (pi.minCoeff() >= kInteriorTrigger) return pi;
  Vec out = pi;
  for (int b = 0; b < set_.num_blocks(); ++b) {
    auto blk = out.segment(b * bd, bd);
    if (blk.minCoeff() < kInteriorTrigger)
      blk = (1.0 - kInteriorMix) * blk + Vec::Constant(bd, kInteriorMix / bd);
  }
  return out;
}

LearnerState BaseAlgorithm::init_learner(const Vec& pi1) const {
  require_dim(pi1, set_.dim(), "init_learner");
  if (!set_.contains(pi1, 1e-9)) throw StructuralError("init_learner: initial point infeasible");
  LearnerState s;
  switch (cfg_.kind) {
    case AlgKind::Ftrl:
      s.h = Vec::Zero(set_.dim());
      break;
    case AlgKind::Adam:
      s.h = interior_fix(pi1);
      s.adam_m = Vec::Zero(set_.dim());
      s.adam_count = 0;
      break;
    default:
      s.h = interior_fix(pi1);
  }
  return s;
}

RegularizerState BaseAlgorithm::init_regularizer(const Vec& pi1) const {
  RegularizerState H;
  H.round = 0;
  H.weight_sum = 0;
  H.eta_n = cfg_.eta;
  switch (cfg_.kind) {
    case AlgKind::BasicMD:
      H.m_hat = (cfg_.grad_bound / cfg_.eta) * bregman_diam_;
      break;
    case AlgKind::AdaGrad:
      H.adagrad_sq = Vec::Zero(set_.dim());
      H.m_hat = (cfg_.epsilon / cfg_.eta) * sq_diam_half_;
      break;
    case AlgKind::Adam:
      H.adam_v = Vec::Zero(set_.dim());
      H.adam_vcount = 0;
      H.m_hat = (cfg_.epsilon / cfg_.eta) * sq_diam_half_;
      break;
    case AlgKind::Ftrl: {
      Vec p = interior_fix(pi1);
      H.centers.push_back(p);
      double k0 = cfg_.grad_bound / cfg_.eta;
      H.coeffs.push_back(k0);
      H.kappa_sum = k0;
      H.kappa_center = k0 * p;
      if (geom_.kind() == GenKind::NegativeEntropy)
        H.kappa_log_center = k0 * p.array().log().matrix();
      H.m_hat = k0 * bregman_diam_;
      break;
    }
    case AlgKind::AdaNatGrad: {
      Mat f = cfg_.fisher_fn(pi1);
      H.fisher = f + cfg_.fisher_floor * Mat::Identity(f.rows(), f.cols());
      H.nat_acc = 0;
      H.m_hat = (1.0 / cfg_.eta) * H.fisher.norm() * sq_diam_half_;
      break;
    }
  }
  return H;
}

Vec BaseAlgorithm::adagrad_metric_diag(const RegularizerState& H) const {
  return ((H.adagrad_sq.array().sqrt() + cfg_.epsilon) / cfg_.eta).matrix();
}

Vec BaseAlgorithm::adam_metric_diag(const RegularizerState& H) const {
  Vec vhat = (H.adam_vcount > 0)
                 ? Vec(H.adam_v / (1.0 - std::pow(cfg_.beta2, H.adam_vcount)))
                 : Vec(Vec::Zero(H.adam_v.size()));
  return ((vhat.array().sqrt() + cfg_.epsilon) / H.eta_n).matrix();
}

LearnerState BaseAlgorithm::update(const LearnerState& h, const RegularizerState& H,
                                   const Vec& g, double w, UpdateMode mode) const {
  require_dim(g, set_.dim(), "update gradient");
  require_finite(g, "update gradient");
  if (!(w > 0)) throw StructuralError("update: weight must be positive");
  LearnerState out = h;
  // a zero step direction is the proximal identity; keep it bitwise exact
  switch (cfg_.kind) {
    case AlgKind::Ftrl:
      out.h = h.h + w * g;
      return out;
    case AlgKind::BasicMD: {
      if (g.isZero(0.0)) return out;
      double eff = H.eta_n / cfg_.grad_bound;
      out.h = interior_fix(bregman_prox(geom_, set_, h.h, (w * g).eval(), eff));
      return out;
    }
    case AlgKind::AdaGrad: {
      if (g.isZero(0.0)) return out;
      Vec d = adagrad_metric_diag(H);
      out.h = set_.project_weighted(h.h - (w * g).cwiseQuotient(d), d);
      return out;
    }
    case AlgKind::Adam: {
      Vec m = cfg_.beta1 * h.adam_m + (1.0 - cfg_.beta1) * g;
      long cnt = h.adam_count + 1;
      Vec mhat = m / (1.0 - std::pow(cfg_.beta1, cnt));
      if (!mhat.isZero(0.0)) {
        Vec d = adam_metric_diag(H);
        out.h = set_.project_weighted(h.h - (w * mhat).cwiseQuotient(d), d);
      }
      if (mode == UpdateMode::Standard || cfg_.adam_shared_m) {
        out.adam_m = m;
        out.adam_count = cnt;
      }
      return out;
    }
    case AlgKind::AdaNatGrad: {
      double ghat = (H.round > 0) ? H.nat_acc / (1.0 - std::pow(cfg_.beta2, H.round)) : 1.0;
      double mult = H.eta_n * w / std::sqrt(std::max(ghat, 1e-12));
      Eigen::LDLT<Mat> ldlt(H.fisher);
      out.h = set_.project(h.h - mult * ldlt.solve(g));
      return out;
    }
  }
  throw StructuralError("update: unknown algorithm");
}

RegularizerState BaseAlgorithm::adapt(const LearnerState& h, const RegularizerState& H,
                                      const Vec& g, double w) const {
  require_dim(g, set_.dim(), "adapt gradient");
  require_finite(g, "adapt gradient");
  RegularizerState out = H;
  out.round = H.round + 1;
  out.weight_sum = H.weight_sum + w;
  switch (cfg_.kind) {
    case AlgKind::BasicMD: {
      out.eta_n = schedule_eta(out.round, out.weight_sum);
      out.m_hat += cfg_.grad_bound * (1.0 / out.eta_n - 1.0 / H.eta_n) * bregman_diam_;
      return out;
    }
    case AlgKind::AdaGrad: {
      Vec wg = w * g;
      out.adagrad_sq = H.adagrad_sq + wg.cwiseProduct(wg);
      double delta =
          (out.adagrad_sq.array().sqrt() - H.adagrad_sq.array().sqrt()).maxCoeff() / cfg_.eta;
      out.m_hat += delta * sq_diam_half_;
      return out;
    }
    case AlgKind::Adam: {
      Vec d_old = adam_metric_diag(H);
      out.eta_n = schedule_eta(out.round, out.weight_sum);
      out.adam_v = cfg_.beta2 * H.adam_v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
      out.adam_vcount = H.adam_vcount + 1;
      Vec d_new = adam_metric_diag(out);
      double delta = (d_new - d_old).maxCoeff();
      if (delta > 0) out.m_hat += delta * sq_diam_half_;
      return out;
    }
    case AlgKind::Ftrl: {
      out.eta_n = schedule_eta(out.round, out.weight_sum);
      Vec center = decision(h, H);
      double kappa = cfg_.grad_bound * (1.0 / out.eta_n - 1.0 / H.eta_n);
      out.centers.push_back(center);
      out.coeffs.push_back(kappa);
      out.kappa_sum = H.kappa_sum + kappa;
      out.kappa_center = H.kappa_center + kappa * center;
      if (geom_.kind() == GenKind::NegativeEntropy)
        out.kappa_log_center = H.kappa_log_center + kappa * center.array().log().matrix();
      out.m_hat += kappa * bregman_diam_;
      return out;
    }
    case AlgKind::AdaNatGrad: {
      Mat m_old = metric(H).full;
      out.eta_n = schedule_eta(out.round, out.weight_sum);
      Mat f = cfg_.fisher_fn(decision(h, H));
      out.fisher = f + cfg_.fisher_floor * Mat::Identity(f.rows(), f.cols());
      Eigen::LDLT<Mat> ldlt(out.fisher);
      out.nat_acc = cfg_.beta2 * H.nat_acc + (1.0 - cfg_.beta2) * 0.5 * g.dot(ldlt.solve(g));
      Mat m_new = metric(out).full;
      out.m_hat += (m_new - m_old).norm() * sq_diam_half_;
      return out;
    }
  }
  throw StructuralError("adapt: unknown algorithm");
}

RegularizerState BaseAlgorithm::advance_schedule(const LearnerState& h,
                                                 const RegularizerState& H, double w) const {
  RegularizerState out = H;
  out.round = H.round + 1;
  out.weight_sum = H.weight_sum + w;
  switch (cfg_.kind) {
    case AlgKind::AdaGrad:
      return out;  // constant step, no schedule state
    case AlgKind::BasicMD:
      out.eta_n = schedule_eta(out.round, out.weight_sum);
      out.m_hat += cfg_.grad_bound * (1.0 / out.eta_n - 1.0 / H.eta_n) * bregman_diam_;
      return out;
    case AlgKind::Adam: {
      Vec d_old = adam_metric_diag(H);
      out.eta_n = schedule_eta(out.round, out.weight_sum);
      Vec d_new = adam_metric_diag(out);
      double delta = (d_new - d_old).maxCoeff();
      if (delta > 0) out.m_hat += delta * sq_diam_half_;
      return out;
    }
    case AlgKind::Ftrl: {
      out.eta_n = schedule_eta(out.round, out.weight_sum);
      Vec center = decision(h, H);
      double kappa = cfg_.grad_bound * (1.0 / out.eta_n - 1.0 / H.eta_n);
      out.centers.push_back(center);
      out.coeffs.push_back(kappa);
      out.kappa_sum = H.kappa_sum + kappa;
      out.kappa_center = H.kappa_center + kappa * center;
      if (geom_.kind() == GenKind::NegativeEntropy)
        out.kappa_log_center = H.kappa_log_center + kappa * center.array().log().matrix();
      out.m_hat += kappa * bregman_diam_;
      return out;
    }
    case AlgKind::AdaNatGrad:
      out.eta_n = schedule_eta(out.round, out.weight_sum);
      return out;
  }
  throw StructuralError("advance_schedule: unknown algorithm");
}

Vec BaseAlgorithm::ftrl_argmin(const Vec& lin, const RegularizerState& H) const {
  // argmin over the set of <lin, pi> + sum_m kappa_m B_R(pi || center_m)
  if (geom_.kind() == GenKind::SquaredEuclidean) {
    double k = H.kappa_sum;
    Vec target = H.kappa_center / k - lin / (geom_.scale() * k);
    return set_.project(target);
  }
  if (geom_.kind() == GenKind::NegativeEntropy) {
    const int bd = set_.block_dim();
    Vec expo = H.kappa_log_center / H.kappa_sum - lin / (geom_.scale() * H.kappa_sum);
    Vec out(set_.dim());
    for (int b = 0; b < set_.num_blocks(); ++b) {
      Vec e = expo.segment(b * bd, bd);
      double mx = e.maxCoeff();
      Vec z = (e.array() - mx).exp();
      out.segment(b * bd, bd) = z / z.sum();
    }
    return interior_fix(out);
  }
  throw UnsupportedError("FTRL decision solve: unsupported geometry");
}

Vec BaseAlgorithm::decision(const LearnerState& h, const RegularizerState& H) const {
  if (cfg_.kind == AlgKind::Ftrl) return ftrl_argmin(h.h, H);
  return h.h;
}

RegularizerState BaseAlgorithm::shift(const LearnerState& h_hat,
                                      const RegularizerState& H) const {
  if (cfg_.kind != AlgKind::AdaNatGrad) return H;
  RegularizerState out = H;
  Mat f = cfg_.fisher_fn(decision(h_hat, H));
  out.fisher = f + cfg_.fisher_floor * Mat::Identity(f.rows(), f.cols());
  return out;
}

MetricSnapshot BaseAlgorithm::metric(const RegularizerState& H) const {
  MetricSnapshot m;
  switch (cfg_.kind) {
    case AlgKind::BasicMD:
      m.kind = MetricSnapshot::Kind::Scaled;
      m.scale = cfg_.grad_bound * geom_.strong_convexity() / H.eta_n;
      return m;
    case AlgKind::Ftrl:
      m.kind = MetricSnapshot::Kind::Scaled;
      m.scale = H.kappa_sum * geom_.strong_convexity();
      return m;
    case AlgKind::AdaGrad:
      m.kind = MetricSnapshot::Kind::Diagonal;
      m.diag = adagrad_metric_diag(H);
      return m;
    case AlgKind::Adam:
      m.kind = MetricSnapshot::Kind::Diagonal;
      m.diag = adam_metric_diag(H);
      return m;
    case AlgKind::AdaNatGrad: {
      m.kind = MetricSnapshot::Kind::Full;
      double ghat = (H.round > 0) ? H.nat_acc / (1.0 - std::pow(cfg_.beta2, H.round)) : 1.0;
      m.full = (std::sqrt(std::max(ghat, 1e-12)) / H.eta_n) * H.fisher;
      return m;
    }
  }
  throw StructuralError("metric: unknown algorithm");
}

double BaseAlgorithm::primal_norm(const MetricSnapshot& m, const Vec& x) const {
  switch (m.kind) {
    case MetricSnapshot::Kind::Scaled:
      return std::sqrt(m.scale) * geom_.norm(x);
    case MetricSnapshot::Kind::Diagonal:
      return std::sqrt(x.dot(m.diag.cwiseProduct(x)));
    case MetricSnapshot::Kind::Full:
      return std::sqrt(x.dot(m.full * x));
  }
  throw StructuralError("primal_norm: bad snapshot");
}

double BaseAlgorithm::dual_norm(const MetricSnapshot& m, const Vec& g) const {
  switch (m.kind) {
    case MetricSnapshot::Kind::Scaled:
      return geom_.dual_norm(g) / std::sqrt(m.scale);
    case MetricSnapshot::Kind::Diagonal:
      return std::sqrt(g.dot(g.cwiseQuotient(m.diag)));
    case MetricSnapshot::Kind::Full: {
      Eigen::LDLT<Mat> ldlt(m.full);
      return std::sqrt(g.dot(ldlt.solve(g)));
    }
  }
  throw StructuralError("dual_norm: bad snapshot");
}

double BaseAlgorithm::primal_norm(const RegularizerState& H, const Vec& x) const {
  return primal_norm(metric(H), x);
}

double BaseAlgorithm::dual_norm(const RegularizerState& H, const Vec& g) const {
  return dual_norm(metric(H), g);
}

double BaseAlgorithm::last_ftrl_kappa(const RegularizerState& before,
                                      const RegularizerState& after) const {
  if (cfg_.kind != AlgKind::Ftrl) return 0.0;
  return after.kappa_sum - before.kappa_sum;
}

// ---------------------------------------------------------------------------

MirrorStepResult mirror_step_audit(const BregmanGeometry& geom, const FeasibleSet& set,
                                   const Vec& x, const Vec& g, double eta, int num_samples,
                                   Rng& rng) {
  BregmanGeometry unit = rescaled_unit(geom);
  MirrorStepResult res;
  res.y = bregman_prox(unit, set, x, g, eta);
  const double gdual2 = unit.dual_norm(g) * unit.dual_norm(g);
  double s14 = std::numeric_limits<double>::infinity();
  double s15 = s14;
  for (int k = 0; k < num_samples; ++k) {
    Vec z = set.sample(rng);
    if (geom.kind() == GenKind::NegativeEntropy)
      z = (1.0 - 1e-9) * z + Vec::Constant(z.size(), 1e-9 / set.block_dim());
    double bzx = unit.bregman(z, x);
    double bzy = unit.bregman(z, res.y);
    double byx = unit.bregman(res.y, x);
    double lhs14 = eta * g.dot(res.y - z);
    double lhs15 = eta * g.dot(x - z);
    s14 = std::min(s14, (bzx - bzy - byx) - lhs14);
    s15 = std::min(s15, (bzx - bzy + 0.5 * eta * eta * gdual2) - lhs15);
  }
  res.slack_solution_min = s14;
  res.slack_anchor_min = s15;
  return res;
}

}  // namespace piccolo
