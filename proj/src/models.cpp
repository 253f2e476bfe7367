#include "piccolo/models.hpp"

namespace piccolo {

namespace {

class ZeroModel final : public PredictiveModel {
 public:
  Vec predict(ProblemSession&, const Vec& point) override { return Vec::Zero(point.size()); }
};

// Off-policy buffer of realized losses; predictions reevaluate the buffered
// losses at the queried point when their form allows it.
class ReplayModel final : public PredictiveModel {
 public:
  explicit ReplayModel(int capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw ConfigError("replay model: buffer size must be >= 1");
  }

  Vec predict(ProblemSession&, const Vec& point) override {
    if (buffer_.empty()) return Vec::Zero(point.size());
    Vec sum = Vec::Zero(point.size());
    for (const auto& rec : buffer_) sum += rec.gradient(point);
    return sum / static_cast<double>(buffer_.size());
  }

  void update(const RoundData& data) override {
    buffer_.push_back(data.realized_loss);
    while (static_cast<int>(buffer_.size()) > capacity_) buffer_.pop_front();
  }

 private:
  int capacity_;
  std::deque<LossRecord> buffer_;
};

class OracleModel final : public PredictiveModel {
 public:
  OracleModel(bool biased, double sigma, std::uint64_t base_seed, std::uint64_t seed_index)
      : biased_(biased), sigma_(sigma), rng_(derive_rng(base_seed, "model-noise", seed_index)) {}

  void begin_round(ProblemSession&, Eigen::Index dim) override {
    // one noise draw per round keeps repeated fixed-point queries consistent
    noise_ = (sigma_ > 0) ? rng_.ball(dim, sigma_) : Vec(Vec::Zero(dim));
  }

  Vec predict(ProblemSession& session, const Vec& point) override {
    Vec clean = biased_ ? session.biased_oracle_gradient(point) : session.oracle_gradient(point);
    if (noise_.size() != clean.size()) noise_ = Vec::Zero(clean.size());
    return clean + noise_;
  }

  bool supports_fixed_point() const override { return true; }

 private:
  bool biased_;
  double sigma_;
  Rng rng_;
  Vec noise_;
};

class AdversarialModel final : public PredictiveModel {
 public:
  Vec predict(ProblemSession&, const Vec& point) override {
    if (last_g_.size() == 0 || last_norm_ == 0.0) return Vec::Zero(point.size());
    return -(max_norm_ / last_norm_) * last_g_;
  }

  void update(const RoundData& data) override {
    last_g_ = data.g;
    last_norm_ = data.g.norm();
    max_norm_ = std::max(max_norm_, last_norm_);
  }

 private:
  Vec last_g_;
  double last_norm_ = 0.0;
  double max_norm_ = 0.0;
};

// Online least squares ghat = W [point; g_prev], trained by diagonal AdaGrad
// on the squared prediction error.
class LearnedLinearModel final : public PredictiveModel {
 public:
  explicit LearnedLinearModel(double learn_rate) : eta_(learn_rate) {}

  Vec predict(ProblemSession&, const Vec& point) override {
    ensure_sized(point.size());
    last_features_ = features(point);
    return w_ * last_features_;
  }

  void update(const RoundData& data) override {
    ensure_sized(data.pi.size());
    if (last_features_.size() == 0) last_features_ = features(data.pi_hat);
    Vec err = w_ * last_features_ - data.g;  // = ghat - g when predict ran this round
    Mat grad = err * last_features_.transpose();
    acc_ += grad.cwiseProduct(grad);
    w_ -= eta_ * grad.cwiseQuotient((acc_.cwiseSqrt().array() + 1e-8).matrix());
    g_prev_ = data.g;
  }

 private:
  void ensure_sized(Eigen::Index d) {
    if (w_.rows() == d) return;
    w_ = Mat::Zero(d, 2 * d);
    acc_ = Mat::Zero(d, 2 * d);
    g_prev_ = Vec::Zero(d);
  }

  Vec features(const Vec& point) const {
    Vec f(2 * point.size());
    f << point, g_prev_;
    return f;
  }

  double eta_;
  Mat w_, acc_;
  Vec g_prev_, last_features_;
};

}  // namespace

std::unique_ptr<PredictiveModel> make_model(const ModelParams& params, std::uint64_t base_seed,
                                            std::uint64_t seed_index) {
  switch (params.kind) {
    case ModelKind::Zero:
      return std::make_unique<ZeroModel>();
    case ModelKind::LastGradient:
      return std::make_unique<ReplayModel>(1);
    case ModelKind::ReplayAverage:
      return std::make_unique<ReplayModel>(params.replay_size);
    case ModelKind::OracleTrue:
      return std::make_unique<OracleModel>(false, params.sigma_ghat, base_seed, seed_index);
    case ModelKind::BiasedOracle:
      return std::make_unique<OracleModel>(true, params.sigma_ghat, base_seed, seed_index);
    case ModelKind::Adversarial:
      return std::make_unique<AdversarialModel>();
    case ModelKind::LearnedLinear:
      return std::make_unique<LearnedLinearModel>(params.learn_rate);
  }
  throw ConfigError("make_model: unknown model kind");
}

FixedPointResult fixed_point_predict(PredictiveModel& model, ProblemSession& session,
                                     const BaseAlgorithm& alg, const LearnerState& h_hat,
                                     const RegularizerState& H, double w,
                                     const FixedPointConfig& cfg) {
  if (cfg.max_iters < 1) throw StructuralError("fixed point: max_iters must be >= 1");
  auto step = [&](const Vec& point) {
    LearnerState next = alg.update(h_hat, H, model.predict(session, point), w,
                                   BaseAlgorithm::UpdateMode::TransientMomentum);
    return alg.decision(next, H);
  };
  Vec pi_hat = alg.decision(h_hat, H);
  Vec x = step(pi_hat);  // heuristic initialization
  Vec best = x;
  double best_res = std::numeric_limits<double>::infinity();
  int iters = 0;
  for (; iters < cfg.max_iters; ++iters) {
    Vec next = step(x);
    double res = (next - x).norm();
    if (res < best_res) {
      best_res = res;
      best = x;
    }
    x = next;
    if (res <= cfg.tolerance) break;
  }
  FixedPointResult out;
  out.pi_fp = best;
  out.ghat = model.predict(session, best);
  LearnerState h_n = alg.update(h_hat, H, out.ghat, w, BaseAlgorithm::UpdateMode::TransientMomentum);
  out.residual = (alg.decision(h_n, H) - best).norm();
  out.iterations = iters + 1;
  out.converged = out.residual <= cfg.tolerance;
  return out;
}

}  // namespace piccolo
