#include "piccolo/problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace piccolo {

double LossRecord::value(const Vec& pi) const {
  switch (kind) {
    case Kind::Linear:
      return a.dot(pi);
    case Kind::Quadratic:
      return 0.5 * q * (pi - a).squaredNorm();
    case Kind::Stored:
      return a.dot(pi);  // linearization at the stored gradient
  }
  throw StructuralError("LossRecord::value");
}

Vec LossRecord::gradient(const Vec& pi) const {
  switch (kind) {
    case Kind::Linear:
      return a;
    case Kind::Quadratic:
      return q * (pi - a);
    case Kind::Stored:
      return a;
  }
  throw StructuralError("LossRecord::gradient");
}

// ---------------------------------------------------------------------------
// SyntheticOCO

SyntheticOCO::SyntheticOCO(SyntheticSpec spec, FeasibleSet set)
    : spec_(spec), set_(std::move(set)) {
  if (set_.dim() != spec_.dim) throw ConfigError("synthetic: set dimension mismatch");
  if (!(spec_.period > 0)) throw ConfigError("synthetic: period must be positive");
  Rng rng = derive_rng(spec_.path_seed, "synthetic-path", 0);
  Vec u = rng.gaussian_vector(spec_.dim);
  Vec v = rng.gaussian_vector(spec_.dim);
  u /= u.norm();
  v /= v.norm();
  base_ = spec_.scale * u;
  amp_ = spec_.scale * spec_.drift * v;
  phase_ = Vec(spec_.dim);
  for (int i = 0; i < spec_.dim; ++i) phase_[i] = rng.uniform(0.0, 6.283185307179586);
}

LossRecord SyntheticOCO::mean_loss(long n) const {
  Vec path(spec_.dim);
  for (int i = 0; i < spec_.dim; ++i)
    path[i] = base_[i] + amp_[i] * std::sin(6.283185307179586 * static_cast<double>(n) /
                                                spec_.period +
                                            phase_[i]);
  LossRecord r;
  if (spec_.family == SyntheticFamily::Linear) {
    r.kind = LossRecord::Kind::Linear;
    r.a = path;
  } else {
    r.kind = LossRecord::Kind::Quadratic;
    r.q = spec_.quad_curvature;
    r.a = set_.project(set_.interior_point() + path);  // drifting minimizer inside the set
  }
  return r;
}

double SyntheticOCO::declared_gradient_bound() const {
  if (spec_.family == SyntheticFamily::Linear) return base_.norm() + amp_.norm();
  return spec_.quad_curvature * set_.euclidean_diameter();
}

Vec SyntheticOCO::bias_direction() const {
  // Fixed unit direction that penalizes the true best coordinate and favors
  // the worst one, so the perturbed oracle's argmin genuinely moves.
  Eigen::Index best = 0, worst = 0;
  base_.minCoeff(&best);
  base_.maxCoeff(&worst);
  if (best == worst) {
    Vec u = Vec::Zero(spec_.dim);
    u[0] = 1.0;
    return u;
  }
  Vec u = Vec::Zero(spec_.dim);
  u[best] = 0.7071067811865476;
  u[worst] = -0.7071067811865476;
  return u;
}

namespace {

class SyntheticSession final : public ProblemSession {
 public:
  SyntheticSession(const SyntheticOCO& p, std::uint64_t base_seed, std::uint64_t seed_index)
      : prob_(p),
        env_rng_(derive_rng(base_seed, "env-noise", seed_index)),
        bias_(p.noise().bias * p.bias_direction()) {}

  Vec oracle_gradient(const Vec& query) override {
    return prob_.mean_loss(round_).gradient(query);
  }

  Vec biased_oracle_gradient(const Vec& query) override {
    return prob_.mean_loss(round_).gradient(query) + bias_;
  }

  RoundOutcome commit(const Vec& pi) override {
    RoundOutcome out;
    out.exact_loss = prob_.mean_loss(round_);
    out.loss_value = out.exact_loss.value(pi);
    Vec noise = (prob_.noise().sigma_g > 0) ? env_rng_.ball(pi.size(), prob_.noise().sigma_g)
                                            : Vec(Vec::Zero(pi.size()));
    out.g = out.exact_loss.gradient(pi) + noise;
    out.realized_loss = out.exact_loss;
    if (out.realized_loss.kind == LossRecord::Kind::Linear)
      out.realized_loss.a = out.exact_loss.a + noise;
    else
      out.realized_loss.a = out.exact_loss.a - noise / out.realized_loss.q;
    ++round_;
    return out;
  }

  long round() const override { return round_; }

 private:
  const SyntheticOCO& prob_;
  Rng env_rng_;
  Vec bias_;
  long round_ = 1;
};

}  // namespace

std::unique_ptr<ProblemSession> SyntheticOCO::start_session(std::uint64_t base_seed,
                                                            std::uint64_t seed_index,
                                                            const Vec&) const {
  return std::make_unique<SyntheticSession>(*this, base_seed, seed_index);
}

// ---------------------------------------------------------------------------
// TabularMDP

TabularMDP::TabularMDP(int S, int A, Mat transitions, Mat cost, double gamma, Vec mu)
    : S_(S), A_(A), P_(std::move(transitions)), cost_(std::move(cost)), gamma_(gamma),
      mu_(std::move(mu)) {
  if (S_ < 1 || A_ < 1) throw ConfigError("mdp: S and A must be positive");
  if (P_.rows() != static_cast<Eigen::Index>(S_) * A_ || P_.cols() != S_)
    throw ConfigError("mdp: transition tensor must be (S*A) x S");
  if (cost_.rows() != S_ || cost_.cols() != A_) throw ConfigError("mdp: cost must be S x A");
  if (!(gamma_ > 0 && gamma_ < 1)) throw ConfigError("mdp: gamma must lie in (0,1)");
  if (mu_.size() != S_) throw ConfigError("mdp: initial distribution must have S entries");
  for (Eigen::Index r = 0; r < P_.rows(); ++r) {
    if ((P_.row(r).array() < -1e-12).any())
      throw ConfigError("mdp: negative transition probability in row " + std::to_string(r));
    if (std::abs(P_.row(r).sum() - 1.0) > 1e-9)
      throw ConfigError("mdp: transition row " + std::to_string(r) + " does not sum to 1");
  }
  if ((cost_.array() < -1e-12).any() || (cost_.array() > 1.0 + 1e-12).any())
    throw ConfigError("mdp: costs must lie in [0,1]");
  if (std::abs(mu_.sum() - 1.0) > 1e-9 || (mu_.array() < -1e-12).any())
    throw ConfigError("mdp: initial distribution must be a probability vector");
}

Mat TabularMDP::policy_matrix(const Vec& pi) const {
  if (pi.size() != static_cast<Eigen::Index>(S_) * A_)
    throw StructuralError("policy: wrong dimension");
  Mat m(S_, A_);
  for (int s = 0; s < S_; ++s) {
    m.row(s) = pi.segment(static_cast<Eigen::Index>(s) * A_, A_).transpose();
    double sum = m.row(s).sum();
    if (std::abs(sum - 1.0) > 1e-8 || (m.row(s).array() < -1e-10).any())
      throw StructuralError("policy: state row " + std::to_string(s) + " not a distribution");
  }
  return m;
}

Vec TabularMDP::occupancy(const Vec& pi) const {
  Mat pol = policy_matrix(pi);
  Mat ppi(S_, S_);  // P_pi(s, s')
  for (int s = 0; s < S_; ++s) {
    ppi.row(s).setZero();
    for (int a = 0; a < A_; ++a)
      ppi.row(s) += pol(s, a) * P_.row(static_cast<Eigen::Index>(s) * A_ + a);
  }
  Mat lhs = Mat::Identity(S_, S_) - gamma_ * ppi.transpose();
  Vec d = lhs.partialPivLu().solve((1.0 - gamma_) * mu_);
  return d;
}

PolicyEval TabularMDP::evaluate(const Vec& pi) const {
  Mat pol = policy_matrix(pi);
  Mat ppi(S_, S_);
  Vec cpi(S_);
  for (int s = 0; s < S_; ++s) {
    ppi.row(s).setZero();
    double c = 0;
    for (int a = 0; a < A_; ++a) {
      ppi.row(s) += pol(s, a) * P_.row(static_cast<Eigen::Index>(s) * A_ + a);
      c += pol(s, a) * cost_(s, a);
    }
    cpi[s] = c;
  }
  PolicyEval ev;
  ev.V = (Mat::Identity(S_, S_) - gamma_ * ppi).partialPivLu().solve(cpi);
  ev.Q = Mat(S_, A_);
  for (int s = 0; s < S_; ++s)
    for (int a = 0; a < A_; ++a)
      ev.Q(s, a) = cost_(s, a) + gamma_ * P_.row(static_cast<Eigen::Index>(s) * A_ + a).dot(ev.V);
  ev.A = ev.Q.colwise() - ev.V;
  return ev;
}

double TabularMDP::performance(const Vec& pi) const {
  Mat pol = policy_matrix(pi);
  Vec d = occupancy(pi);
  double j = 0;
  for (int s = 0; s < S_; ++s)
    for (int a = 0; a < A_; ++a) j += d[s] * pol(s, a) * cost_(s, a);
  return j;
}

Vec TabularMDP::greedy_policy(const Mat& Q) const {
  Vec pi = Vec::Zero(static_cast<Eigen::Index>(S_) * A_);
  for (int s = 0; s < S_; ++s) {
    int best = 0;
    for (int a = 1; a < A_; ++a)
      if (Q(s, a) < Q(s, best)) best = a;
    pi[static_cast<Eigen::Index>(s) * A_ + best] = 1.0;
  }
  return pi;
}

Vec TabularMDP::optimal_policy() const {
  Vec pi = Vec::Constant(static_cast<Eigen::Index>(S_) * A_, 1.0 / A_);
  for (int it = 0; it < 1000; ++it) {
    Vec next = greedy_policy(evaluate(pi).Q);
    if ((next - pi).lpNorm<Eigen::Infinity>() == 0.0) return pi;
    pi = next;
  }
  return pi;
}

TabularMDP TabularMDP::perturb_transitions(double beta) const {
  Mat p = P_;
  for (int s = 0; s < S_; ++s)
    for (int a = 0; a < A_; ++a) {
      Eigen::Index r = static_cast<Eigen::Index>(s) * A_ + a;
      for (int sp = 0; sp < S_; ++sp) {
        double f = ((s + a + sp) % 2 == 0) ? (1.0 + beta) : (1.0 - beta);
        p(r, sp) = P_(r, sp) * f;
      }
      double sum = p.row(r).sum();
      if (sum <= 0) throw ConfigError("perturb: transition row degenerated");
      p.row(r) /= sum;
    }
  return TabularMDP(S_, A_, p, cost_, gamma_, mu_);
}

TabularMDP TabularMDP::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("mdp file: cannot open " + path);
  int S = -1, A = -1;
  double gamma = -1;
  std::vector<double> pvals, cvals, muvals;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    auto read_all = [&](std::vector<double>& dst) {
      double v;
      while (ss >> v) dst.push_back(v);
      if (!ss.eof())
        throw ConfigError("mdp file: bad number on line " + std::to_string(lineno));
    };
    if (key == "S") {
      if (!(ss >> S)) throw ConfigError("mdp file: bad S on line " + std::to_string(lineno));
    } else if (key == "A") {
      if (!(ss >> A)) throw ConfigError("mdp file: bad A on line " + std::to_string(lineno));
    } else if (key == "gamma") {
      if (!(ss >> gamma))
        throw ConfigError("mdp file: bad gamma on line " + std::to_string(lineno));
    } else if (key == "P") {
      read_all(pvals);
    } else if (key == "c") {
      read_all(cvals);
    } else if (key == "mu") {
      read_all(muvals);
    } else {
      throw ConfigError("mdp file: unknown field '" + key + "' on line " +
                        std::to_string(lineno));
    }
  }
  if (S < 1 || A < 1) throw ConfigError("mdp file: missing or invalid S/A");
  if (gamma < 0) throw ConfigError("mdp file: missing gamma");
  if (static_cast<long>(pvals.size()) != static_cast<long>(S) * A * S)
    throw ConfigError("mdp file: P needs S*A*S = " + std::to_string((long)S * A * S) +
                      " values, got " + std::to_string(pvals.size()));
  if (static_cast<long>(cvals.size()) != static_cast<long>(S) * A)
    throw ConfigError("mdp file: c needs S*A values, got " + std::to_string(cvals.size()));
  if (static_cast<long>(muvals.size()) != S)
    throw ConfigError("mdp file: mu needs S values, got " + std::to_string(muvals.size()));
  Mat P(S * A, S), cost(S, A);
  for (int r = 0; r < S * A; ++r)
    for (int sp = 0; sp < S; ++sp) P(r, sp) = pvals[static_cast<long>(r) * S + sp];
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) cost(s, a) = cvals[static_cast<long>(s) * A + a];
  Vec mu = Eigen::Map<Vec>(muvals.data(), S);
  return TabularMDP(S, A, P, cost, gamma, mu);
}

void TabularMDP::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("mdp file: cannot write " + path);
  out << "S " << S_ << "\nA " << A_ << "\ngamma " << format_double(gamma_) << "\n";
  out << "mu";
  for (int s = 0; s < S_; ++s) out << ' ' << format_double(mu_[s]);
  out << "\nP";
  for (Eigen::Index r = 0; r < P_.rows(); ++r)
    for (int sp = 0; sp < S_; ++sp) out << ' ' << format_double(P_(r, sp));
  out << "\nc";
  for (int s = 0; s < S_; ++s)
    for (int a = 0; a < A_; ++a) out << ' ' << format_double(cost_(s, a));
  out << "\n";
}

TabularMDP TabularMDP::random_garnet(int S, int A, int branching, Rng& rng, double gamma) {
  Mat P = Mat::Zero(static_cast<Eigen::Index>(S) * A, S);
  Mat cost(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      // choose `branching` distinct successors
      std::vector<int> succ;
      while (static_cast<int>(succ.size()) < std::min(branching, S)) {
        int cand = static_cast<int>(rng.uniform_int(0, S - 1));
        bool dup = false;
        for (int x : succ) dup = dup || (x == cand);
        if (!dup) succ.push_back(cand);
      }
      double total = 0;
      std::vector<double> mass(succ.size());
      for (size_t i = 0; i < succ.size(); ++i) {
        mass[i] = rng.uniform() + 1e-3;
        total += mass[i];
      }
      for (size_t i = 0; i < succ.size(); ++i)
        P(static_cast<Eigen::Index>(s) * A + a, succ[i]) = mass[i] / total;
      cost(s, a) = rng.uniform();
    }
  Vec mu = Vec::Constant(S, 1.0 / S);
  return TabularMDP(S, A, P, cost, gamma, mu);
}

TabularMDP TabularMDP::gridworld5(double gamma, double stay_prob) {
  const int side = 5, S = side * side, A = 4;
  const int goal = S - 1;
  Mat P = Mat::Zero(static_cast<Eigen::Index>(S) * A, S);
  Mat cost(S, A);
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int s = 0; s < S; ++s) {
    int r = s / side, c = s % side;
    for (int a = 0; a < A; ++a) {
      Eigen::Index row = static_cast<Eigen::Index>(s) * A + a;
      if (s == goal) {
        P(row, goal) = 1.0;
        cost(s, a) = 0.0;
        continue;
      }
      int nr = r + dr[a], nc = c + dc[a];
      int target = (nr >= 0 && nr < side && nc >= 0 && nc < side) ? nr * side + nc : s;
      P(row, target) += 1.0 - stay_prob;
      P(row, s) += stay_prob;
      cost(s, a) = 1.0;
    }
  }
  Vec mu = Vec::Zero(S);
  mu[0] = 1.0;
  return TabularMDP(S, A, P, cost, gamma, mu);
}

// ---------------------------------------------------------------------------
// TabularPolicyOpt

TabularPolicyOpt::TabularPolicyOpt(TabularMDP mdp, TabularSpec spec)
    : mdp_(std::move(mdp)),
      biased_(mdp_.perturb_transitions(spec.bias_beta)),
      spec_(spec),
      set_(FeasibleSet::product_simplex(mdp_.num_states(), mdp_.num_actions())),
      expert_(mdp_.optimal_policy()),
      expert_adv_(mdp_.evaluate(expert_).A) {}

namespace {

Vec flatten_loss(const Vec& d, const Mat& adv) {
  const int S = static_cast<int>(adv.rows()), A = static_cast<int>(adv.cols());
  Vec out(static_cast<Eigen::Index>(S) * A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) out[static_cast<Eigen::Index>(s) * A + a] = d[s] * adv(s, a);
  return out;
}

class TabularSession final : public ProblemSession {
 public:
  TabularSession(const TabularPolicyOpt& p, std::uint64_t base_seed, std::uint64_t seed_index,
                 const Vec& initial_policy)
      : prob_(p), rollout_rng_(derive_rng(base_seed, "rollout", seed_index)) {
    pi_prev_ = initial_policy;
    refresh_reference();
  }

  Vec oracle_gradient(const Vec& query) override {
    return flatten_loss(prob_.mdp().occupancy(query), adv_prev_);
  }

  Vec biased_oracle_gradient(const Vec& query) override {
    return flatten_loss(prob_.biased_mdp().occupancy(query), biased_adv_prev_);
  }

  RoundOutcome commit(const Vec& pi) override {
    RoundOutcome out;
    Vec d = prob_.mdp().occupancy(pi);
    Vec coeff = flatten_loss(d, adv_prev_);
    out.exact_loss.kind = LossRecord::Kind::Linear;
    out.exact_loss.a = coeff;
    out.loss_value = coeff.dot(pi);
    out.performance = prob_.mdp().performance(pi);
    if (prob_.spec().feedback == FeedbackKind::Exact) {
      out.g = coeff;
    } else {
      Vec dhat = sample_occupancy(pi);
      out.g = flatten_loss(dhat, adv_prev_);
    }
    out.realized_loss.kind = LossRecord::Kind::Linear;
    out.realized_loss.a = out.g;
    ++round_;
    if (prob_.spec().loss == TabularLoss::PolicyImprovement) {
      pi_prev_ = pi;
      refresh_reference();
    }
    return out;
  }

  long round() const override { return round_; }

 private:
  void refresh_reference() {
    if (prob_.spec().loss == TabularLoss::ExpertImitation) {
      adv_prev_ = prob_.expert_advantage();
      biased_adv_prev_ = prob_.biased_mdp().evaluate(prob_.expert_policy()).A;
    } else {
      adv_prev_ = prob_.mdp().evaluate(pi_prev_).A;
      biased_adv_prev_ = prob_.biased_mdp().evaluate(pi_prev_).A;
    }
  }

  // One state sample per rollout: stop at each step with probability 1-gamma,
  // so the recorded state is distributed as the discounted occupancy.
  Vec sample_occupancy(const Vec& pi) {
    const auto& mdp = prob_.mdp();
    const int S = mdp.num_states(), A = mdp.num_actions();
    Vec counts = Vec::Zero(S);
    for (int k = 0; k < prob_.spec().rollouts; ++k) {
      int s = static_cast<int>(rollout_rng_.categorical(mdp.initial_distribution()));
      while (rollout_rng_.uniform() >= 1.0 - mdp.gamma()) {
        Vec probs = pi.segment(static_cast<Eigen::Index>(s) * A, A);
        int a = static_cast<int>(rollout_rng_.categorical(probs));
        Vec row = mdp.transitions().row(static_cast<Eigen::Index>(s) * A + a).transpose();
        s = static_cast<int>(rollout_rng_.categorical(row));
      }
      counts[s] += 1.0;
    }
    return counts / static_cast<double>(prob_.spec().rollouts);
  }

  const TabularPolicyOpt& prob_;
  Rng rollout_rng_;
  Vec pi_prev_;
  Mat adv_prev_, biased_adv_prev_;
  long round_ = 1;
};

}  // namespace

std::unique_ptr<ProblemSession> TabularPolicyOpt::start_session(std::uint64_t base_seed,
                                                                std::uint64_t seed_index,
                                                                const Vec& initial_policy) const {
  require_dim(initial_policy, set_.dim(), "tabular session initial policy");
  return std::make_unique<TabularSession>(*this, base_seed, seed_index, initial_policy);
}

// ---------------------------------------------------------------------------
// SoftmaxPolicyOpt

SoftmaxPolicyOpt::SoftmaxPolicyOpt(TabularMDP mdp, TabularSpec spec, double logit_bound)
    : mdp_(std::move(mdp)),
      spec_(spec),
      set_(FeasibleSet::box(
          Vec::Constant(static_cast<Eigen::Index>(mdp_.num_states()) * mdp_.num_actions(),
                        -logit_bound),
          Vec::Constant(static_cast<Eigen::Index>(mdp_.num_states()) * mdp_.num_actions(),
                        logit_bound))) {}

Vec SoftmaxPolicyOpt::policy_from_logits(const Vec& theta) const {
  const int S = mdp_.num_states(), A = mdp_.num_actions();
  Vec pi(theta.size());
  for (int s = 0; s < S; ++s) {
    Vec t = theta.segment(static_cast<Eigen::Index>(s) * A, A);
    double mx = t.maxCoeff();
    Vec e = (t.array() - mx).exp();
    pi.segment(static_cast<Eigen::Index>(s) * A, A) = e / e.sum();
  }
  return pi;
}

Mat SoftmaxPolicyOpt::fisher(const Vec& theta) const {
  const int S = mdp_.num_states(), A = mdp_.num_actions();
  Vec pi = policy_from_logits(theta);
  Vec d = mdp_.occupancy(pi);
  Mat f = Mat::Zero(theta.size(), theta.size());
  for (int s = 0; s < S; ++s) {
    Vec ps = pi.segment(static_cast<Eigen::Index>(s) * A, A);
    Mat block = Mat(ps.asDiagonal()) - ps * ps.transpose();
    f.block(static_cast<Eigen::Index>(s) * A, static_cast<Eigen::Index>(s) * A, A, A) =
        d[s] * block;
  }
  return f;
}

namespace {

class SoftmaxSession final : public ProblemSession {
 public:
  SoftmaxSession(const SoftmaxPolicyOpt& p, const Vec& initial_theta) : prob_(p) {
    pi_prev_ = prob_.policy_from_logits(initial_theta);
    adv_prev_ = prob_.mdp().evaluate(pi_prev_).A;
  }

  Vec oracle_gradient(const Vec& theta) override { return gradient_at(theta, adv_prev_); }

  Vec biased_oracle_gradient(const Vec& theta) override {
    return gradient_at(theta, adv_prev_);  // softmax harness keeps the true model
  }

  RoundOutcome commit(const Vec& theta) override {
    RoundOutcome out;
    Vec pi = prob_.policy_from_logits(theta);
    out.g = gradient_at(theta, adv_prev_);
    out.exact_loss.kind = LossRecord::Kind::Stored;
    out.exact_loss.a = out.g;
    Vec d = prob_.mdp().occupancy(pi);
    double v = 0;
    const int A = prob_.mdp().num_actions();
    for (int s = 0; s < prob_.mdp().num_states(); ++s)
      for (int a = 0; a < A; ++a)
        v += d[s] * pi[static_cast<Eigen::Index>(s) * A + a] * adv_prev_(s, a);
    out.loss_value = v;
    out.performance = prob_.mdp().performance(pi);
    out.realized_loss = out.exact_loss;
    ++round_;
    pi_prev_ = pi;
    adv_prev_ = prob_.mdp().evaluate(pi_prev_).A;
    return out;
  }

  long round() const override { return round_; }

 private:
  Vec gradient_at(const Vec& theta, const Mat& adv) {
    const int S = prob_.mdp().num_states(), A = prob_.mdp().num_actions();
    Vec pi = prob_.policy_from_logits(theta);
    Vec d = prob_.mdp().occupancy(pi);
    Vec g(theta.size());
    for (int s = 0; s < S; ++s) {
      Vec ps = pi.segment(static_cast<Eigen::Index>(s) * A, A);
      double mean_adv = 0;
      for (int a = 0; a < A; ++a) mean_adv += ps[a] * adv(s, a);
      for (int a = 0; a < A; ++a)
        g[static_cast<Eigen::Index>(s) * A + a] = d[s] * ps[a] * (adv(s, a) - mean_adv);
    }
    return g;
  }

  const SoftmaxPolicyOpt& prob_;
  Vec pi_prev_;
  Mat adv_prev_;
  long round_ = 1;
};

}  // namespace

std::unique_ptr<ProblemSession> SoftmaxPolicyOpt::start_session(std::uint64_t, std::uint64_t,
                                                                const Vec& initial_theta) const {
  require_dim(initial_theta, set_.dim(), "softmax session initial logits");
  return std::make_unique<SoftmaxSession>(*this, initial_theta);
}

}  // namespace piccolo
