#include "piccolo/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace piccolo {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_array(const std::string& body, long lineno) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : body) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  std::string last = trim(cur);
  if (!last.empty()) out.push_back(last);
  for (auto& s : out)
    if (s.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty array item");
  return out;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

ConfigTable parse_config_text(const std::string& text) {
  ConfigTable table;
  std::istringstream in(text);
  std::string line, section;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      table[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
    ConfigValue cv;
    if (val.front() == '[') {
      if (val.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated array");
      cv.is_array = true;
      cv.items = split_array(val.substr(1, val.size() - 2), lineno);
      for (auto& s : cv.items) s = unquote(s);
      if (cv.items.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty sweep list for " +
                          section + "." + key);
    } else {
      cv.items.push_back(unquote(val));
    }
    table[section][key] = std::move(cv);
  }
  return table;
}

ConfigTable load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

// Typed view over one section that records consumed keys and rejects leftovers.
class SectionReader {
 public:
  SectionReader(const ConfigTable& t, const std::string& name) : name_(name) {
    auto it = t.find(name);
    if (it != t.end()) section_ = &it->second;
  }

  std::string str(const std::string& key, const std::string& def) {
    const ConfigValue* v = fetch(key);
    return v ? v->items[0] : def;
  }
  double num(const std::string& key, double def) {
    const ConfigValue* v = fetch(key);
    if (!v) return def;
    return parse_num(v->items[0], key);
  }
  long integer(const std::string& key, long def) {
    double d = num(key, static_cast<double>(def));
    if (d != std::floor(d)) throw ConfigError(name_ + "." + key + ": expected an integer");
    return static_cast<long>(d);
  }
  std::uint64_t uint(const std::string& key, std::uint64_t def) {
    const ConfigValue* v = fetch(key);
    if (!v) return def;
    try {
      return std::stoull(v->items[0]);
    } catch (...) {
      throw ConfigError(name_ + "." + key + ": expected an unsigned integer");
    }
  }
  bool boolean(const std::string& key, bool def) {
    const ConfigValue* v = fetch(key);
    if (!v) return def;
    if (v->items[0] == "true") return true;
    if (v->items[0] == "false") return false;
    throw ConfigError(name_ + "." + key + ": expected true or false");
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [key, value] : *section_) {
      if (!consumed_.count(key)) throw ConfigError(name_ + "." + key + ": unknown key");
      if (value.is_array)
        throw ConfigError(name_ + "." + key + ": sweep lists are only valid in sweep mode");
    }
  }

 private:
  const ConfigValue* fetch(const std::string& key) {
    if (!section_) return nullptr;
    auto it = section_->find(key);
    if (it == section_->end()) return nullptr;
    consumed_.insert(key);
    if (it->second.is_array)
      throw ConfigError(name_ + "." + key + ": unexpected list value");
    return &it->second;
  }
  double parse_num(const std::string& s, const std::string& key) const {
    try {
      size_t used = 0;
      double d = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("");
      return d;
    } catch (...) {
      throw ConfigError(name_ + "." + key + ": expected a number, got '" + s + "'");
    }
  }

  std::string name_;
  const std::map<std::string, ConfigValue>* section_ = nullptr;
  std::set<std::string> consumed_;
};

const std::set<std::string> kKnownSections = {"problem", "algorithm", "meta", "run"};

void check_sections(const ConfigTable& t) {
  for (const auto& [name, _] : t)
    if (!kKnownSections.count(name)) throw ConfigError(name + ": unknown section");
}

}  // namespace

ExperimentConfig resolve_config(const ConfigTable& table) {
  check_sections(table);
  ExperimentConfig cfg;

  SectionReader p(table, "problem");
  cfg.problem.type = p.str("type", cfg.problem.type);
  cfg.problem.dim = static_cast<int>(p.integer("dim", cfg.problem.dim));
  cfg.problem.set = p.str("set", cfg.problem.set);
  cfg.problem.ball_radius = p.num("ball_radius", cfg.problem.ball_radius);
  cfg.problem.box_halfwidth = p.num("box_halfwidth", cfg.problem.box_halfwidth);
  cfg.problem.scale = p.num("scale", cfg.problem.scale);
  cfg.problem.drift = p.num("drift", cfg.problem.drift);
  cfg.problem.period = p.num("period", cfg.problem.period);
  cfg.problem.quad_curvature = p.num("quad_curvature", cfg.problem.quad_curvature);
  cfg.problem.path_seed = p.uint("path_seed", cfg.problem.path_seed);
  cfg.problem.sigma_g = p.num("sigma_g", cfg.problem.sigma_g);
  cfg.problem.sigma_ghat = p.num("sigma_ghat", cfg.problem.sigma_ghat);
  cfg.problem.bias = p.num("bias", cfg.problem.bias);
  cfg.problem.mdp = p.str("mdp", cfg.problem.mdp);
  cfg.problem.mdp_seed = p.uint("mdp_seed", cfg.problem.mdp_seed);
  cfg.problem.mdp_states = static_cast<int>(p.integer("mdp_states", cfg.problem.mdp_states));
  cfg.problem.mdp_actions = static_cast<int>(p.integer("mdp_actions", cfg.problem.mdp_actions));
  cfg.problem.mdp_branching =
      static_cast<int>(p.integer("mdp_branching", cfg.problem.mdp_branching));
  cfg.problem.gamma = p.num("gamma", cfg.problem.gamma);
  cfg.problem.feedback = p.str("feedback", cfg.problem.feedback);
  cfg.problem.rollouts = static_cast<int>(p.integer("rollouts", cfg.problem.rollouts));
  cfg.problem.bias_beta = p.num("bias_beta", cfg.problem.bias_beta);
  p.finish();

  SectionReader a(table, "algorithm");
  cfg.algorithm.name = a.str("name", cfg.algorithm.name);
  cfg.algorithm.eta = a.num("eta", cfg.algorithm.eta);
  cfg.algorithm.c = a.num("c", cfg.algorithm.c);
  cfg.algorithm.grad_bound = a.num("G", cfg.algorithm.grad_bound);
  cfg.algorithm.beta1 = a.num("beta1", cfg.algorithm.beta1);
  cfg.algorithm.beta2 = a.num("beta2", cfg.algorithm.beta2);
  cfg.algorithm.epsilon = a.num("epsilon", cfg.algorithm.epsilon);
  cfg.algorithm.fisher_floor = a.num("fisher_floor", cfg.algorithm.fisher_floor);
  cfg.algorithm.geometry = a.str("geometry", cfg.algorithm.geometry);
  cfg.algorithm.geometry_scale = a.num("geometry_scale", cfg.algorithm.geometry_scale);
  cfg.algorithm.adam_m_in_prediction =
      a.str("adam_m_in_prediction", cfg.algorithm.adam_m_in_prediction);
  a.finish();

  SectionReader m(table, "meta");
  cfg.meta.mode = m.str("mode", cfg.meta.mode);
  cfg.meta.model = m.str("model", cfg.meta.model);
  cfg.meta.replay_size = static_cast<int>(m.integer("replay_size", cfg.meta.replay_size));
  cfg.meta.learn_rate = m.num("learn_rate", cfg.meta.learn_rate);
  cfg.meta.fixed_point = m.boolean("fixed_point", cfg.meta.fixed_point);
  cfg.meta.fp_max_iters = static_cast<int>(m.integer("fp_max_iters", cfg.meta.fp_max_iters));
  cfg.meta.fp_tolerance = m.num("fp_tolerance", cfg.meta.fp_tolerance);
  cfg.meta.shift = m.boolean("shift", cfg.meta.shift);
  m.finish();

  SectionReader r(table, "run");
  cfg.run.rounds = r.integer("rounds", cfg.run.rounds);
  cfg.run.weight_exponent = r.num("weight_exponent", cfg.run.weight_exponent);
  cfg.run.seeds = static_cast<int>(r.integer("seeds", cfg.run.seeds));
  cfg.run.base_seed = r.uint("base_seed", cfg.run.base_seed);
  r.finish();

  if (cfg.run.rounds < 1) throw ConfigError("run.rounds: must be >= 1");
  if (cfg.run.seeds < 1) throw ConfigError("run.seeds: must be >= 1");
  return cfg;
}

std::vector<std::pair<std::string, ExperimentConfig>> expand_sweep(const ConfigTable& table) {
  check_sections(table);
  // collect array-valued axes in deterministic (section, key) order
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;  // "section.key"
  for (const auto& [sec, kv] : table)
    for (const auto& [key, value] : kv)
      if (value.is_array) axes.push_back({sec + "." + key, value.items});
  if (axes.empty()) throw ConfigError("sweep: no list-valued fields to expand");

  std::vector<std::pair<std::string, ExperimentConfig>> out;
  std::vector<size_t> idx(axes.size(), 0);
  while (true) {
    ConfigTable concrete = table;
    std::string label;
    for (size_t i = 0; i < axes.size(); ++i) {
      auto dot = axes[i].first.find('.');
      std::string sec = axes[i].first.substr(0, dot);
      std::string key = axes[i].first.substr(dot + 1);
      ConfigValue cv;
      cv.items = {axes[i].second[idx[i]]};
      concrete[sec][key] = cv;
      if (!label.empty()) label += "_";
      label += key + "=" + axes[i].second[idx[i]];
    }
    out.push_back({label, resolve_config(concrete)});
    size_t k = 0;
    for (; k < axes.size(); ++k) {
      if (++idx[k] < axes[k].second.size()) break;
      idx[k] = 0;
    }
    if (k == axes.size()) break;
  }
  return out;
}

namespace {

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  out << "[problem]\n";
  out << "type = " << quoted(problem.type) << "\n";
  out << "dim = " << problem.dim << "\n";
  out << "set = " << quoted(problem.set) << "\n";
  out << "ball_radius = " << format_double(problem.ball_radius) << "\n";
  out << "box_halfwidth = " << format_double(problem.box_halfwidth) << "\n";
  out << "scale = " << format_double(problem.scale) << "\n";
  out << "drift = " << format_double(problem.drift) << "\n";
  out << "period = " << format_double(problem.period) << "\n";
  out << "quad_curvature = " << format_double(problem.quad_curvature) << "\n";
  out << "path_seed = " << problem.path_seed << "\n";
  out << "sigma_g = " << format_double(problem.sigma_g) << "\n";
  out << "sigma_ghat = " << format_double(problem.sigma_ghat) << "\n";
  out << "bias = " << format_double(problem.bias) << "\n";
  out << "mdp = " << quoted(problem.mdp) << "\n";
  out << "mdp_seed = " << problem.mdp_seed << "\n";
  out << "mdp_states = " << problem.mdp_states << "\n";
  out << "mdp_actions = " << problem.mdp_actions << "\n";
  out << "mdp_branching = " << problem.mdp_branching << "\n";
  out << "gamma = " << format_double(problem.gamma) << "\n";
  out << "feedback = " << quoted(problem.feedback) << "\n";
  out << "rollouts = " << problem.rollouts << "\n";
  out << "bias_beta = " << format_double(problem.bias_beta) << "\n";
  out << "\n[algorithm]\n";
  out << "name = " << quoted(algorithm.name) << "\n";
  out << "eta = " << format_double(algorithm.eta) << "\n";
  out << "c = " << format_double(algorithm.c) << "\n";
  out << "G = " << format_double(algorithm.grad_bound) << "\n";
  out << "beta1 = " << format_double(algorithm.beta1) << "\n";
  out << "beta2 = " << format_double(algorithm.beta2) << "\n";
  out << "epsilon = " << format_double(algorithm.epsilon) << "\n";
  out << "fisher_floor = " << format_double(algorithm.fisher_floor) << "\n";
  out << "geometry = " << quoted(algorithm.geometry) << "\n";
  out << "geometry_scale = " << format_double(algorithm.geometry_scale) << "\n";
  out << "adam_m_in_prediction = " << quoted(algorithm.adam_m_in_prediction) << "\n";
  out << "\n[meta]\n";
  out << "mode = " << quoted(meta.mode) << "\n";
  out << "model = " << quoted(meta.model) << "\n";
  out << "replay_size = " << meta.replay_size << "\n";
  out << "learn_rate = " << format_double(meta.learn_rate) << "\n";
  out << "fixed_point = " << (meta.fixed_point ? "true" : "false") << "\n";
  out << "fp_max_iters = " << meta.fp_max_iters << "\n";
  out << "fp_tolerance = " << format_double(meta.fp_tolerance) << "\n";
  out << "shift = " << (meta.shift ? "true" : "false") << "\n";
  out << "\n[run]\n";
  out << "rounds = " << run.rounds << "\n";
  out << "weight_exponent = " << format_double(run.weight_exponent) << "\n";
  out << "seeds = " << run.seeds << "\n";
  out << "base_seed = " << run.base_seed << "\n";
  return out.str();
}

MetaMode parse_mode(const std::string& s) {
  if (s == "piccolo") return MetaMode::Piccolo;
  if (s == "model_free") return MetaMode::ModelFree;
  if (s == "model_based") return MetaMode::ModelBased;
  if (s == "dyna") return MetaMode::Dyna;
  throw ConfigError("meta.mode: unknown mode '" + s + "'");
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "zero") return ModelKind::Zero;
  if (s == "last") return ModelKind::LastGradient;
  if (s == "replay") return ModelKind::ReplayAverage;
  if (s == "oracle") return ModelKind::OracleTrue;
  if (s == "biased_oracle") return ModelKind::BiasedOracle;
  if (s == "adversarial") return ModelKind::Adversarial;
  if (s == "learned_linear") return ModelKind::LearnedLinear;
  throw ConfigError("meta.model: unknown model '" + s + "'");
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment exp{.problem = nullptr,
                 .algorithm = nullptr,
                 .options = {},
                 .schedule = WeightSchedule(cfg.run.weight_exponent),
                 .model_params = {},
                 .initial_point = Vec(),
                 .run = cfg.run};

  // problem
  const auto& pc = cfg.problem;
  NoiseSpec noise{pc.sigma_g, pc.sigma_ghat, pc.bias};
  FeasibleSet set = FeasibleSet::product_simplex(1, 1);
  if (pc.type == "synthetic_linear" || pc.type == "synthetic_quadratic") {
    if (pc.set == "simplex")
      set = FeasibleSet::product_simplex(1, pc.dim);
    else if (pc.set == "ball")
      set = FeasibleSet::l2_ball(Vec::Zero(pc.dim), pc.ball_radius);
    else if (pc.set == "box")
      set = FeasibleSet::box(Vec::Constant(pc.dim, -pc.box_halfwidth),
                             Vec::Constant(pc.dim, pc.box_halfwidth));
    else
      throw ConfigError("problem.set: unknown set '" + pc.set + "'");
    SyntheticSpec spec;
    spec.family = (pc.type == "synthetic_linear") ? SyntheticFamily::Linear
                                                  : SyntheticFamily::Quadratic;
    spec.dim = pc.dim;
    spec.scale = pc.scale;
    spec.drift = pc.drift;
    spec.period = pc.period;
    spec.quad_curvature = pc.quad_curvature;
    spec.path_seed = pc.path_seed;
    spec.noise = noise;
    exp.problem = std::make_shared<SyntheticOCO>(spec, set);
  } else if (pc.type == "tabular_rl" || pc.type == "tabular_il" || pc.type == "softmax_rl") {
    TabularMDP mdp = [&]() {
      if (pc.mdp == "garnet") {
        Rng rng = derive_rng(pc.mdp_seed, "garnet", 0);
        return TabularMDP::random_garnet(pc.mdp_states, pc.mdp_actions, pc.mdp_branching, rng,
                                         pc.gamma);
      }
      if (pc.mdp == "gridworld5") return TabularMDP::gridworld5(pc.gamma);
      return TabularMDP::load(pc.mdp);
    }();
    TabularSpec spec;
    spec.loss = (pc.type == "tabular_il") ? TabularLoss::ExpertImitation
                                          : TabularLoss::PolicyImprovement;
    if (pc.feedback == "exact")
      spec.feedback = FeedbackKind::Exact;
    else if (pc.feedback == "rollout")
      spec.feedback = FeedbackKind::Rollout;
    else
      throw ConfigError("problem.feedback: unknown kind '" + pc.feedback + "'");
    spec.rollouts = pc.rollouts;
    spec.bias_beta = pc.bias_beta;
    spec.noise = noise;
    if (pc.type == "softmax_rl")
      exp.problem = std::make_shared<SoftmaxPolicyOpt>(std::move(mdp), spec);
    else
      exp.problem = std::make_shared<TabularPolicyOpt>(std::move(mdp), spec);
  } else {
    throw ConfigError("problem.type: unknown type '" + pc.type + "'");
  }

  // geometry + algorithm
  const auto& at = cfg.algorithm;
  BregmanGeometry geom = BregmanGeometry::squared_euclidean(1.0);
  if (at.geometry == "euclidean")
    geom = BregmanGeometry::squared_euclidean(at.geometry_scale);
  else if (at.geometry == "entropy")
    geom = BregmanGeometry::negative_entropy(at.geometry_scale);
  else
    throw ConfigError("algorithm.geometry: unknown geometry '" + at.geometry + "'");

  AlgorithmConfig ac;
  if (at.name == "basic_md")
    ac.kind = AlgKind::BasicMD;
  else if (at.name == "adagrad")
    ac.kind = AlgKind::AdaGrad;
  else if (at.name == "adam")
    ac.kind = AlgKind::Adam;
  else if (at.name == "adanatgrad")
    ac.kind = AlgKind::AdaNatGrad;
  else if (at.name == "ftrl")
    ac.kind = AlgKind::Ftrl;
  else
    throw ConfigError("algorithm.name: unknown algorithm '" + at.name + "'");
  ac.eta = at.eta;
  ac.c = at.c;
  ac.grad_bound = at.grad_bound;
  ac.beta1 = at.beta1;
  ac.beta2 = at.beta2;
  ac.epsilon = at.epsilon;
  ac.fisher_floor = at.fisher_floor;
  if (at.adam_m_in_prediction == "shared")
    ac.adam_shared_m = true;
  else if (at.adam_m_in_prediction == "transient")
    ac.adam_shared_m = false;
  else
    throw ConfigError("algorithm.adam_m_in_prediction: expected shared or transient");
  if (ac.kind == AlgKind::AdaGrad || ac.kind == AlgKind::Adam)
    geom = BregmanGeometry::squared_euclidean(1.0);
  if (ac.kind == AlgKind::AdaNatGrad) {
    auto softmax = std::dynamic_pointer_cast<SoftmaxPolicyOpt>(exp.problem);
    if (!softmax)
      throw ConfigError("algorithm.name: adanatgrad requires problem.type = softmax_rl");
    ac.fisher_fn = [softmax](const Vec& theta) { return softmax->fisher(theta); };
  }
  exp.algorithm = std::make_shared<BaseAlgorithm>(ac, exp.problem->set(), geom);

  // meta options
  exp.options.mode = parse_mode(cfg.meta.mode);
  exp.options.shift_enabled = cfg.meta.shift || ac.kind == AlgKind::AdaNatGrad;
  exp.options.fixed_point = cfg.meta.fixed_point;
  exp.options.fp.max_iters = cfg.meta.fp_max_iters;
  exp.options.fp.tolerance = cfg.meta.fp_tolerance;
  exp.options.rounds = cfg.run.rounds;
  if (exp.options.fp.max_iters < 1) throw ConfigError("meta.fp_max_iters: must be >= 1");

  exp.model_params.kind = (exp.options.mode == MetaMode::ModelFree)
                              ? ModelKind::Zero
                              : parse_model_kind(cfg.meta.model);
  exp.model_params.replay_size = cfg.meta.replay_size;
  exp.model_params.learn_rate = cfg.meta.learn_rate;
  exp.model_params.sigma_ghat = pc.sigma_ghat;
  if (exp.options.fixed_point && exp.model_params.kind != ModelKind::OracleTrue &&
      exp.model_params.kind != ModelKind::BiasedOracle)
    throw ConfigError("meta.fixed_point: requires an oracle-backed model");

  exp.initial_point = exp.problem->set().interior_point();
  return exp;
}

}  // namespace piccolo
