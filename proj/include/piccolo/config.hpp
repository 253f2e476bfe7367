#pragma once

#include "piccolo/base_alg.hpp"
#include "piccolo/meta.hpp"
#include "piccolo/problems.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace piccolo {

// Raw parse tree of the config text: [section] headers over key = value lines.
// Values are scalars or flat arrays (arrays mark sweep axes).
struct ConfigValue {
  std::vector<std::string> items;  // scalars hold exactly one item
  bool is_array = false;
};

using ConfigTable = std::map<std::string, std::map<std::string, ConfigValue>>;

ConfigTable parse_config_text(const std::string& text);
ConfigTable load_config_file(const std::string& path);

struct ProblemConfig {
  std::string type = "synthetic_linear";
  int dim = 10;
  std::string set = "simplex";
  double ball_radius = 1.0;
  double box_halfwidth = 1.0;
  double scale = 1.0;
  double drift = 0.5;
  double period = 200.0;
  double quad_curvature = 1.0;
  std::uint64_t path_seed = 7;
  double sigma_g = 0.0;
  double sigma_ghat = 0.0;
  double bias = 0.0;
  std::string mdp = "garnet";  // garnet | gridworld5 | a file path
  std::uint64_t mdp_seed = 1;
  int mdp_states = 10;
  int mdp_actions = 4;
  int mdp_branching = 3;
  double gamma = 0.9;
  std::string feedback = "exact";
  int rollouts = 64;
  double bias_beta = 0.8;
};

struct AlgorithmText {
  std::string name = "adagrad";
  double eta = 0.1;
  double c = 1.0;
  double grad_bound = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double fisher_floor = 1e-6;
  std::string geometry = "euclidean";
  double geometry_scale = 1.0;
  std::string adam_m_in_prediction = "transient";
};

struct MetaConfig {
  std::string mode = "piccolo";
  std::string model = "zero";
  int replay_size = 4;
  double learn_rate = 0.5;
  bool fixed_point = false;
  int fp_max_iters = 20;
  double fp_tolerance = 1e-8;
  bool shift = false;
};

struct RunConfig {
  long rounds = 200;
  double weight_exponent = 0.0;
  int seeds = 1;
  std::uint64_t base_seed = 42;
};

struct ExperimentConfig {
  ProblemConfig problem;
  AlgorithmText algorithm;
  MetaConfig meta;
  RunConfig run;

  std::string canonical_text() const;  // round-trips through the parser
};

// Resolves a parse tree with no array values into a typed config; unknown keys
// raise ConfigError with a section.key path.
ExperimentConfig resolve_config(const ConfigTable& table);

// Cartesian expansion of array-valued fields (the sweep axes), together with
// a short label per combination.
std::vector<std::pair<std::string, ExperimentConfig>> expand_sweep(const ConfigTable& table);

// Instantiation of the configured objects.
struct Experiment {
  std::shared_ptr<Problem> problem;
  std::shared_ptr<BaseAlgorithm> algorithm;
  RunOptions options;
  WeightSchedule schedule;
  ModelParams model_params;
  Vec initial_point;
  RunConfig run;
};

Experiment build_experiment(const ExperimentConfig& cfg);

MetaMode parse_mode(const std::string& s);
ModelKind parse_model_kind(const std::string& s);

}  // namespace piccolo
