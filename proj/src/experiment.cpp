#include "piccolo/experiment.hpp"

#include "piccolo/svg.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace piccolo {

namespace fs = std::filesystem;

namespace {

std::string csv_field(double x) {
  if (!std::isfinite(x)) return "";
  return format_double(x);
}

bool audit_applicable(const Experiment& exp) {
  if (exp.options.mode != MetaMode::Piccolo && exp.options.mode != MetaMode::ModelFree)
    return false;
  switch (exp.algorithm->kind()) {
    case AlgKind::BasicMD:
    case AlgKind::AdaGrad:
    case AlgKind::Ftrl:
      return true;
    case AlgKind::Adam:
      return exp.algorithm->config().beta1 == 0.0;
    case AlgKind::AdaNatGrad:
      return false;
  }
  return false;
}

SeedOutcome run_one_seed(const Experiment& exp, const ExperimentConfig& cfg, int seed_index) {
  SeedOutcome out;
  out.seed_index = seed_index;
  auto model = make_model(exp.model_params, cfg.run.base_seed, seed_index);
  out.run = run(*exp.problem, *exp.algorithm, *model, exp.schedule, exp.options,
                exp.initial_point, cfg.run.base_seed, seed_index);
  try {
    const long n = static_cast<long>(out.run.trace.size());
    std::vector<std::pair<long, long>> windows;
    if (n >= 2) windows = {{1, n / 2}, {n / 2 + 1, n}};
    out.report = regret_report(exp.problem->set(), out.run.trace, windows);
    out.report_supported = true;
  } catch (const UnsupportedError&) {
    out.report_supported = false;
  }
  if (out.report_supported && !out.run.aborted && audit_applicable(exp)) {
    out.audit = audit_regret_bound(*exp.algorithm, out.run, out.report.comparator);
    out.m_hat_prefix = m_hat_prefix_series(*exp.algorithm, out.run);
    out.audit_supported = true;
  }
  return out;
}

int thread_cap() {
  if (const char* env = std::getenv("PICCOLO_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

}  // namespace

std::vector<SeedOutcome> execute(const ExperimentConfig& cfg) {
  Experiment exp = build_experiment(cfg);
  const int seeds = cfg.run.seeds;
  std::vector<SeedOutcome> outcomes(seeds);
  const int workers = std::min(seeds, thread_cap());
  if (workers <= 1) {
    for (int s = 0; s < seeds; ++s) outcomes[s] = run_one_seed(exp, cfg, s);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      while (true) {
        int s = next.fetch_add(1);
        if (s >= seeds) return;
        outcomes[s] = run_one_seed(exp, cfg, s);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return outcomes;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

void write_snapshot(std::ostream& out, const MetricSnapshot& m) {
  switch (m.kind) {
    case MetricSnapshot::Kind::Scaled:
      out << "scaled " << format_double(m.scale);
      break;
    case MetricSnapshot::Kind::Diagonal:
      out << "diag";
      for (Eigen::Index i = 0; i < m.diag.size(); ++i) out << ' ' << format_double(m.diag[i]);
      break;
    case MetricSnapshot::Kind::Full:
      out << "full";
      for (Eigen::Index i = 0; i < m.full.size(); ++i)
        out << ' ' << format_double(m.full.data()[i]);
      break;
  }
  out << '\n';
}

MetricSnapshot read_snapshot(std::istringstream& ss, Eigen::Index dim) {
  MetricSnapshot m;
  std::string kind;
  ss >> kind;
  if (kind == "scaled") {
    m.kind = MetricSnapshot::Kind::Scaled;
    ss >> m.scale;
  } else if (kind == "diag") {
    m.kind = MetricSnapshot::Kind::Diagonal;
    m.diag.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) ss >> m.diag[i];
  } else if (kind == "full") {
    m.kind = MetricSnapshot::Kind::Full;
    m.full.resize(dim, dim);
    for (Eigen::Index i = 0; i < dim * dim; ++i) ss >> m.full.data()[i];
  } else {
    throw ConfigError("states: bad metric snapshot kind '" + kind + "'");
  }
  if (!ss) throw ConfigError("states: truncated metric snapshot");
  return m;
}

void write_vec(std::ostream& out, const char* tag, const Vec& v) {
  out << tag;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
  out << '\n';
}

}  // namespace

void write_states_file(const std::string& path, const ExperimentConfig& cfg,
                       const SeedOutcome& outcome) {
  std::ofstream out(path);
  if (!out) throw ConfigError("states: cannot write " + path);
  const auto& run = outcome.run;
  out << "piccolo-states 1\n";
  out << "seed " << outcome.seed_index << '\n';
  out << "dim " << run.initial_decision.size() << '\n';
  out << "rounds " << run.trace.size() << '\n';
  out << "kappa0 " << format_double(run.ftrl_kappa0) << '\n';
  write_vec(out, "comparator",
            outcome.report_supported ? outcome.report.comparator
                                     : Vec(Vec::Zero(run.initial_decision.size())));
  write_vec(out, "initial_decision", run.initial_decision);
  out << "metric0 ";
  write_snapshot(out, run.metric_initial);
  for (const auto& rec : run.trace) {
    out << "round " << rec.n << ' ' << format_double(rec.w) << '\n';
    write_vec(out, "pi_hat", rec.pi_hat);
    write_vec(out, "pi", rec.pi);
    write_vec(out, "ghat", rec.ghat);
    write_vec(out, "g", rec.g);
    out << "metric_before ";
    write_snapshot(out, rec.metric_before);
    out << "metric_after ";
    write_snapshot(out, rec.metric_after);
    out << "kappa " << format_double(rec.ftrl_kappa) << '\n';
  }
  (void)cfg;
}

LoadedStates read_states_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("states: cannot open " + path);
  LoadedStates ls;
  std::string line;
  Eigen::Index dim = 0;
  long rounds = 0;
  auto next_line = [&](const std::string& expect) {
    if (!std::getline(in, line)) throw ConfigError("states: truncated file at " + expect);
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != expect) throw ConfigError("states: expected '" + expect + "', got '" + tag + "'");
    return ss;
  };
  auto read_vec_line = [&](const std::string& tag) {
    std::istringstream ss = next_line(tag);
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) ss >> v[i];
    if (!ss) throw ConfigError("states: truncated vector " + tag);
    return v;
  };

  if (!std::getline(in, line) || line.rfind("piccolo-states", 0) != 0)
    throw ConfigError("states: bad magic line");
  {
    std::istringstream ss = next_line("seed");
    ss >> ls.seed_index;
  }
  {
    std::istringstream ss = next_line("dim");
    ss >> dim;
  }
  {
    std::istringstream ss = next_line("rounds");
    ss >> rounds;
  }
  {
    std::istringstream ss = next_line("kappa0");
    ss >> ls.run.ftrl_kappa0;
  }
  ls.comparator = read_vec_line("comparator");
  ls.run.initial_decision = read_vec_line("initial_decision");
  {
    std::istringstream ss = next_line("metric0");
    ls.run.metric_initial = read_snapshot(ss, dim);
  }
  for (long k = 0; k < rounds; ++k) {
    RoundRecord rec;
    {
      std::istringstream ss = next_line("round");
      ss >> rec.n >> rec.w;
    }
    rec.pi_hat = read_vec_line("pi_hat");
    rec.pi = read_vec_line("pi");
    rec.ghat = read_vec_line("ghat");
    rec.g = read_vec_line("g");
    rec.e = rec.g - rec.ghat;
    {
      std::istringstream ss = next_line("metric_before");
      rec.metric_before = read_snapshot(ss, dim);
    }
    {
      std::istringstream ss = next_line("metric_after");
      rec.metric_after = read_snapshot(ss, dim);
    }
    {
      std::istringstream ss = next_line("kappa");
      ss >> rec.ftrl_kappa;
    }
    ls.run.trace.push_back(std::move(rec));
  }
  return ls;
}

// ---------------------------------------------------------------------------
// CSV output

namespace {

const char* kTraceHeader =
    "n,w_n,loss,J,regret_static,regret_avg,g_norm,ghat_norm,e_norm_dual,bound_lhs,bound_rhs,"
    "bound_slack,fp_residual,seed";

void write_trace_rows(std::ostream& out, const Experiment& exp, const SeedOutcome& oc) {
  double regret_prefix = 0, weight_prefix = 0, lhs_prefix = 0, err_prefix = 0, gap_prefix = 0;
  const auto& alg = *exp.algorithm;
  for (size_t i = 0; i < oc.run.trace.size(); ++i) {
    const auto& rec = oc.run.trace[i];
    double regret_static = std::numeric_limits<double>::quiet_NaN();
    double regret_avg = regret_static;
    weight_prefix += rec.w;
    if (oc.report_supported) {
      regret_prefix += rec.w * (rec.loss - rec.exact_loss.value(oc.report.comparator));
      regret_static = regret_prefix;
      regret_avg = regret_prefix / weight_prefix;
    }
    double lhs = std::numeric_limits<double>::quiet_NaN(), rhs = lhs, slack = lhs;
    if (oc.audit_supported) {
      lhs_prefix += rec.w * rec.g.dot(rec.pi - oc.report.comparator);
      double dual = alg.dual_norm(rec.metric_after, rec.e);
      double gap = alg.primal_norm(rec.metric_before, rec.pi - rec.pi_hat);
      err_prefix += 0.5 * rec.w * rec.w * dual * dual;
      gap_prefix += 0.5 * gap * gap;
      lhs = lhs_prefix;
      rhs = oc.m_hat_prefix[i] + err_prefix - gap_prefix;
      slack = rhs - lhs;
    }
    out << rec.n << ',' << format_double(rec.w) << ',' << csv_field(rec.loss) << ','
        << csv_field(rec.performance) << ',' << csv_field(regret_static) << ','
        << csv_field(regret_avg) << ',' << csv_field(rec.g.norm()) << ','
        << csv_field(rec.ghat.norm()) << ',' << csv_field(rec.e_dual) << ',' << csv_field(lhs)
        << ',' << csv_field(rhs) << ',' << csv_field(slack) << ',' << csv_field(rec.fp_residual)
        << ',' << oc.seed_index << '\n';
  }
}

double pi_bar_performance(const SeedOutcome& oc) {
  if (oc.run.trace.empty()) return std::numeric_limits<double>::quiet_NaN();
  long k = (oc.run.sampled_k <= 1) ? 1 : oc.run.sampled_k - 1;
  k = std::min<long>(k, static_cast<long>(oc.run.trace.size()));
  return oc.run.trace[k - 1].performance;
}

double min_bound_slack(const Experiment& exp, const SeedOutcome& oc) {
  if (!oc.audit_supported) return std::numeric_limits<double>::quiet_NaN();
  const auto& alg = *exp.algorithm;
  double lhs_prefix = 0, err_prefix = 0, gap_prefix = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < oc.run.trace.size(); ++i) {
    const auto& rec = oc.run.trace[i];
    lhs_prefix += rec.w * rec.g.dot(rec.pi - oc.report.comparator);
    double dual = alg.dual_norm(rec.metric_after, rec.e);
    double gap = alg.primal_norm(rec.metric_before, rec.pi - rec.pi_hat);
    err_prefix += 0.5 * rec.w * rec.w * dual * dual;
    gap_prefix += 0.5 * gap * gap;
    worst = std::min(worst, oc.m_hat_prefix[i] + err_prefix - gap_prefix - lhs_prefix);
  }
  return worst;
}

void write_outputs(const fs::path& dir, const ExperimentConfig& cfg, const Experiment& exp,
                   const std::vector<SeedOutcome>& outcomes) {
  fs::create_directories(dir);
  {
    std::ofstream trace(dir / "trace.csv");
    trace << kTraceHeader << '\n';
    for (const auto& oc : outcomes) write_trace_rows(trace, exp, oc);
  }
  {
    std::ofstream report(dir / "report.csv");
    report << "seed,final_avg_regret,audit_slack_min,pi_bar_performance,aborted\n";
    for (const auto& oc : outcomes) {
      double final_avg =
          oc.report_supported ? oc.report.average_regret : std::numeric_limits<double>::quiet_NaN();
      double perf = pi_bar_performance(oc);
      report << oc.seed_index << ',' << csv_field(final_avg) << ','
             << csv_field(min_bound_slack(exp, oc)) << ',' << csv_field(perf) << ','
             << (oc.run.aborted ? 1 : 0) << '\n';
    }
  }
  {
    std::ofstream meta(dir / "meta.txt");
    meta << "# piccolo " << kVersion << "\n";
    meta << cfg.canonical_text();
  }
  for (const auto& oc : outcomes) {
    write_states_file((dir / ("states_" + std::to_string(oc.seed_index) + ".txt")).string(), cfg,
                      oc);
  }
}

}  // namespace

int run_experiment(const std::string& config_path, const std::string& out_dir) {
  try {
    ExperimentConfig cfg = resolve_config(load_config_file(config_path));
    Experiment exp = build_experiment(cfg);
    auto outcomes = execute(cfg);
    write_outputs(out_dir, cfg, exp, outcomes);
    for (const auto& oc : outcomes)
      if (oc.run.aborted) {
        std::cerr << "numeric abort in seed " << oc.seed_index << " at round "
                  << oc.run.aborted_round << "\n";
        return 3;
      }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
}

int run_sweep(const std::string& config_path, const std::string& out_dir) {
  try {
    ConfigTable table = load_config_file(config_path);
    auto combos = expand_sweep(table);
    fs::create_directories(out_dir);
    std::ofstream sweep(fs::path(out_dir) / "sweep.csv");
    sweep << "label,mode,model,rounds,weight_exponent,eta,seed,final_avg_regret,audit_slack_min,"
             "pi_bar_performance,aborted\n";
    // group results for slope fits: key = label with the rounds axis removed
    std::map<std::string, std::map<long, std::vector<double>>> groups;
    std::map<std::string, std::pair<std::string, std::string>> group_info;  // mode, model
    int status = 0;
    for (const auto& [label, cfg] : combos) {
      Experiment exp = build_experiment(cfg);
      auto outcomes = execute(cfg);
      write_outputs(fs::path(out_dir) / label, cfg, exp, outcomes);
      std::vector<double> finals;
      for (const auto& oc : outcomes) {
        double final_avg = oc.report_supported ? oc.report.average_regret
                                               : std::numeric_limits<double>::quiet_NaN();
        double perf = pi_bar_performance(oc);
        sweep << label << ',' << cfg.meta.mode << ',' << cfg.meta.model << ',' << cfg.run.rounds
              << ',' << format_double(cfg.run.weight_exponent) << ','
              << format_double(cfg.algorithm.eta) << ',' << oc.seed_index << ','
              << csv_field(final_avg) << ',' << csv_field(min_bound_slack(exp, oc)) << ','
              << csv_field(perf) << ',' << (oc.run.aborted ? 1 : 0) << '\n';
        if (oc.run.aborted) status = 3;
        if (oc.report_supported) finals.push_back(final_avg);
      }
      if (!finals.empty()) {
        std::sort(finals.begin(), finals.end());
        double median = finals[finals.size() / 2];
        std::string group;
        std::istringstream parts(label);
        std::string piece;
        while (std::getline(parts, piece, '_'))
          if (piece.rfind("rounds=", 0) != 0) group += (group.empty() ? "" : "_") + piece;
        if (group.empty()) group = "all";
        groups[group][cfg.run.rounds].push_back(median);
        group_info[group] = {cfg.meta.mode, cfg.meta.model};
      }
    }
    std::ofstream slopes(fs::path(out_dir) / "slopes.csv");
    slopes << "group,mode,model,slope\n";
    for (const auto& [group, by_rounds] : groups) {
      if (by_rounds.size() < 3) continue;
      std::vector<std::pair<double, double>> pts;
      for (const auto& [rounds, vals] : by_rounds)
        pts.push_back({static_cast<double>(rounds), vals.front()});
      slopes << group << ',' << group_info.at(group).first << ',' << group_info.at(group).second
             << ',' << format_double(fit_rate(pts)) << '\n';
    }
    return status;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
}

int run_audit(const std::string& trace_csv, const std::string& states_dir) {
  try {
    fs::path dir(states_dir);
    ExperimentConfig cfg = resolve_config(load_config_file((dir / "meta.txt").string()));
    Experiment exp = build_experiment(cfg);
    CsvData trace = read_csv(trace_csv);
    long slack_col = trace.column("bound_slack");
    long seed_col = trace.column("seed");
    long n_col = trace.column("n");
    if (slack_col < 0 || seed_col < 0 || n_col < 0)
      throw ConfigError("audit: trace csv missing bound_slack/seed/n columns");

    bool ok = true;
    for (int s = 0; s < cfg.run.seeds; ++s) {
      fs::path sf = dir / ("states_" + std::to_string(s) + ".txt");
      if (!fs::exists(sf)) throw ConfigError("audit: missing " + sf.string());
      LoadedStates ls = read_states_file(sf.string());
      BoundAudit audit = audit_regret_bound(*exp.algorithm, ls.run, ls.comparator);
      double tol = 1e-9 * (1.0 + std::abs(audit.lhs));
      bool pass = audit.slack >= -tol;
      // cross-check the final recomputed slack against the trace column
      double traced = std::numeric_limits<double>::quiet_NaN();
      for (const auto& row : trace.rows) {
        if (std::stol(row[seed_col]) == s && std::stol(row[n_col]) == audit.rounds &&
            !row[slack_col].empty())
          traced = std::stod(row[slack_col]);
      }
      bool match = std::isfinite(traced) &&
                   std::abs(traced - audit.slack) <= 1e-6 * (1.0 + std::abs(audit.slack));
      std::cout << "seed " << s << ": lhs=" << format_double(audit.lhs)
                << " slack=" << format_double(audit.slack) << (pass ? " OK" : " VIOLATION")
                << (match ? "" : " TRACE-MISMATCH") << "\n";
      ok = ok && pass && match;
    }
    return ok ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedError& e) {
    std::cerr << "audit unsupported: " << e.what() << "\n";
    return 2;
  }
}

int run_render(const std::string& csv_path, const std::string& column,
               const std::string& svg_path) {
  try {
    render_svg(read_csv(csv_path), column, svg_path);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "render error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace piccolo
