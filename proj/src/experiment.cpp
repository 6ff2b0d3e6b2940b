#include "rfq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "rfq/io.hpp"

namespace rfq {

namespace {

constexpr const char* kCodeVersion = "0.1.0";

enum SeedTag : std::uint64_t {
  kSpecSeed = 1,
  kBehaviorSeed = 2,
  kEvalPolicySeed = 3,
  kOracleBatchSeed = 4,
  kEvalStatesSeed = 5,
  kBatchSeed = 6,
  kFqiSeed = 7,
  kOracleFqiSeed = 8,
};

std::uint64_t rep_seed(std::uint64_t master, int replication, SeedTag tag) {
  return seed_chain(seed_chain(master, static_cast<std::uint64_t>(replication)),
                    static_cast<std::uint64_t>(tag));
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw InvalidConfig("bad numeric value for '" + key + "': " + v);
  return x;
}

long long to_int(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw InvalidConfig("bad integer value for '" + key + "': " + v);
  return x;
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw InvalidConfig("bad seed value for '" + key + "': " + v);
  return x;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidConfig("bad boolean value for '" + key + "': " + v);
}

void apply_key(ExperimentConfig& cfg, const std::string& key,
               const std::string& value) {
  if (key == "d") cfg.d = static_cast<int>(to_int(value, key));
  else if (key == "support_size") cfg.support_size = static_cast<int>(to_int(value, key));
  else if (key == "num_actions") cfg.num_actions = static_cast<int>(to_int(value, key));
  else if (key == "horizon") cfg.horizon = static_cast<int>(to_int(value, key));
  else if (key == "discount") cfg.discount = to_double(value, key);
  else if (key == "sigma_s") cfg.sigma_s = to_double(value, key);
  else if (key == "sigma_r") cfg.sigma_r = to_double(value, key);
  else if (key == "beta_min_floor") cfg.beta_min_floor = to_double(value, key);
  else if (key == "spectral_cap") cfg.spectral_cap = to_double(value, key);
  else if (key == "initial_sd") cfg.initial_sd = to_double(value, key);
  else if (key == "sample_sizes") {
    cfg.sample_sizes.clear();
    for (const auto& item : split(value, ','))
      cfg.sample_sizes.push_back(static_cast<int>(to_int(item, key)));
  } else if (key == "replications") cfg.replications = static_cast<int>(to_int(value, key));
  else if (key == "n_oracle") cfg.n_oracle = static_cast<int>(to_int(value, key));
  else if (key == "methods") {
    cfg.methods.clear();
    for (const auto& item : split(value, ','))
      cfg.methods.push_back(method_from_name(item));
  } else if (key == "mode") {
    if (value == "fqe") cfg.mode = FqiConfig::Mode::Evaluation;
    else if (value == "fqi") cfg.mode = FqiConfig::Mode::Iteration;
    else throw InvalidConfig("mode must be fqe or fqi");
  } else if (key == "penalty_rule") {
    if (value == "data_driven") cfg.penalty_rule = FqiConfig::PenaltyRule::DataDriven;
    else if (value == "fixed") cfg.penalty_rule = FqiConfig::PenaltyRule::Fixed;
    else throw InvalidConfig("penalty_rule must be data_driven or fixed");
  } else if (key == "penalty") cfg.penalty = to_double(value, key);
  else if (key == "alpha") cfg.alpha = to_double(value, key);
  else if (key == "c") cfg.c = to_double(value, key);
  else if (key == "num_sim") cfg.num_sim = static_cast<int>(to_int(value, key));
  else if (key == "penalty_refine_passes")
    cfg.penalty_refine_passes = static_cast<int>(to_int(value, key));
  else if (key == "threshold_rule") {
    if (value == "scaled_to_penalty") cfg.threshold_rule = FqiConfig::ThresholdRule::ScaledToPenalty;
    else if (value == "fixed") cfg.threshold_rule = FqiConfig::ThresholdRule::Fixed;
    else throw InvalidConfig("threshold_rule must be scaled_to_penalty or fixed");
  } else if (key == "threshold") cfg.threshold = to_double(value, key);
  else if (key == "threshold_scale") cfg.threshold_scale = to_double(value, key);
  else if (key == "support_pooling") {
    if (value == "union_over_actions") cfg.support_pooling = FqiConfig::SupportPooling::UnionOverActions;
    else if (value == "per_action") cfg.support_pooling = FqiConfig::SupportPooling::PerAction;
    else throw InvalidConfig("support_pooling must be union_over_actions or per_action");
  } else if (key == "lasso_tol") cfg.lasso_tol = to_double(value, key);
  else if (key == "lasso_max_iters") cfg.lasso_max_iters = static_cast<int>(to_int(value, key));
  else if (key == "eval_states") cfg.eval_states = static_cast<int>(to_int(value, key));
  else if (key == "redraw_policies_per_replication")
    cfg.redraw_policies_per_replication = to_bool(value, key);
  else if (key == "master_seed") cfg.master_seed = to_u64(value, key);
  else if (key == "output_dir") cfg.output_dir = value;
  else if (key == "rng") cfg.rng_algorithm = value;
  else throw InvalidConfig("unknown config key '" + key + "'");
}

FqiConfig make_fqi_config(const ExperimentConfig& cfg, const Policy& target,
                          std::uint64_t seed) {
  FqiConfig fqi;
  fqi.mode = cfg.mode;
  fqi.target_policy = target;
  fqi.penalty_rule = cfg.penalty_rule;
  fqi.fixed_penalty = cfg.penalty;
  fqi.alpha = cfg.alpha;
  fqi.penalty_c = cfg.c;
  fqi.num_sim = cfg.num_sim;
  fqi.penalty_refine_passes = cfg.penalty_refine_passes;
  fqi.threshold_rule = cfg.threshold_rule;
  fqi.fixed_threshold = cfg.threshold;
  fqi.threshold_scale = cfg.threshold_scale;
  fqi.discount = cfg.discount;
  fqi.lasso_tol = cfg.lasso_tol;
  fqi.lasso_max_iters = cfg.lasso_max_iters;
  fqi.support_pooling = cfg.support_pooling;
  fqi.expected_support_size = cfg.support_size;
  fqi.seed = seed;
  return fqi;
}

int worker_count(int replications) {
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RFQI_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) threads = static_cast<int>(v);
  }
  return std::clamp(threads, 1, std::max(1, replications));
}

struct RepOutcome {
  std::vector<MetricsRecord> records;
  std::vector<CellError> errors;
};

RepOutcome run_replication(const ExperimentConfig& cfg, int r) {
  RepOutcome out;
  MdpParams params;
  params.d = cfg.d;
  params.support_size = cfg.support_size;
  params.num_actions = cfg.num_actions;
  params.horizon = cfg.horizon;
  params.discount = cfg.discount;
  params.state_noise_sd = cfg.sigma_s;
  params.reward_noise_sd = cfg.sigma_r;
  params.beta_min_floor = cfg.beta_min_floor;
  params.spectral_cap = cfg.spectral_cap;

  const MdpSpec spec =
      generate_mdp(params, rep_seed(cfg.master_seed, r, kSpecSeed));

  const int policy_rep = cfg.redraw_policies_per_replication ? r : 0;
  Rng behavior_rng(rep_seed(cfg.master_seed, policy_rep, kBehaviorSeed));
  const Policy behavior =
      LogisticPolicy{behavior_rng.uniform_vector(cfg.d, -0.5, 0.5)};
  Rng eval_rng(rep_seed(cfg.master_seed, policy_rep, kEvalPolicySeed));
  const Policy eval_policy =
      LogisticPolicy{eval_rng.uniform_vector(cfg.d, -0.5, 0.5)};

  const FqiConfig oracle_cfg = make_fqi_config(
      cfg, eval_policy, rep_seed(cfg.master_seed, r, kOracleFqiSeed));
  const LinearQ oracle =
      run_oracle_q(spec, eval_policy, cfg.n_oracle,
                   rep_seed(cfg.master_seed, r, kOracleBatchSeed), oracle_cfg,
                   cfg.initial_sd);

  Rng eval_states_rng(rep_seed(cfg.master_seed, r, kEvalStatesSeed));
  const Eigen::MatrixXd eval_states =
      cfg.initial_sd * eval_states_rng.normal_matrix(cfg.eval_states, cfg.d);

  for (std::size_t ni = 0; ni < cfg.sample_sizes.size(); ++ni) {
    const int n = cfg.sample_sizes[ni];
    const TrajectoryBatch batch = simulate(
        spec, behavior, n, cfg.initial_sd,
        seed_chain(rep_seed(cfg.master_seed, r, kBatchSeed), ni));
    const std::uint64_t fqi_seed =
        seed_chain(rep_seed(cfg.master_seed, r, kFqiSeed), ni);

    for (const auto method : cfg.methods) {
      const FqiConfig fqi = make_fqi_config(cfg, eval_policy, fqi_seed);
      const auto start = std::chrono::steady_clock::now();
      try {
        const FqiResult result =
            method == MetricsRecord::Method::RewardFiltered
                ? run_reward_filtered(batch, fqi)
                : run_naive_thresholded(batch, fqi);
        const double wall_ms =
            std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - start)
                .count();
        MetricsRecord rec;
        rec.method = method;
        rec.n = n;
        rec.replication = r;
        rec.q_mse = q_mse(result.qfun, oracle, eval_states, 0);
        const SupportMetrics sm =
            support_metrics(result.qfun.support_state[0], spec.support, cfg.d);
        rec.tpr = sm.tpr;
        rec.fpr = sm.fpr;
        rec.fp_count = sm.fp_count;
        rec.wall_time_ms = wall_ms;
        out.records.push_back(rec);
      } catch (const Error& e) {
        out.errors.push_back({method, n, r, e.code()});
      }
    }
  }
  return out;
}

void canonical_sort(std::vector<MetricsRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const MetricsRecord& a, const MetricsRecord& b) {
              const auto ka = std::make_tuple(method_name(a.method), a.n,
                                              a.replication);
              const auto kb = std::make_tuple(method_name(b.method), b.n,
                                              b.replication);
              return ka < kb;
            });
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  long lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig("config line " + std::to_string(lineno) +
                          " is not 'key = value'");
    apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "d = " << c.d << "\n";
  out << "support_size = " << c.support_size << "\n";
  out << "num_actions = " << c.num_actions << "\n";
  out << "horizon = " << c.horizon << "\n";
  out << "discount = " << format_double(c.discount) << "\n";
  out << "sigma_s = " << format_double(c.sigma_s) << "\n";
  out << "sigma_r = " << format_double(c.sigma_r) << "\n";
  out << "beta_min_floor = " << format_double(c.beta_min_floor) << "\n";
  out << "spectral_cap = " << format_double(c.spectral_cap) << "\n";
  out << "initial_sd = " << format_double(c.initial_sd) << "\n";
  out << "sample_sizes = ";
  for (std::size_t i = 0; i < c.sample_sizes.size(); ++i)
    out << (i ? "," : "") << c.sample_sizes[i];
  out << "\n";
  out << "replications = " << c.replications << "\n";
  out << "n_oracle = " << c.n_oracle << "\n";
  out << "methods = ";
  for (std::size_t i = 0; i < c.methods.size(); ++i)
    out << (i ? "," : "") << method_name(c.methods[i]);
  out << "\n";
  out << "mode = "
      << (c.mode == FqiConfig::Mode::Evaluation ? "fqe" : "fqi") << "\n";
  out << "penalty_rule = "
      << (c.penalty_rule == FqiConfig::PenaltyRule::DataDriven ? "data_driven"
                                                               : "fixed")
      << "\n";
  out << "penalty = " << format_double(c.penalty) << "\n";
  out << "alpha = " << format_double(c.alpha) << "\n";
  out << "c = " << format_double(c.c) << "\n";
  out << "num_sim = " << c.num_sim << "\n";
  out << "penalty_refine_passes = " << c.penalty_refine_passes << "\n";
  out << "threshold_rule = "
      << (c.threshold_rule == FqiConfig::ThresholdRule::ScaledToPenalty
              ? "scaled_to_penalty"
              : "fixed")
      << "\n";
  out << "threshold = " << format_double(c.threshold) << "\n";
  out << "threshold_scale = " << format_double(c.threshold_scale) << "\n";
  out << "support_pooling = "
      << (c.support_pooling == FqiConfig::SupportPooling::UnionOverActions
              ? "union_over_actions"
              : "per_action")
      << "\n";
  out << "lasso_tol = " << format_double(c.lasso_tol) << "\n";
  out << "lasso_max_iters = " << c.lasso_max_iters << "\n";
  out << "eval_states = " << c.eval_states << "\n";
  out << "redraw_policies_per_replication = "
      << (c.redraw_policies_per_replication ? "true" : "false") << "\n";
  out << "master_seed = " << c.master_seed << "\n";
  out << "output_dir = " << c.output_dir << "\n";
  out << "rng = " << c.rng_algorithm << "\n";
  return out.str();
}

void validate_config(const ExperimentConfig& c) {
  if (c.replications < 1) throw InvalidConfig("replications must be >= 1");
  if (c.sample_sizes.empty()) throw InvalidConfig("sample_sizes is empty");
  for (std::size_t i = 0; i + 1 < c.sample_sizes.size(); ++i)
    if (c.sample_sizes[i] >= c.sample_sizes[i + 1])
      throw InvalidConfig("sample_sizes must be strictly increasing");
  if (c.sample_sizes.front() < 1) throw InvalidConfig("sample sizes must be >= 1");
  if (c.n_oracle < 20 * c.d)
    throw InvalidConfig("n_oracle must be >= 20 * d");
  if (c.methods.empty()) throw InvalidConfig("methods is empty");
  for (std::size_t i = 0; i < c.methods.size(); ++i)
    for (std::size_t j = i + 1; j < c.methods.size(); ++j)
      if (c.methods[i] == c.methods[j])
        throw InvalidConfig("methods contains duplicates");
  if (c.eval_states < 1) throw InvalidConfig("eval_states must be >= 1");
  if (c.rng_algorithm != "xoshiro256starstar")
    throw InvalidConfig("rng must be xoshiro256starstar");
}

std::vector<SummaryRow> summarize_records(
    const std::vector<MetricsRecord>& records, bool include_wall_time) {
  std::map<std::pair<std::string, int>, std::vector<const MetricsRecord*>>
      cells;
  for (const auto& rec : records)
    cells[{method_name(rec.method), rec.n}].push_back(&rec);

  std::vector<SummaryRow> rows;
  for (const auto& [key, cell] : cells) {
    std::vector<std::pair<std::string, std::vector<double>>> metrics;
    metrics.emplace_back("fp_count", std::vector<double>());
    metrics.emplace_back("fpr", std::vector<double>());
    metrics.emplace_back("q_mse", std::vector<double>());
    metrics.emplace_back("tpr", std::vector<double>());
    if (include_wall_time)
      metrics.emplace_back("wall_time_ms", std::vector<double>());
    for (const auto* rec : cell) {
      metrics[0].second.push_back(rec->fp_count);
      metrics[1].second.push_back(rec->fpr);
      metrics[2].second.push_back(rec->q_mse);
      metrics[3].second.push_back(rec->tpr);
      if (include_wall_time) metrics[4].second.push_back(rec->wall_time_ms);
    }
    for (const auto& [name, values] : metrics) {
      SummaryRow row;
      row.method = key.first;
      row.n = key.second;
      row.metric_name = name;
      row.num_replications = static_cast<int>(values.size());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= values.size();
      row.mean = mean;
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (values.size() - 1));
        row.standard_error = sd / std::sqrt(static_cast<double>(values.size()));
      } else {
        row.standard_error = 0.0;  // single replication, flagged by caller
      }
      rows.push_back(std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end(),
            [](const SummaryRow& a, const SummaryRow& b) {
              return std::tie(a.method, a.n, a.metric_name) <
                     std::tie(b.method, b.n, b.metric_name);
            });
  return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidConfig("cannot write '" + path.string() + "'");
  out << "method,n,metric_name,mean,standard_error,num_replications\n";
  for (const auto& row : rows)
    out << row.method << ',' << row.n << ',' << row.metric_name << ','
        << format_double(row.mean) << ',' << format_double(row.standard_error)
        << ',' << row.num_replications << "\n";
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw MalformedInput("empty summary", 1);
  std::vector<SummaryRow> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw MalformedInput("wrong field count", lineno);
    SummaryRow row;
    try {
      row.method = f[0];
      row.n = static_cast<int>(to_int(f[1], "n"));
      row.metric_name = f[2];
      row.mean = to_double(f[3], "mean");
      row.standard_error = to_double(f[4], "standard_error");
      row.num_replications = static_cast<int>(to_int(f[5], "num_replications"));
    } catch (const InvalidConfig& e) {
      throw MalformedInput(e.what(), lineno);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<MetricsRecord> read_results_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw MalformedInput("empty results file", 1);
  if (trim(line) != "method,n,replication,q_mse,tpr,fpr,fp_count")
    throw MalformedInput("unexpected results header", 1);
  std::vector<MetricsRecord> records;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw MalformedInput("wrong field count", lineno);
    MetricsRecord rec;
    try {
      rec.method = method_from_name(f[0]);
      rec.n = static_cast<int>(to_int(f[1], "n"));
      rec.replication = static_cast<int>(to_int(f[2], "replication"));
      rec.q_mse = to_double(f[3], "q_mse");
      rec.tpr = to_double(f[4], "tpr");
      rec.fpr = to_double(f[5], "fpr");
      rec.fp_count = static_cast<int>(to_int(f[6], "fp_count"));
    } catch (const InvalidConfig& e) {
      throw MalformedInput(e.what(), lineno);
    }
    records.push_back(rec);
  }
  return records;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);

  const auto t_start = std::chrono::steady_clock::now();

  std::vector<RepOutcome> outcomes(cfg.replications);
  {
    std::atomic<int> next{0};
    const int workers = worker_count(cfg.replications);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (int r = next.fetch_add(1); r < cfg.replications;
             r = next.fetch_add(1))
          outcomes[r] = run_replication(cfg, r);
      });
    }
    for (auto& th : pool) th.join();
  }

  ExperimentOutput output;
  for (auto& outcome : outcomes) {
    output.records.insert(output.records.end(), outcome.records.begin(),
                          outcome.records.end());
    output.errors.insert(output.errors.end(), outcome.errors.begin(),
                         outcome.errors.end());
  }
  canonical_sort(output.records);
  std::sort(output.errors.begin(), output.errors.end(),
            [](const CellError& a, const CellError& b) {
              return std::make_tuple(method_name(a.method), a.n,
                                     a.replication) <
                     std::make_tuple(method_name(b.method), b.n, b.replication);
            });

  output.results_csv = out_dir / "results.csv";
  {
    std::ofstream out(output.results_csv);
    out << "method,n,replication,q_mse,tpr,fpr,fp_count\n";
    for (const auto& rec : output.records)
      out << method_name(rec.method) << ',' << rec.n << ',' << rec.replication
          << ',' << format_double(rec.q_mse) << ',' << format_double(rec.tpr)
          << ',' << format_double(rec.fpr) << ',' << rec.fp_count << "\n";
  }
  {
    std::ofstream out(out_dir / "timings.csv");
    out << "method,n,replication,wall_time_ms\n";
    for (const auto& rec : output.records)
      out << method_name(rec.method) << ',' << rec.n << ',' << rec.replication
          << ',' << format_double(rec.wall_time_ms) << "\n";
  }
  {
    std::ofstream out(out_dir / "errors.csv");
    out << "method,n,replication,error\n";
    for (const auto& err : output.errors)
      out << method_name(err.method) << ',' << err.n << ',' << err.replication
          << ',' << err.code << "\n";
  }

  output.summary_csv = out_dir / "summary.csv";
  write_summary_csv(summarize_records(output.records, true),
                    output.summary_csv);

  const double total_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t_start)
                              .count();
  output.manifest_json = out_dir / "manifest.json";
  {
    nlohmann::json manifest;
    manifest["code_version"] = kCodeVersion;
    manifest["config"] = render_config(cfg);
    manifest["rng"] = cfg.rng_algorithm;
    manifest["records"] = output.records.size();
    manifest["failed_cells"] = output.errors.size();
    manifest["wall_time_ms"] = total_ms;
    std::ofstream out(output.manifest_json);
    out << manifest.dump(2) << "\n";
  }
  return output;
}

std::filesystem::path summarize(const std::filesystem::path& results_csv,
                                const std::filesystem::path& out_csv) {
  std::vector<MetricsRecord> records = read_results_csv(results_csv);
  bool have_timings = false;

  const std::filesystem::path timings =
      results_csv.parent_path() / "timings.csv";
  if (std::filesystem::exists(timings)) {
    std::map<std::tuple<std::string, int, int>, double> wall;
    std::ifstream in(timings);
    std::string line;
    std::getline(in, line);
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      const auto f = split(line, ',');
      if (f.size() != 4) throw MalformedInput("wrong field count", lineno);
      wall[{f[0], static_cast<int>(to_int(f[1], "n")),
            static_cast<int>(to_int(f[2], "replication"))}] =
          to_double(f[3], "wall_time_ms");
    }
    have_timings = true;
    for (auto& rec : records) {
      const auto it =
          wall.find({method_name(rec.method), rec.n, rec.replication});
      if (it != wall.end()) rec.wall_time_ms = it->second;
    }
  }

  const auto rows = summarize_records(records, have_timings);
  for (const auto& row : rows)
    if (row.num_replications == 1) {
      std::cerr << "warning: single replication for (" << row.method << ", n="
                << row.n << "); standard errors reported as 0\n";
      break;
    }
  write_summary_csv(rows, out_csv);
  return out_csv;
}

}  // namespace rfq
