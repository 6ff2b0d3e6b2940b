#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rfq/evaluation.hpp"

namespace rfq {

/// One flat key=value config file field per member; see parse_config_file.
struct ExperimentConfig {
  // environment
  int d = 50;
  int support_size = 10;
  int num_actions = 2;
  int horizon = 5;
  double discount = 0.9;
  double sigma_s = 0.4;
  double sigma_r = 0.6;
  double beta_min_floor = 0.5;
  double spectral_cap = 0.9;
  double initial_sd = 1.0;

  // grid
  std::vector<int> sample_sizes = {100, 250, 500, 1000, 2000, 4000};
  int replications = 50;
  int n_oracle = 20000;
  std::vector<MetricsRecord::Method> methods = {
      MetricsRecord::Method::RewardFiltered,
      MetricsRecord::Method::NaiveThresholded};

  // estimation. The benchmark defaults to a fixed penalty shared by both
  // methods (with the threshold tied to it); the data-driven rule remains
  // available through penalty_rule = data_driven.
  FqiConfig::Mode mode = FqiConfig::Mode::Evaluation;
  FqiConfig::PenaltyRule penalty_rule = FqiConfig::PenaltyRule::Fixed;
  double penalty = 0.1;
  double alpha = 0.05;
  double c = 1.1;
  int num_sim = 500;
  int penalty_refine_passes = 12;
  FqiConfig::ThresholdRule threshold_rule =
      FqiConfig::ThresholdRule::ScaledToPenalty;
  double threshold = 0.0;
  double threshold_scale = 0.5;
  FqiConfig::SupportPooling support_pooling =
      FqiConfig::SupportPooling::UnionOverActions;
  double lasso_tol = 1e-8;
  int lasso_max_iters = 10000;

  // harness
  int eval_states = 1000;
  bool redraw_policies_per_replication = true;
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";
  std::string rng_algorithm = "xoshiro256starstar";  // pinned generator identity
};

/// Flat line-based `key = value` file, `#` comments; every key mirrors an
/// ExperimentConfig field 1:1. Unknown keys are errors.
ExperimentConfig parse_config_file(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);
std::string render_config(const ExperimentConfig& config);

/// Throws InvalidConfig unless replications >= 1, sample_sizes strictly
/// increasing, n_oracle >= 20*d, methods nonempty, and the rng identity is
/// the pinned one.
void validate_config(const ExperimentConfig& config);

struct CellError {
  MetricsRecord::Method method;
  int n = 0;
  int replication = 0;
  std::string code;
};

struct SummaryRow {
  std::string method;
  int n = 0;
  std::string metric_name;
  double mean = 0.0;
  double standard_error = 0.0;
  int num_replications = 0;
};

struct ExperimentOutput {
  std::filesystem::path results_csv;
  std::filesystem::path summary_csv;
  std::filesystem::path manifest_json;
  std::vector<MetricsRecord> records;
  std::vector<CellError> errors;
};

/// Runs the full replication grid. Per replication r, all seeds derive from
/// master_seed via seed_chain(seed_chain(master, r), tag) with documented
/// tags (spec=1, behavior policy=2, evaluation policy=3, oracle batch=4,
/// eval states=5, batch=6, fqi=7, oracle fqi=8) and per-sample-size streams
/// chaining the index of n; methods share batches and fqi seeds within a
/// cell, so comparisons are paired by construction. Replications run on a
/// worker pool capped by RFQI_THREADS; output ordering is canonicalized
/// (method name, n, replication) before writing, so (config, master_seed)
/// fully determines results.csv bytes.
///
/// Emits results.csv (method,n,replication,q_mse,tpr,fpr,fp_count),
/// timings.csv (per-cell wall_time_ms; kept out of results.csv so the latter
/// stays byte-reproducible), errors.csv (failed cells, excluded from
/// summaries), summary.csv and manifest.json into config.output_dir.
ExperimentOutput run_experiment(const ExperimentConfig& config);

/// Mean and standard error (sd/sqrt(k), 0 when k = 1) per method, sample
/// size and metric. include_wall_time adds wall_time_ms rows.
std::vector<SummaryRow> summarize_records(
    const std::vector<MetricsRecord>& records, bool include_wall_time);

/// Reads a results CSV (plus a sibling timings.csv when present), writes the
/// summary CSV, and returns its path.
std::filesystem::path summarize(const std::filesystem::path& results_csv,
                                const std::filesystem::path& out_csv);

std::vector<MetricsRecord> read_results_csv(const std::filesystem::path& path);
void write_summary_csv(const std::vector<SummaryRow>& rows,
                       const std::filesystem::path& path);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

}  // namespace rfq
