#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rfq/experiment.hpp"
#include "rfq/io.hpp"
#include "rfq/svg.hpp"

using namespace rfq;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config(const std::filesystem::path& out_dir) {
  ExperimentConfig cfg;
  cfg.d = 6;
  cfg.support_size = 2;
  cfg.horizon = 2;
  cfg.n_oracle = 400;
  cfg.sample_sizes = {60, 120};
  cfg.replications = 2;
  cfg.num_sim = 100;
  cfg.eval_states = 200;
  cfg.master_seed = 4242;
  cfg.output_dir = out_dir.string();
  return cfg;
}

// Minimal well-formedness scan for the SVG output: tag balance, attribute
// quoting, one root element.
bool xml_well_formed(const std::string& text) {
  std::size_t i = text.find("?>");
  if (i == std::string::npos) return false;
  i += 2;
  std::vector<std::string> stack;
  int roots = 0;
  while (i < text.size()) {
    const auto open = text.find('<', i);
    if (open == std::string::npos) break;
    const auto close = text.find('>', open);
    if (close == std::string::npos) return false;
    std::string tag = text.substr(open + 1, close - open - 1);
    if (tag.empty()) return false;
    // no stray '<' inside a tag, quotes balanced
    if (tag.find('<') != std::string::npos) return false;
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (tag[0] == '/') {
      if (stack.empty()) return false;
      const std::string name = tag.substr(1);
      if (stack.back() != name) return false;
      stack.pop_back();
      if (stack.empty()) ++roots;
    } else if (tag.back() != '/') {
      const auto space = tag.find_first_of(" \t\n");
      stack.push_back(space == std::string::npos ? tag : tag.substr(0, space));
    }
    i = close + 1;
  }
  return stack.empty() && roots == 1;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RFQI_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config: text round-trip and unknown keys") {
  ExperimentConfig cfg;
  cfg.d = 17;
  cfg.sample_sizes = {10, 20, 40};
  cfg.mode = FqiConfig::Mode::Iteration;
  cfg.penalty_rule = FqiConfig::PenaltyRule::Fixed;
  cfg.penalty = 0.125;
  cfg.support_pooling = FqiConfig::SupportPooling::PerAction;
  cfg.redraw_policies_per_replication = false;
  cfg.master_seed = 99;
  const ExperimentConfig back = parse_config_text(render_config(cfg));
  CHECK(render_config(back) == render_config(cfg));

  CHECK_THROWS_AS(parse_config_text("no_such_key = 1\n"), InvalidConfig);
  CHECK_THROWS_AS(parse_config_text("d 50\n"), InvalidConfig);
  CHECK(parse_config_text("# comment only\n\n").d == 50);
}

TEST_CASE("config validation rejects bad grids") {
  ExperimentConfig cfg;
  cfg.sample_sizes = {100, 100};
  CHECK_THROWS_AS(validate_config(cfg), InvalidConfig);
  cfg.sample_sizes = {100};
  cfg.n_oracle = 10;
  CHECK_THROWS_AS(validate_config(cfg), InvalidConfig);
  cfg.n_oracle = 20 * cfg.d;
  cfg.rng_algorithm = "mt19937";
  CHECK_THROWS_AS(validate_config(cfg), InvalidConfig);
}

TEST_CASE("summarize_records: two-point mean and standard error") {
  std::vector<MetricsRecord> records(2);
  records[0].method = records[1].method = MetricsRecord::Method::RewardFiltered;
  records[0].n = records[1].n = 100;
  records[0].replication = 0;
  records[1].replication = 1;
  records[0].q_mse = 1.0;
  records[1].q_mse = 3.0;
  const auto rows = summarize_records(records, false);
  bool found = false;
  for (const auto& row : rows)
    if (row.metric_name == "q_mse") {
      found = true;
      CHECK(row.mean == doctest::Approx(2.0));
      CHECK(row.standard_error == doctest::Approx(1.0));
      CHECK(row.num_replications == 2);
    }
  CHECK(found);
}

TEST_CASE("summarize_records: single replication reports zero standard error") {
  std::vector<MetricsRecord> records(1);
  records[0].q_mse = 5.0;
  const auto rows = summarize_records(records, false);
  for (const auto& row : rows) {
    CHECK(row.standard_error == 0.0);
    CHECK(row.num_replications == 1);
  }
}

TEST_CASE("run_experiment: shape, determinism across thread counts, summary "
          "consistency") {
  const auto dir_a = temp_dir("rfq_exp_a");
  const auto dir_b = temp_dir("rfq_exp_b");

  ExperimentConfig cfg_a = tiny_config(dir_a);
  setenv("RFQI_THREADS", "1", 1);
  const ExperimentOutput out_a = run_experiment(cfg_a);

  ExperimentConfig cfg_b = tiny_config(dir_b);
  setenv("RFQI_THREADS", "2", 1);
  const ExperimentOutput out_b = run_experiment(cfg_b);
  unsetenv("RFQI_THREADS");

  // rows: |methods| x |n| x reps (no failures expected at these sizes)
  CHECK(out_a.records.size() == 2 * 2 * 2);
  CHECK(out_a.errors.empty());

  // bitwise-identical results regardless of the worker count
  CHECK(slurp(out_a.results_csv) == slurp(out_b.results_csv));

  // summary means equal a direct recomputation from results.csv
  const auto records = read_results_csv(out_a.results_csv);
  CHECK(records.size() == out_a.records.size());
  std::map<std::tuple<std::string, int>, std::pair<double, int>> mse;
  for (const auto& rec : records) {
    auto& cell = mse[{method_name(rec.method), rec.n}];
    cell.first += rec.q_mse;
    cell.second += 1;
  }
  for (const auto& row : read_summary_csv(out_a.summary_csv)) {
    if (row.metric_name != "q_mse") continue;
    const auto& cell = mse.at({row.method, row.n});
    CHECK(row.mean == doctest::Approx(cell.first / cell.second).epsilon(1e-12));
    CHECK(row.num_replications == cell.second);
  }

  // manifest + timings + errors files exist alongside
  CHECK(std::filesystem::exists(out_a.manifest_json));
  CHECK(std::filesystem::exists(dir_a / "timings.csv"));
  CHECK(std::filesystem::exists(dir_a / "errors.csv"));

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("summarize: excluded cells simply do not contribute") {
  const auto dir = temp_dir("rfq_summ");
  const auto results = dir / "results.csv";
  {
    std::ofstream out(results);
    out << "method,n,replication,q_mse,tpr,fpr,fp_count\n";
    out << "RewardFiltered,100,0,1.0,1,0,0\n";
    out << "RewardFiltered,100,1,3.0,1,0,0\n";
    out << "RewardFiltered,200,0,0.5,1,0,0\n";  // replication 1 failed -> absent
  }
  summarize(results, dir / "summary.csv");
  for (const auto& row : read_summary_csv(dir / "summary.csv")) {
    if (row.n == 100) CHECK(row.num_replications == 2);
    if (row.n == 200) CHECK(row.num_replications == 1);
  }
  CHECK_THROWS_AS(summarize(dir / "missing.csv", dir / "s.csv"), InvalidConfig);
  {
    std::ofstream out(results);
    out << "method,n,replication,q_mse,tpr,fpr,fp_count\n";
    out << "RewardFiltered,abc,0,1.0,1,0,0\n";
  }
  CHECK_THROWS_AS(summarize(results, dir / "s.csv"), MalformedInput);
  std::filesystem::remove_all(dir);
}

TEST_CASE("plot: well-formed, deterministic, and strict about metrics") {
  std::vector<SummaryRow> rows;
  for (const std::string method : {"RewardFiltered", "NaiveThresholded"})
    for (int i = 0; i < 4; ++i) {
      SummaryRow row;
      row.method = method;
      row.n = 100 << i;
      row.metric_name = "q_mse";
      row.mean = method == "RewardFiltered" ? 1.0 / (i + 1) : 2.0 / (i + 1);
      row.standard_error = 0.05;
      row.num_replications = 10;
      rows.push_back(row);
    }
  const std::string svg = render_metric_chart(rows, "q_mse");
  CHECK(xml_well_formed(svg));
  CHECK(svg == render_metric_chart(rows, "q_mse"));  // identical bytes
  CHECK(svg.find("RewardFiltered") != std::string::npos);
  CHECK_THROWS_AS(render_metric_chart(rows, "nope"), UnknownMetric);
  CHECK_THROWS_AS(render_metric_chart({}, "q_mse"), UnknownMetric);
}

TEST_CASE("cli: run, summarize, plot, simulate, diagnose") {
  const auto dir = temp_dir("rfq_cli");
  const auto config_path = dir / "config.cfg";
  {
    ExperimentConfig cfg = tiny_config(dir / "out");
    cfg.replications = 1;
    cfg.sample_sizes = {60};
    std::ofstream out(config_path);
    out << render_config(cfg);
  }

  CHECK(run_cli("run --config " + config_path.string()) == 0);
  CHECK(std::filesystem::exists(dir / "out" / "results.csv"));
  CHECK(std::filesystem::exists(dir / "out" / "summary.csv"));
  CHECK(std::filesystem::exists(dir / "out" / "manifest.json"));
  // one row per (method, n, replication): 2 methods x 1 n x 1 rep
  CHECK(read_results_csv(dir / "out" / "results.csv").size() == 2);

  CHECK(run_cli("summarize --in " + (dir / "out" / "results.csv").string() +
                " --out " + (dir / "resummary.csv").string()) == 0);
  CHECK(run_cli("plot --in " + (dir / "out" / "summary.csv").string() +
                " --metric tpr --out " + (dir / "tpr.svg").string()) == 0);
  CHECK(xml_well_formed(slurp(dir / "tpr.svg")));

  CHECK(run_cli("simulate --config " + config_path.string() +
                " --n 20 --out " + (dir / "batch.bin").string() +
                " --format bin --spec-out " + (dir / "spec.txt").string()) == 0);
  const TrajectoryBatch batch = read_batch_binary(dir / "batch.bin");
  CHECK(batch.num_trajectories() == 20);
  CHECK(std::filesystem::exists(dir / "spec.txt"));

  CHECK(run_cli("diagnose --config " + config_path.string() + " --n 200" +
                " --dump-fit " + (dir / "lasso.csv").string()) == 0);
  CHECK(slurp(dir / "lasso.csv").rfind("index,coefficient\n", 0) == 0);

  CHECK(run_cli("fit --config " + config_path.string() +
                " --n 100 --method naive --out-coef " +
                (dir / "qfun.csv").string() + " --out-diag " +
                (dir / "qdiag.csv").string()) == 0);
  CHECK(slurp(dir / "qfun.csv").rfind("t,action,coordinate,coefficient\n", 0) ==
        0);
  CHECK(slurp(dir / "qdiag.csv")
            .rfind("t,penalty,threshold,support_size,iterations,kkt_violation"
                   "\n",
                   0) == 0);

  // usage errors: missing required flag, unknown metric
  CHECK(run_cli("plot --metric q_mse --out x.svg") != 0);
  CHECK(run_cli("plot --in " + (dir / "out" / "summary.csv").string() +
                " --metric nope --out " + (dir / "x.svg").string()) != 0);
  CHECK(run_cli("summarize --in " + (dir / "missing.csv").string() +
                " --out " + (dir / "y.csv").string()) != 0);

  std::filesystem::remove_all(dir);
}
