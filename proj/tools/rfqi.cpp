#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rfq/experiment.hpp"
#include "rfq/io.hpp"
#include "rfq/svg.hpp"

namespace {

rfq::ExperimentConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return rfq::ExperimentConfig{};
  return rfq::parse_config_file(config_path);
}

rfq::MdpSpec spec_from_config(const rfq::ExperimentConfig& cfg,
                              std::uint64_t seed) {
  rfq::MdpParams params;
  params.d = cfg.d;
  params.support_size = cfg.support_size;
  params.num_actions = cfg.num_actions;
  params.horizon = cfg.horizon;
  params.discount = cfg.discount;
  params.state_noise_sd = cfg.sigma_s;
  params.reward_noise_sd = cfg.sigma_r;
  params.beta_min_floor = cfg.beta_min_floor;
  params.spectral_cap = cfg.spectral_cap;
  return rfq::generate_mdp(params, seed);
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir, const std::vector<int>& n_list,
            std::optional<int> reps, std::optional<int> d,
            std::optional<int> support_size, std::optional<double> sigma_s,
            std::optional<double> sigma_r, const std::string& mode) {
  rfq::ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.master_seed = *seed;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (!n_list.empty()) cfg.sample_sizes = n_list;
  if (reps) cfg.replications = *reps;
  if (d) cfg.d = *d;
  if (support_size) cfg.support_size = *support_size;
  if (sigma_s) cfg.sigma_s = *sigma_s;
  if (sigma_r) cfg.sigma_r = *sigma_r;
  if (mode == "fqe") cfg.mode = rfq::FqiConfig::Mode::Evaluation;
  else if (mode == "fqi") cfg.mode = rfq::FqiConfig::Mode::Iteration;
  else if (!mode.empty()) throw rfq::InvalidConfig("--mode must be fqe or fqi");

  const auto output = rfq::run_experiment(cfg);
  std::cout << "results:  " << output.results_csv.string() << "\n"
            << "summary:  " << output.summary_csv.string() << "\n"
            << "manifest: " << output.manifest_json.string() << "\n";
  if (!output.errors.empty())
    std::cout << output.errors.size()
              << " cell(s) failed; see errors.csv\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, int n,
                 std::optional<std::uint64_t> seed, const std::string& out,
                 const std::string& format, const std::string& spec_out) {
  rfq::ExperimentConfig cfg = load_config(config_path);
  const std::uint64_t master = seed.value_or(cfg.master_seed);
  const rfq::MdpSpec spec = spec_from_config(cfg, rfq::seed_chain(master, 1));

  rfq::Rng rng(rfq::seed_chain(master, 2));
  const rfq::Policy behavior =
      rfq::LogisticPolicy{rng.uniform_vector(cfg.d, -0.5, 0.5)};
  const rfq::TrajectoryBatch batch =
      rfq::simulate(spec, behavior, n, cfg.initial_sd,
                    rfq::seed_chain(master, 6));

  if (format == "csv") rfq::write_batch_csv(batch, out);
  else if (format == "bin") rfq::write_batch_binary(batch, out);
  else throw rfq::InvalidConfig("--format must be csv or bin");
  if (!spec_out.empty()) rfq::write_mdp_spec(spec, spec_out);
  std::cout << "wrote " << batch.num_trajectories() << " trajectories ("
            << batch.horizon() << " steps, d=" << batch.state_dim() << ") to "
            << out << "\n";
  return 0;
}

int cmd_fit(const std::string& config_path, int n,
            std::optional<std::uint64_t> seed, const std::string& method,
            const std::string& coef_out, const std::string& diag_out) {
  if (method != "rf" && method != "naive")
    throw rfq::InvalidConfig("--method must be rf or naive");
  rfq::ExperimentConfig cfg = load_config(config_path);
  const std::uint64_t master = seed.value_or(cfg.master_seed);
  const rfq::MdpSpec spec = spec_from_config(cfg, rfq::seed_chain(master, 1));

  rfq::Rng behavior_rng(rfq::seed_chain(master, 2));
  const rfq::Policy behavior =
      rfq::LogisticPolicy{behavior_rng.uniform_vector(cfg.d, -0.5, 0.5)};
  rfq::Rng eval_rng(rfq::seed_chain(master, 3));
  const rfq::Policy eval_policy =
      rfq::LogisticPolicy{eval_rng.uniform_vector(cfg.d, -0.5, 0.5)};
  const rfq::TrajectoryBatch batch = rfq::simulate(
      spec, behavior, n, cfg.initial_sd, rfq::seed_chain(master, 6));

  rfq::FqiConfig fqi;
  fqi.mode = cfg.mode;
  fqi.target_policy = eval_policy;
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
  fqi.seed = rfq::seed_chain(master, 7);

  const rfq::FqiResult result = method == "naive"
                                    ? rfq::run_naive_thresholded(batch, fqi)
                                    : rfq::run_reward_filtered(batch, fqi);
  rfq::write_qfun_csv(result.qfun, coef_out);
  if (!diag_out.empty()) rfq::write_fqi_diagnostics_csv(result, diag_out);
  std::cout << "fit " << (method == "naive" ? "NaiveThresholded" : "RewardFiltered")
            << " on " << n << " trajectories; coefficients in " << coef_out
            << "\n";
  return 0;
}

int cmd_diagnose(const std::string& config_path, int n,
                 std::optional<std::uint64_t> seed, int subset_size,
                 int num_sampled, const std::string& dump_fit) {
  rfq::ExperimentConfig cfg = load_config(config_path);
  const std::uint64_t master = seed.value_or(cfg.master_seed);
  const rfq::MdpSpec spec = spec_from_config(cfg, rfq::seed_chain(master, 1));

  rfq::Rng rng(rfq::seed_chain(master, 2));
  const rfq::Policy behavior =
      rfq::LogisticPolicy{rng.uniform_vector(cfg.d, -0.5, 0.5)};
  const rfq::TrajectoryBatch batch = rfq::simulate(
      spec, behavior, n, cfg.initial_sd, rfq::seed_chain(master, 6));

  if (subset_size <= 0) subset_size = std::min(2 * cfg.support_size, cfg.d);
  const rfq::ReDiagnostic diag =
      rfq::re_diagnostic(batch.states[0], subset_size, num_sampled,
                         rfq::seed_chain(master, 9), &spec.support);

  // data-driven (rate, sigma) from the first-timestep reward regressions
  double rate = 0.0, sigma = 0.0;
  for (int a = 0; a < cfg.num_actions; ++a) {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (batch.actions[0][i] == a) rows.push_back(i);
    rfq::RegressionProblem raw;
    raw.design.resize(static_cast<Eigen::Index>(rows.size()), cfg.d);
    raw.response.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      raw.design.row(k) = batch.states[0].row(rows[k]);
      raw.response[k] = batch.rewards[0][rows[k]];
    }
    const auto [problem, stats] = rfq::standardize(raw);
    const rfq::PenaltySelection sel = rfq::select_penalty_detail(
        problem, cfg.alpha, cfg.c, cfg.num_sim, rfq::seed_chain(master, 10 + a),
        cfg.lasso_tol, cfg.lasso_max_iters, cfg.penalty_refine_passes);
    rate = std::max(rate, sel.quantile);
    sigma = std::max(sigma, sel.sd_refined);
    if (!dump_fit.empty() && a == 0) {
      const rfq::LassoFit fit =
          rfq::lasso_fit(problem, sel.penalty, cfg.lasso_tol,
                         cfg.lasso_max_iters);
      rfq::write_coefficients_csv(fit.coefficients, dump_fit);
    }
  }
  const double margin = rfq::beta_min_margin(spec, rate, sigma);

  std::cout << "restricted-eigenvalue diagnostic (subset size " << subset_size
            << ", " << num_sampled << " sampled subsets + true support):\n"
            << "  min restricted eigenvalue: " << diag.min_restricted_eig
            << "\n  max restricted eigenvalue: " << diag.max_restricted_eig
            << "\n";
  std::cout << "beta-min margin at data-driven (rate=" << rate
            << ", sigma=" << sigma << "): " << margin
            << (margin > 0 ? "  [beta-min condition holds]"
                           : "  [beta-min condition VIOLATED]")
            << "\n";
  return margin > 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reward-filtered linear offline RL: benchmark harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run the replication experiment grid");
  std::string run_config, run_out, run_mode;
  std::optional<std::uint64_t> run_seed;
  std::vector<int> run_n_list;
  std::optional<int> run_reps, run_d, run_support;
  std::optional<double> run_sigma_s, run_sigma_r;
  run->add_option("--config", run_config, "experiment config file");
  run->add_option("--seed", run_seed, "master seed override");
  run->add_option("--out", run_out, "output directory override");
  run->add_option("--n-list", run_n_list, "sample sizes override")
      ->delimiter(',');
  run->add_option("--reps", run_reps, "replications override");
  run->add_option("--d", run_d, "state dimension override");
  run->add_option("--support-size", run_support, "support size override");
  run->add_option("--sigma-s", run_sigma_s, "state noise sd override");
  run->add_option("--sigma-r", run_sigma_r, "reward noise sd override");
  run->add_option("--mode", run_mode, "fqe or fqi");

  // summarize
  auto* summ = app.add_subcommand("summarize", "summarize a results CSV");
  std::string summ_in, summ_out;
  summ->add_option("--in", summ_in, "results CSV")->required();
  summ->add_option("--out", summ_out, "summary CSV")->required();

  // plot
  auto* plot = app.add_subcommand("plot", "render an SVG chart of a metric");
  std::string plot_in, plot_metric, plot_out;
  plot->add_option("--in", plot_in, "summary CSV")->required();
  plot->add_option("--metric", plot_metric, "metric name")->required();
  plot->add_option("--out", plot_out, "output SVG")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "emit a trajectory batch");
  std::string sim_config, sim_out, sim_format = "csv", sim_spec_out;
  int sim_n = 1000;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "experiment config file");
  sim->add_option("--n", sim_n, "number of trajectories");
  sim->add_option("--seed", sim_seed, "seed override");
  sim->add_option("--out", sim_out, "output file")->required();
  sim->add_option("--format", sim_format, "csv or bin");
  sim->add_option("--spec-out", sim_spec_out, "also write the generated spec");

  // fit
  auto* fit = app.add_subcommand(
      "fit", "fit one method on one batch and dump the Q-function");
  std::string fit_config, fit_method = "rf", fit_coef, fit_diag;
  int fit_n = 1000;
  std::optional<std::uint64_t> fit_seed;
  fit->add_option("--config", fit_config, "experiment config file");
  fit->add_option("--n", fit_n, "number of trajectories");
  fit->add_option("--seed", fit_seed, "seed override");
  fit->add_option("--method", fit_method, "rf (reward-filtered) or naive");
  fit->add_option("--out-coef", fit_coef, "Q coefficients CSV")->required();
  fit->add_option("--out-diag", fit_diag, "per-timestep diagnostics CSV");

  // diagnose
  auto* diag = app.add_subcommand(
      "diagnose", "restricted-eigenvalue and beta-min report for a config");
  std::string diag_config, diag_dump_fit;
  int diag_n = 1000, diag_subset = 0, diag_sampled = 200;
  std::optional<std::uint64_t> diag_seed;
  diag->add_option("--config", diag_config, "experiment config file");
  diag->add_option("--n", diag_n, "trajectories to simulate");
  diag->add_option("--seed", diag_seed, "seed override");
  diag->add_option("--subset-size", diag_subset, "restricted subset size");
  diag->add_option("--num-sampled", diag_sampled, "number of sampled subsets");
  diag->add_option("--dump-fit", diag_dump_fit,
                   "write the action-0 reward lasso fit as (index,coefficient)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_config, run_seed, run_out, run_n_list, run_reps,
                     run_d, run_support, run_sigma_s, run_sigma_r, run_mode);
    if (summ->parsed()) {
      rfq::summarize(summ_in, summ_out);
      std::cout << "wrote " << summ_out << "\n";
      return 0;
    }
    if (plot->parsed()) {
      rfq::plot(plot_in, plot_metric, plot_out);
      std::cout << "wrote " << plot_out << "\n";
      return 0;
    }
    if (sim->parsed())
      return cmd_simulate(sim_config, sim_n, sim_seed, sim_out, sim_format,
                          sim_spec_out);
    if (fit->parsed())
      return cmd_fit(fit_config, fit_n, fit_seed, fit_method, fit_coef,
                     fit_diag);
    if (diag->parsed())
      return cmd_diagnose(diag_config, diag_n, diag_seed, diag_subset,
                          diag_sampled, diag_dump_fit);
  } catch (const rfq::Error& e) {
    std::fprintf(stderr, "rfqi-error: %s: %s\n", e.code().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rfqi-error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
