#include <cinttypes>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blockisd/blockisd.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string algorithms;
  std::uint64_t seed = 0;
  int workers = 0;
  bool seed_set = false;
  bool workers_set = false;
};

void add_common(CLI::App* cmd, CommonOptions* opts) {
  cmd->add_option("--config", opts->config_path, "run configuration file (JSON)");
  cmd->add_option("--out", opts->out_dir, "output directory for CSV results");
  cmd->add_option("--seed", opts->seed, "master seed override")
      ->each([opts](const std::string&) { opts->seed_set = true; });
  cmd->add_option("--workers", opts->workers, "worker thread count override")
      ->each([opts](const std::string&) { opts->workers_set = true; });
  cmd->add_option("--algorithms", opts->algorithms,
                  "comma-separated subset of bp,isd,block_isd,oracle_ls");
}

blockisd::RunConfig build_config(const CommonOptions& opts) {
  blockisd::RunConfig config;
  if (!opts.config_path.empty()) config = blockisd::load_run_config(opts.config_path);
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  if (opts.seed_set) config.master_seed = opts.seed;
  if (opts.workers_set) config.workers = opts.workers;
  if (!opts.algorithms.empty()) {
    config.algorithms.clear();
    std::string token;
    for (char c : opts.algorithms + ",") {
      if (c == ',') {
        if (!token.empty()) config.algorithms.push_back(blockisd::algorithm_from_string(token));
        token.clear();
      } else {
        token += c;
      }
    }
  }
  for (const std::string& warning : blockisd::validate(config))
    std::fprintf(stderr, "warning: %s\n", warning.c_str());
  return config;
}

int cmd_run(const CommonOptions& opts) {
  const blockisd::RunConfig config = build_config(opts);
  std::printf("sweep: N=%d N_T=%d L=%d p=%d, %zu SNR points x %d trials, seed %" PRIu64 "\n",
              config.N, config.N_T, config.L, config.p, config.snr_grid_db.size(),
              config.n_trials, config.master_seed);
  const blockisd::SweepResult result = blockisd::run_sweep(config);
  std::printf("%-8s %-10s %12s %12s %8s\n", "snr_db", "algorithm", "mean_nmse", "nmse_db",
              "trials");
  for (const blockisd::SummaryRow& row : result.summary)
    std::printf("%-8g %-10s %12.4e %12.2f %8d\n", row.snr_db, blockisd::to_string(row.algorithm),
                row.mean_nmse, row.mean_nmse_db, row.n_trials);
  std::printf("wrote %s\nwrote %s\n", result.trials_csv.string().c_str(),
              result.summary_csv.string().c_str());
  return 0;
}

void print_trace(const char* name, const blockisd::RecoveryOutput& output) {
  std::printf("%s support-detection trace:\n", name);
  for (const blockisd::IsdIterate& step : output.trace)
    std::printf("  iter %d: tau=%.4e eps=%.4e detected=%zu support=%zu objective=%.4e "
                "residual=%.4e solver_iters=%d\n",
                step.iteration, step.jump_gap_threshold, step.magnitude_threshold,
                step.scalar_support.size(), step.support.size(), step.objective,
                step.fidelity_residual, step.solver_iterations);
}

int cmd_trial(const CommonOptions& opts, double snr_db, int trial_index, bool trace) {
  blockisd::RunConfig config = build_config(opts);
  const blockisd::TrialData data = blockisd::make_trial_data(config, snr_db, trial_index);
  std::printf("trial %d at %g dB: %d antennas x length %d, %d pilots, %zu true blocks, "
              "noise variance %.4e, delta %.4e\n",
              trial_index, snr_db, config.N_T, config.L, config.p,
              blockisd::tap_support(data.cir).size(), data.measurement.noise_variance, data.delta);
  const std::vector<blockisd::NmseRecord> records =
      blockisd::run_trial(config, snr_db, trial_index);
  std::printf("%-10s %12s %10s %s\n", "algorithm", "nmse", "iterations", "termination");
  for (const blockisd::NmseRecord& record : records)
    std::printf("%-10s %12.4e %10d %s\n", blockisd::to_string(record.algorithm), record.nmse,
                record.iterations, blockisd::to_string(record.termination_reason));
  if (trace) {
    blockisd::TruncatedBpSolver solver(data.theta, config.solver_params);
    blockisd::IsdParams params = config.isd_params;
    params.solver = config.solver_params;
    params.record_trace = true;
    print_trace("isd", blockisd::isd_recover(solver, data.measurement.y, data.delta, params));
    print_trace("block_isd",
                blockisd::block_isd_recover(solver, data.measurement.y, data.delta, params));
  }
  return 0;
}

int cmd_overhead(const CommonOptions& opts) {
  const blockisd::RunConfig config = build_config(opts);
  const blockisd::OverheadReport report = blockisd::overhead_report(config);
  std::printf("conventional pilot requirement (L*N_T): %lld\n", report.conventional_requirement);
  std::printf("configured pilots (p):                  %d\n", report.configured_pilots);
  std::printf("overhead reduction:                     %.3f%%\n", 100.0 * report.reduction_ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-sparse channel estimation benchmark"};
  app.require_subcommand(1);

  CommonOptions run_opts, trial_opts, overhead_opts;
  CLI::App* run = app.add_subcommand("run", "run the full Monte-Carlo sweep and write CSVs");
  add_common(run, &run_opts);

  CLI::App* trial = app.add_subcommand("trial", "run one trial and print per-algorithm results");
  add_common(trial, &trial_opts);
  double snr_db = 10.0;
  int trial_index = 0;
  bool trace = false;
  trial->add_option("--snr", snr_db, "SNR in dB; must be a point of snr_grid_db");
  trial->add_option("--trial", trial_index, "trial index");
  trial->add_flag("--trace", trace, "record the support-detection trace");

  CLI::App* overhead = app.add_subcommand("overhead", "print the pilot overhead arithmetic");
  add_common(overhead, &overhead_opts);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (trial->parsed()) return cmd_trial(trial_opts, snr_db, trial_index, trace);
    if (overhead->parsed()) return cmd_overhead(overhead_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
