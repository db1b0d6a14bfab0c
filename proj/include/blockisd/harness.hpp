#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "blockisd/baselines.hpp"
#include "blockisd/channel.hpp"
#include "blockisd/isd.hpp"
#include "blockisd/pilot.hpp"
#include "blockisd/rng.hpp"
#include "blockisd/solver.hpp"

namespace blockisd {

// Declaration order fixes the sort order of result rows.
enum class Algorithm { bp, isd, block_isd, oracle_ls };

inline const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::bp: return "bp";
    case Algorithm::isd: return "isd";
    case Algorithm::block_isd: return "block_isd";
    case Algorithm::oracle_ls: return "oracle_ls";
  }
  return "unknown";
}

inline Algorithm algorithm_from_string(const std::string& name) {
  if (name == "bp") return Algorithm::bp;
  if (name == "isd") return Algorithm::isd;
  if (name == "block_isd") return Algorithm::block_isd;
  if (name == "oracle_ls") return Algorithm::oracle_ls;
  throw std::invalid_argument("unknown algorithm '" + name +
                              "' (expected bp, isd, block_isd, or oracle_ls)");
}

struct RunConfig {
  int N = 512;
  int N_T = 8;
  int L = 32;
  int p = 96;
  std::vector<double> snr_grid_db = {5.0, 10.0, 15.0, 20.0, 25.0};
  int n_trials = 200;
  std::vector<Algorithm> algorithms = {Algorithm::bp, Algorithm::isd, Algorithm::block_isd,
                                       Algorithm::oracle_ls};
  std::optional<ChannelProfile> channel_profile;  // absent: Vehicular-A scaled into L
  SolverParams solver_params;
  IsdParams isd_params;  // .solver is replaced by solver_params when running
  std::uint64_t master_seed = 1;
  std::string output_dir = "results";
  bool fix_pilot_plan = false;  // one pilot plan for the whole sweep
  bool fix_channel = false;     // one channel realization for the whole sweep
  int workers = 1;
};

struct NmseRecord {
  double snr_db = 0.0;
  Algorithm algorithm = Algorithm::bp;
  int trial = 0;
  double nmse = 0.0;
  int iterations = 0;
  TerminationReason termination_reason = TerminationReason::single_shot;
};

struct SummaryRow {
  double snr_db = 0.0;
  Algorithm algorithm = Algorithm::bp;
  double mean_nmse = 0.0;
  double mean_nmse_db = 0.0;
  int n_trials = 0;
};

struct OverheadReport {
  long long conventional_requirement = 0;  // pilots needed without sparse recovery
  int configured_pilots = 0;
  double reduction_ratio = 0.0;  // (requirement - p) / requirement
};

inline ChannelProfile resolved_profile(const RunConfig& config) {
  ChannelProfile profile =
      config.channel_profile ? *config.channel_profile : vehicular_a_scaled(config.L);
  profile.max_length_L = config.L;
  validate(profile);
  return profile;
}

// Hard violations throw; soft ones come back as printable warnings.
inline std::vector<std::string> validate(const RunConfig& config) {
  if (config.N < 1 || config.N_T < 1 || config.L < 1)
    throw std::invalid_argument("N, N_T, and L must be >= 1");
  if (config.p < 1 || config.p > config.N)
    throw std::invalid_argument("p must satisfy 1 <= p <= N");
  if (config.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (config.snr_grid_db.empty()) throw std::invalid_argument("snr_grid_db is empty");
  if (config.algorithms.empty()) throw std::invalid_argument("no algorithms selected");
  if (config.workers < 1) throw std::invalid_argument("workers must be >= 1");
  resolved_profile(config);
  std::vector<std::string> warnings;
  if (config.L * config.N_T < config.p)
    warnings.push_back("L*N_T < p: the system is overdetermined, sparse recovery is unnecessary");
  return warnings;
}

// ---- config file ----------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& object,
                                std::initializer_list<const char*> known,
                                const std::string& where) {
  for (const auto& item : object.items()) {
    bool found = false;
    for (const char* key : known)
      if (item.key() == key) {
        found = true;
        break;
      }
    if (!found) throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(
      j,
      {"N", "N_T", "L", "p", "snr_grid_db", "n_trials", "algorithms", "channel_profile",
       "solver_params", "isd_params", "master_seed", "output_dir", "fix_pilot_plan", "fix_channel",
       "workers"},
      "run config");
  RunConfig config;
  config.N = j.value("N", config.N);
  config.N_T = j.value("N_T", config.N_T);
  config.L = j.value("L", config.L);
  config.p = j.value("p", config.p);
  config.snr_grid_db = j.value("snr_grid_db", config.snr_grid_db);
  config.n_trials = j.value("n_trials", config.n_trials);
  if (j.contains("algorithms")) {
    config.algorithms.clear();
    for (const auto& name : j.at("algorithms"))
      config.algorithms.push_back(algorithm_from_string(name.get<std::string>()));
  }
  if (j.contains("channel_profile")) {
    const nlohmann::json& cp = j.at("channel_profile");
    detail::reject_unknown_keys(cp, {"tap_delays_ns", "tap_powers_db", "bandwidth_hz"},
                                "channel_profile");
    ChannelProfile profile;
    profile.tap_delays_ns = cp.at("tap_delays_ns").get<std::vector<double>>();
    profile.tap_powers_db = cp.at("tap_powers_db").get<std::vector<double>>();
    profile.bandwidth_hz = cp.value("bandwidth_hz", profile.bandwidth_hz);
    config.channel_profile = std::move(profile);
  }
  if (j.contains("solver_params")) {
    const nlohmann::json& sp = j.at("solver_params");
    detail::reject_unknown_keys(
        sp, {"max_iterations", "penalty", "primal_tol", "dual_tol", "over_relaxation"},
        "solver_params");
    config.solver_params.max_iterations = sp.value("max_iterations", config.solver_params.max_iterations);
    config.solver_params.penalty = sp.value("penalty", config.solver_params.penalty);
    config.solver_params.primal_tol = sp.value("primal_tol", config.solver_params.primal_tol);
    config.solver_params.dual_tol = sp.value("dual_tol", config.solver_params.dual_tol);
    config.solver_params.over_relaxation = sp.value("over_relaxation", config.solver_params.over_relaxation);
  }
  if (j.contains("isd_params")) {
    const nlohmann::json& ip = j.at("isd_params");
    detail::reject_unknown_keys(ip, {"iteration_cap", "delta_scale", "warm_start"}, "isd_params");
    config.isd_params.iteration_cap = ip.value("iteration_cap", config.isd_params.iteration_cap);
    config.isd_params.delta_scale = ip.value("delta_scale", config.isd_params.delta_scale);
    config.isd_params.warm_start = ip.value("warm_start", config.isd_params.warm_start);
  }
  config.master_seed = j.value("master_seed", config.master_seed);
  config.output_dir = j.value("output_dir", config.output_dir);
  config.fix_pilot_plan = j.value("fix_pilot_plan", config.fix_pilot_plan);
  config.fix_channel = j.value("fix_channel", config.fix_channel);
  config.workers = j.value("workers", config.workers);
  return config;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse config file " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

// ---- metrics ---------------------------------------------------------------

// Error energy over signal energy. The squared terms are accumulated in
// sorted order, so any coordinate permutation of both arguments (such as the
// block rearrangement) yields the bit-identical result.
inline double nmse(const Eigen::VectorXcd& g_hat, const Eigen::VectorXcd& g_true) {
  if (g_hat.size() != g_true.size()) throw std::invalid_argument("nmse: length mismatch");
  std::vector<double> error_terms(static_cast<std::size_t>(g_true.size()));
  std::vector<double> signal_terms(static_cast<std::size_t>(g_true.size()));
  for (Eigen::Index k = 0; k < g_true.size(); ++k) {
    error_terms[static_cast<std::size_t>(k)] = std::norm(g_hat(k) - g_true(k));
    signal_terms[static_cast<std::size_t>(k)] = std::norm(g_true(k));
  }
  std::sort(error_terms.begin(), error_terms.end());
  std::sort(signal_terms.begin(), signal_terms.end());
  double error_energy = 0.0, signal_energy = 0.0;
  for (double term : error_terms) error_energy += term;
  for (double term : signal_terms) signal_energy += term;
  if (signal_energy == 0.0) throw std::invalid_argument("nmse: true vector is zero");
  return error_energy / signal_energy;
}

// ---- trials ----------------------------------------------------------------

namespace detail {

inline int snr_index_of(const RunConfig& config, double snr_db) {
  for (std::size_t i = 0; i < config.snr_grid_db.size(); ++i)
    if (config.snr_grid_db[i] == snr_db) return static_cast<int>(i);
  throw std::invalid_argument("snr_db is not a point of snr_grid_db");
}

// Component tags for the per-trial random streams.
inline constexpr std::uint64_t kChannelStream = 1;
inline constexpr std::uint64_t kPilotStream = 2;
inline constexpr std::uint64_t kNoiseStream = 3;

inline std::vector<Algorithm> canonical_algorithms(const std::vector<Algorithm>& algorithms) {
  std::vector<Algorithm> sorted = algorithms;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return sorted;
}

}  // namespace detail

// Everything one Monte-Carlo unit needs: the generated channel, pilot plan,
// measurement, and fidelity tolerance, all derived deterministically from
// (master_seed, snr index, trial index).
struct TrialData {
  Cir cir;
  PilotPlan plan;
  SensingMatrix theta;
  Eigen::VectorXcd g_true;
  Measurement measurement;
  double delta = 0.0;
};

inline TrialData make_trial_data(const RunConfig& config, double snr_db, int trial_index) {
  const int snr_index = detail::snr_index_of(config, snr_db);
  const std::uint64_t trial_seed =
      derive_seed(config.master_seed, static_cast<std::uint64_t>(snr_index),
                  static_cast<std::uint64_t>(trial_index));
  Rng channel_rng(config.fix_channel ? derive_seed(config.master_seed, detail::kChannelStream, 0)
                                     : derive_seed(trial_seed, detail::kChannelStream, 0));
  Rng pilot_rng(config.fix_pilot_plan ? derive_seed(config.master_seed, detail::kPilotStream, 0)
                                      : derive_seed(trial_seed, detail::kPilotStream, 0));
  Rng noise_rng(derive_seed(trial_seed, detail::kNoiseStream, 0));

  TrialData data;
  data.cir = generate_cir(resolved_profile(config), config.N_T, channel_rng);
  data.plan = make_pilot_plan(config.N, config.p, config.N_T, pilot_rng);
  data.theta = p_to_theta(build_sensing_matrix(data.plan, config.L));
  data.g_true = h_to_g(data.cir);
  data.measurement = measure(data.theta, data.g_true, snr_db, noise_rng);
  data.delta = default_delta(data.measurement.noise_variance, config.p);
  return data;
}

// One Monte-Carlo unit: generates channel, pilots, and noise from streams
// derived from (master_seed, snr index, trial index), runs every selected
// algorithm on the same measurement, and reports one record per algorithm.
// An oracle rank failure skips that record and logs the reason.
inline std::vector<NmseRecord> run_trial(const RunConfig& config, double snr_db, int trial_index) {
  const TrialData data = make_trial_data(config, snr_db, trial_index);
  const SensingMatrix& theta = data.theta;
  const Cir& cir = data.cir;
  const Eigen::VectorXcd& g_true = data.g_true;
  const Measurement& measurement = data.measurement;
  const double delta = data.delta;

  TruncatedBpSolver solver(theta, config.solver_params);
  IsdParams isd_params = config.isd_params;
  isd_params.solver = config.solver_params;

  std::vector<NmseRecord> records;
  for (Algorithm algorithm : detail::canonical_algorithms(config.algorithms)) {
    RecoveryOutput output;
    switch (algorithm) {
      case Algorithm::bp:
        output = bp_recover(solver, measurement.y, isd_params.delta_scale * delta);
        break;
      case Algorithm::isd:
        output = isd_recover(solver, measurement.y, delta, isd_params);
        break;
      case Algorithm::block_isd:
        output = block_isd_recover(solver, measurement.y, delta, isd_params);
        break;
      case Algorithm::oracle_ls:
        try {
          output = oracle_ls(theta, measurement.y, OracleInfo{tap_support(cir)});
        } catch (const OracleRankError& e) {
          std::cerr << "skipping oracle_ls at snr_db=" << snr_db << " trial=" << trial_index
                    << ": " << e.what() << "\n";
          continue;
        }
        break;
    }
    NmseRecord record;
    record.snr_db = snr_db;
    record.algorithm = algorithm;
    record.trial = trial_index;
    record.nmse = nmse(output.g_hat, g_true);
    record.iterations = output.iterations_used;
    record.termination_reason = output.termination_reason;
    records.push_back(record);
  }
  return records;
}

// ---- sweep -----------------------------------------------------------------

struct SweepResult {
  std::vector<NmseRecord> records;   // ordered by (snr, algorithm, trial)
  std::vector<SummaryRow> summary;   // ordered by (snr, algorithm)
  std::filesystem::path trials_csv;  // empty when nothing was written
  std::filesystem::path summary_csv;
};

namespace detail {

// Shortest decimal form that round-trips, so output is locale-independent
// and byte-stable across runs.
inline std::string format_double(double value) {
  char buffer[64];
  const std::to_chars_result r = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, r.ptr);
}

inline void require_stream(const std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
}

}  // namespace detail

inline void write_trial_csv(const std::filesystem::path& path,
                            const std::vector<NmseRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  detail::require_stream(out, path);
  out << "snr_db,algorithm,trial,nmse,iterations,termination_reason\n";
  for (const NmseRecord& record : records) {
    out << detail::format_double(record.snr_db) << ',' << to_string(record.algorithm) << ','
        << record.trial << ',' << detail::format_double(record.nmse) << ',' << record.iterations
        << ',' << to_string(record.termination_reason) << '\n';
  }
  detail::require_stream(out, path);
}

inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<SummaryRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  detail::require_stream(out, path);
  out << "snr_db,algorithm,mean_nmse,mean_nmse_db,n_trials\n";
  for (const SummaryRow& row : rows) {
    out << detail::format_double(row.snr_db) << ',' << to_string(row.algorithm) << ','
        << detail::format_double(row.mean_nmse) << ',' << detail::format_double(row.mean_nmse_db)
        << ',' << row.n_trials << '\n';
  }
  detail::require_stream(out, path);
}

inline std::vector<SummaryRow> summarize(const RunConfig& config,
                                         const std::vector<NmseRecord>& records) {
  std::vector<SummaryRow> summary;
  for (double snr_db : config.snr_grid_db) {
    for (Algorithm algorithm : detail::canonical_algorithms(config.algorithms)) {
      double total = 0.0;
      int count = 0;
      for (const NmseRecord& record : records)
        if (record.snr_db == snr_db && record.algorithm == algorithm) {
          total += record.nmse;
          ++count;
        }
      if (count == 0) continue;
      SummaryRow row;
      row.snr_db = snr_db;
      row.algorithm = algorithm;
      row.mean_nmse = total / count;
      row.mean_nmse_db = 10.0 * std::log10(row.mean_nmse);
      row.n_trials = count;
      summary.push_back(row);
    }
  }
  return summary;
}

// Runs n_trials x |snr_grid| units on a small worker pool and merges records
// in (snr, algorithm, trial) order, independent of completion order. Writes
// trials.csv and summary.csv under config.output_dir unless write_outputs is
// false.
inline SweepResult run_sweep(const RunConfig& config, bool write_outputs = true) {
  validate(config);
  struct Unit {
    double snr_db;
    int trial;
  };
  std::vector<Unit> units;
  units.reserve(config.snr_grid_db.size() * static_cast<std::size_t>(config.n_trials));
  for (double snr_db : config.snr_grid_db)
    for (int trial = 0; trial < config.n_trials; ++trial) units.push_back({snr_db, trial});

  std::vector<std::vector<NmseRecord>> slots(units.size());
  const int workers = std::min<int>(config.workers, static_cast<int>(units.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < units.size(); ++i)
      slots[i] = run_trial(config, units[i].snr_db, units[i].trial);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    auto work = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= units.size()) return;
        try {
          slots[i] = run_trial(config, units[i].snr_db, units[i].trial);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  SweepResult result;
  const std::vector<Algorithm> algorithms = detail::canonical_algorithms(config.algorithms);
  for (std::size_t s = 0; s < config.snr_grid_db.size(); ++s) {
    for (Algorithm algorithm : algorithms) {
      for (int trial = 0; trial < config.n_trials; ++trial) {
        const std::vector<NmseRecord>& slot = slots[s * static_cast<std::size_t>(config.n_trials) +
                                                    static_cast<std::size_t>(trial)];
        for (const NmseRecord& record : slot)
          if (record.algorithm == algorithm) result.records.push_back(record);
      }
    }
  }
  result.summary = summarize(config, result.records);

  if (write_outputs) {
    const std::filesystem::path out_dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());
    result.trials_csv = out_dir / "trials.csv";
    result.summary_csv = out_dir / "summary.csv";
    write_trial_csv(result.trials_csv, result.records);
    write_summary_csv(result.summary_csv, result.summary);
  }
  return result;
}

// Pilot overhead against the conventional estimator, which needs one pilot
// per unknown (L per antenna across N_T antennas).
inline OverheadReport overhead_report(int L, int N_T, int p) {
  if (L < 1 || N_T < 1 || p < 0) throw std::invalid_argument("invalid overhead arguments");
  OverheadReport report;
  report.conventional_requirement = static_cast<long long>(L) * N_T;
  report.configured_pilots = p;
  report.reduction_ratio =
      static_cast<double>(report.conventional_requirement - p) /
      static_cast<double>(report.conventional_requirement);
  return report;
}

inline OverheadReport overhead_report(const RunConfig& config) {
  return overhead_report(config.L, config.N_T, config.p);
}

}  // namespace blockisd
