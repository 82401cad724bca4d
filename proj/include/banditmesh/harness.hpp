#pragma once

// Experiment orchestration: configuration, kappa calibration, hub and
// broadcast checks, regret experiments against the no-communication baseline,
// and trace output.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "banditmesh/problem.hpp"

namespace banditmesh {

enum class ExperimentKind { mom, hub_size, hub_recurrence, broadcast_delay, homog_regret, heterog_regret, calibrate_kappa };

std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment_kind(std::string_view text);
const std::vector<ExperimentKind>& all_experiment_kinds();

struct GraphSection {
  std::size_t m = 20;
  double alpha = 1.5;
  double c_h = 1.0;
  double zeta = 0.1;
  EdgeSampler sampler = EdgeSampler::skip;
};

struct BanditSection {
  std::size_t k = 3;
  std::size_t horizon = 2000;
  double epsilon = 1.0;
  double rho = 1.0;
  /// <= 0 picks the scale whose moment equals rho.
  double scale = 0.0;
  RewardKind kind = RewardKind::pareto_shifted;
  /// Resolved clients x arms matrix, row-major.
  std::vector<double> means;
};

struct AlgorithmSection {
  AlgoOptions options;
  std::optional<double> kappa;
  std::string kappa_file;
  bool baseline = true;
};

struct CalibrationSection {
  std::size_t replications = 100;
  std::size_t max_rounds = 10000;
};

struct MomSection {
  std::size_t n = 1024;
  double delta = 0.01;
  std::size_t trials = 10000;
  double mean = 0.0;
};

struct BroadcastSection {
  /// Cover-time allowance in units of kappa (log M)^2.
  double factor = 1.5;
};

struct OutputSection {
  bool trace_csv = true;
  bool edges_csv = false;
  bool messages_csv = false;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::homog_regret;
  std::uint64_t seed = 1;
  std::size_t replications = 1;
  /// 0 = BANDITMESH_THREADS or 1.
  std::size_t threads = 0;
  std::string output = "out";
  GraphSection graph;
  BanditSection bandit;
  AlgorithmSection algorithm;
  CalibrationSection calibration;
  MomSection mom;
  BroadcastSection broadcast;
  OutputSection trace;
  /// Directory relative paths in the config are resolved against.
  std::filesystem::path base_dir = ".";
};

/// Validates every field; unknown keys and bad values raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Fully resolved configuration, every default spelled out.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

ProblemSpec make_problem(const ExperimentConfig& cfg);

/// Worker count: explicit value, else BANDITMESH_THREADS, else 1.
std::size_t resolve_threads(std::size_t requested);

/// Runs body(i) for i in [0, n) on up to `threads` workers. The first
/// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------

/// Every client runs single-agent median-of-means UCB on its own rewards.
RunResult baseline_no_comm(const ProblemSpec& spec, const AlgoParams& params, std::uint64_t seed,
                           std::uint64_t replication, RunOptions options = {});

struct KappaEstimate {
  double kappa = 0.0;
  /// The (1 - 1/M) quantile of the cover times, in rounds.
  std::size_t quantile_rounds = 0;
  std::size_t replications = 0;
  std::size_t timeouts = 0;
  /// max_rounds + 1 marks a timeout.
  std::vector<std::size_t> cover_times;
};

/// kappa = (1 - 1/M) quantile of single-seed broadcast cover times / (log M)^2.
/// Each replication draws fresh weights and a uniform seed client.
KappaEstimate estimate_kappa(const WeightLaw& law, std::size_t m, std::size_t replications, std::size_t max_rounds,
                             std::uint64_t seed, std::size_t threads = 1);

struct KappaChoice {
  double kappa = 0.0;
  /// "config", "file" or "estimate".
  std::string source;
};

/// Config override, then kappa file, then a fresh estimate.
KappaChoice resolve_kappa(const ExperimentConfig& cfg);

void write_kappa_file(const std::filesystem::path& path, const ExperimentConfig& cfg, const KappaEstimate& est);
double read_kappa_file(const std::filesystem::path& path);

struct HubSizeReport {
  double threshold = 0.0;
  std::size_t replications = 0;
  double pass_fraction = 0.0;
  double median_persistent = 0.0;
  double median_core = 0.0;
  std::size_t core_violations = 0;
  std::vector<std::size_t> persistent_sizes;
  std::vector<std::size_t> core_sizes;
};

/// Per replication: fresh weights, hub = max degree client of round 1, S_0 =
/// intersection of its neighbour sets over T rounds; pass when |S_0| > M^{2-alpha-zeta}.
HubSizeReport verify_hub_size(const WeightLaw& law, std::size_t m, double zeta, std::size_t horizon,
                              std::size_t replications, std::uint64_t seed, std::size_t threads = 1);

struct HubRecurrenceReport {
  double size_threshold = 0.0;
  double weight_threshold = 0.0;
  double gap_limit = 0.0;
  std::size_t replications = 0;
  std::size_t conditioned = 0;
  std::size_t violations = 0;
  double violation_frequency = 0.0;
  std::vector<std::size_t> max_gaps;
  std::vector<char> heavy_hub;
};

/// Per replication: longest run of rounds since the hub last had more than
/// M^{1/alpha-zeta} neighbours, counted as a violation when it exceeds log T,
/// over replications whose hub weight is at least M^{1/alpha-zeta/2}.
HubRecurrenceReport verify_hub_recurrence(const WeightLaw& law, std::size_t m, double zeta, std::size_t horizon,
                                          std::size_t replications, std::uint64_t seed, std::size_t threads = 1);

struct BroadcastReport {
  double kappa = 0.0;
  double bound_rounds = 0.0;
  std::size_t replications = 0;
  std::size_t within = 0;
  std::size_t timeouts = 0;
  double fraction_within = 0.0;
  std::vector<std::size_t> cover_times;
};

/// Single-seed broadcasts on fresh weights; counts covers within factor * kappa (log M)^2 rounds.
BroadcastReport verify_broadcast(const WeightLaw& law, std::size_t m, double kappa, double factor,
                                 std::size_t replications, std::size_t max_rounds, std::uint64_t seed,
                                 std::size_t threads = 1);

struct MomReport {
  std::size_t n = 0;
  std::size_t trials = 0;
  std::size_t batches = 0;
  double delta = 0.0;
  double radius = 0.0;
  double coverage = 0.0;
};

/// Fraction of trials with |MoM - mean| <= mom_radius(n, delta), using
/// batches_for_confidence(delta) batches.
MomReport verify_mom(RewardKind kind, double epsilon, double rho, double scale, double mean, std::size_t n,
                     double delta, std::size_t trials, std::uint64_t seed, std::size_t threads = 1);

// ---------------------------------------------------------------------------

inline constexpr std::string_view kTraceHeaderPrefix = "replication,t,regret,staleness_max,hub_size,mode";

void write_trace_csv(std::ostream& out, std::size_t arms, const std::vector<const RegretTrace*>& traces);
/// Parses a file written by write_trace_csv.
RegretTrace read_trace_csv(std::istream& in);

/// Summary of regret replications: events, regret statistics, diagnostics.
nlohmann::ordered_json summarize_runs(const std::vector<ReplicationSummary>& runs);

/// Runs the configured experiment, writes its files into `out_dir` and
/// returns the summary that was written to summary.json.
nlohmann::ordered_json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace banditmesh
