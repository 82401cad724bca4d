#pragma once

// Problem instance, derived algorithm constants and regret bookkeeping shared
// by the cooperative runners and the no-communication baseline.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "banditmesh/comms.hpp"
#include "banditmesh/estimators.hpp"
#include "banditmesh/graph.hpp"
#include "banditmesh/sampling.hpp"

namespace banditmesh {

struct GlobalMeans {
  std::vector<double> mu;
  std::size_t best = 0;
  std::vector<double> gaps;
  double max_gap = 0.0;
};

/// Column averages of a row-major clients x arms matrix; best arm ties go to
/// the smallest index.
GlobalMeans compute_global_means(std::span<const double> means, std::size_t clients, std::size_t arms);
GlobalMeans compute_global_means(const RewardModel& model);

/// Everything that defines one instance apart from seeds.
struct ProblemSpec {
  WeightLaw law;
  std::size_t clients = 1;
  std::size_t horizon = 1;
  double zeta = 0.1;
  EdgeSampler sampler = EdgeSampler::skip;
  RewardModel rewards;

  [[nodiscard]] std::size_t arms() const noexcept { return rewards.arms(); }
};

struct AlgoOptions {
  bool gate = false;
  MomMode mom_mode = MomMode::contiguous;
  /// 0 = unlimited.
  std::size_t max_relay_rewards = 0;
};

/// Counts and constants derived from the instance and a broadcast constant kappa.
struct AlgoParams {
  double kappa = 1.0;
  std::size_t batches = 1;
  UcbParams ucb;
  AlgoOptions options;
  /// Identification rounds before the homogeneous UCB phase.
  std::size_t id_rounds = 0;
  /// Heterogeneous round-robin rounds.
  std::size_t burn_in = 1;
  /// Count lag that sends a heterogeneous client into resync.
  std::size_t sync_slack = 1;
  /// Information delay allowed by the staleness event.
  std::size_t delay_bound = 1;
  /// Hub size below which the gate closes.
  std::size_t gate_threshold = 1;
};

/// ceil(kappa (log M)^2 log T), floored at 1.
std::size_t broadcast_rounds(double kappa, std::size_t m, std::size_t horizon);

AlgoParams derive_params(const ProblemSpec& spec, double kappa, AlgoOptions options = {});

// ---------------------------------------------------------------------------

enum class Mode { ucb, resync, idphase, burnin };

std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view text);

struct TraceRow {
  std::uint64_t replication = 0;
  std::size_t t = 0;
  double regret = 0.0;
  std::size_t staleness_max = 0;
  /// -1 when not applicable.
  std::int64_t hub_size = -1;
  Mode mode = Mode::ucb;
  /// Cumulative pulls of each arm summed over clients.
  std::vector<std::uint64_t> pulls;

  bool operator==(const TraceRow&) const = default;
};

struct RegretTrace {
  std::size_t arms = 0;
  std::vector<TraceRow> rows;
};

/// Event flags; unset when the event does not apply to the run.
struct EventFlags {
  std::optional<bool> a1;
  std::optional<bool> a2;
  std::optional<bool> a3;
  std::optional<bool> a_alpha_zeta;
};

struct ReplicationSummary {
  std::uint64_t replication = 0;
  double regret = 0.0;
  EventFlags events;
  std::map<std::string, double> diagnostics;
};

struct RunOptions {
  bool record_trace = true;
  bool record_actions = false;
  bool record_edges = false;
  /// Receives every entry that refreshed a view; empty = off.
  TraceSink message_trace;
};

/// Sentinel action for a round in which a client pulls nothing.
inline constexpr std::uint32_t kNoPull = 0xFFFFFFFFu;

struct RunResult {
  RegretTrace trace;
  ReplicationSummary summary;
  /// clients x arms totals over the run.
  std::vector<std::uint64_t> client_pulls;
  /// clients x arms totals over the final tenth of the horizon.
  std::vector<std::uint64_t> tail_pulls;
  /// rounds x clients, only with record_actions.
  std::vector<std::uint32_t> actions;
  /// One snapshot per round, only with record_edges.
  std::vector<GraphSnapshot> edges;
};

/// First round of the final tenth of the horizon.
std::size_t tail_start(std::size_t horizon);

/// Pseudo-regret accumulation: round t adds (1/M) sum_m Delta_{a_m^t}; a
/// client that pulls nothing is charged the largest gap.
class RegretMeter {
 public:
  RegretMeter(const GlobalMeans& means, std::size_t clients, std::size_t horizon, std::uint64_t replication,
              RunOptions options);

  /// Record round t's actions (kNoPull allowed) and, if tracing, append a row.
  void add_round(std::size_t t, std::span<const std::uint32_t> actions, Mode mode, std::size_t staleness_max,
                 std::int64_t hub_size);

  [[nodiscard]] double regret() const noexcept { return regret_; }
  /// Moves the accumulated trace, totals and action log into `out`.
  void finish(RunResult& out);

 private:
  const GlobalMeans& means_;
  std::size_t clients_;
  std::size_t arms_;
  std::size_t tail_start_;
  std::uint64_t replication_;
  RunOptions options_;
  double regret_ = 0.0;
  std::vector<std::uint64_t> totals_;
  std::vector<std::uint64_t> client_pulls_;
  std::vector<std::uint64_t> tail_pulls_;
  std::vector<std::uint32_t> actions_;
  RegretTrace trace_;
};

/// Weights of replication `replication`, drawn from its own stream.
GraphProcess make_graph_process(const ProblemSpec& spec, std::uint64_t seed, std::uint64_t replication);

}  // namespace banditmesh
