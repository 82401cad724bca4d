#pragma once

// Cooperative heavy-tailed UCB when clients face different arm means and the
// target is the arm with the best average mean across clients.
//
// A round-robin burn-in builds local estimates and contact statistics. The
// learning period mixes the stored local and global estimates of every origin
// into a global estimate, and falls back to round-robin pulls whenever a
// client's own counts lag the aggregate counts by more than a slack.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "banditmesh/comms.hpp"
#include "banditmesh/estimators.hpp"
#include "banditmesh/graph.hpp"
#include "banditmesh/problem.hpp"

namespace banditmesh {

struct Rule2Weights {
  /// Weight on every stored global estimate.
  double p_prime = 0.0;
  /// Weight on every stored local estimate.
  double d = 0.0;
  /// 12^{1/eps} + 1.
  double n_const = 0.0;
  /// p_prime before clamping at zero.
  double raw_p_prime = 0.0;
  [[nodiscard]] bool clamped() const noexcept { return raw_p_prime < 0.0; }
};

Rule2Weights rule2_weights(std::size_t m, double epsilon);

struct HeterogClientState {
  ClientId id = 0;
  std::vector<std::uint64_t> n;
  /// Aggregate counts; never below n.
  std::vector<std::uint64_t> big_n;
  /// Local estimate: running average during burn-in, median of means after.
  std::vector<double> mu_bar;
  /// Global estimate.
  std::vector<double> mu_tilde;
  std::vector<RewardLog> log;
  std::vector<double> burn_sum;
  /// Burn-in only: per origin, last direct contact round (0 = never) and the
  /// origin's local estimate seen then. Row-major origins x arms.
  std::vector<Stamp> last_contact;
  std::vector<double> contact_mu_bar;
  bool resync = false;
};

/// Index argmax with aggregate counts, or round-robin t mod K with mode resync
/// when some arm has n + slack <= N.
std::pair<std::size_t, Mode> heterog_select_arm(const HeterogClientState& state, std::size_t t, const UcbParams& p,
                                                std::size_t sync_slack);

struct HeterogContext {
  std::size_t clients = 0;
  std::size_t arms = 0;
  AlgoParams params;
  Rule2Weights weights;
  std::vector<HeterogClientState> states;
  GossipNetwork network;
  EmpiricalAdjacency adjacency;
  /// Optional sink for refreshed view entries.
  const TraceSink* message_trace = nullptr;
  /// Origins whose stored estimates were missing during an update.
  std::uint64_t coverage_gaps = 0;

  HeterogContext(std::size_t clients, std::size_t arms, const AlgoParams& params);
};

/// One burn-in round: round-robin pulls already chosen in `arms`, running
/// averages, publication, exchange and contact bookkeeping.
void burn_in_round(HeterogContext& ctx, const GraphSnapshot& snapshot, std::size_t t,
                   std::span<const std::uint32_t> arms, std::span<const double> rewards);

/// Close the burn-in: global estimates from direct contacts (weight 1/M per
/// contacted origin, self included) and local estimates switched to median of means.
void finish_burn_in(HeterogContext& ctx);

/// One learning round after the arms were pulled.
void rule2_update(HeterogContext& ctx, const GraphSnapshot& snapshot, std::size_t t,
                  std::span<const std::uint32_t> arms, std::span<const double> rewards);

using HeterogObserver = std::function<void(std::size_t t, const HeterogContext& ctx)>;

RunResult run_heterogeneous(const ProblemSpec& spec, const AlgoParams& params, std::uint64_t seed,
                            std::uint64_t replication, RunOptions options = {}, const HeterogObserver& observer = {});

}  // namespace banditmesh
