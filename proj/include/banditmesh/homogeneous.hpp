#pragma once

// Cooperative heavy-tailed UCB when every client faces the same arms.
//
// Rounds 1..L elect a hub center by flooding first-round degrees. Afterwards
// the center pools every reward whose origin's information has reached it and
// serves its median-of-means estimates; other clients adopt the freshest hub
// payload they have received.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "banditmesh/comms.hpp"
#include "banditmesh/estimators.hpp"
#include "banditmesh/graph.hpp"
#include "banditmesh/problem.hpp"

namespace banditmesh {

struct HubIdState {
  ClientId owner = 0;
  /// First-round degree of each client as known to owner; -1 = unknown.
  std::vector<std::int64_t> known_degree;

  /// Argmax of known degrees, smallest index on ties.
  [[nodiscard]] ClientId elected() const;
};

/// Every client knows its own first-round degree and nothing else.
std::vector<HubIdState> start_hub_identification(const GraphSnapshot& first_round);

/// One synchronous flooding round of all known degree entries.
void hub_identification_round(std::vector<HubIdState>& states, const GraphSnapshot& snapshot);

struct HomogClientState {
  ClientId id = 0;
  bool center = false;
  ClientId elected = 0;
  std::vector<std::uint64_t> n;
  /// Count used by the index.
  std::vector<std::uint64_t> big_n;
  /// Estimate used by the index.
  std::vector<double> mu_hat;
  /// Own rewards per arm; used until a hub payload arrives.
  std::vector<RewardLog> own_log;
  /// Center only: pooled rewards per arm.
  std::vector<RewardLog> hub_log;
  /// Center only: per origin, rewards absorbed up to this round.
  std::vector<Stamp> absorbed;
  /// Stamp of the adopted hub payload, 0 while still on own estimates.
  Stamp hub_stamp = 0;
};

/// Argmax of the UCB index over (mu_hat, big_n); unexplored arms first.
std::size_t homog_select_arm(const HomogClientState& state, std::size_t t, const UcbParams& p);

/// All per-run state of the cooperative phase.
struct HomogContext {
  std::size_t clients = 0;
  std::size_t arms = 0;
  /// Rounds before the first pull.
  std::size_t id_rounds = 0;
  AlgoParams params;
  std::vector<HomogClientState> states;
  GossipNetwork network;
  std::vector<ClientId> centers;
  /// Per client, arm and reward of each round after id_rounds.
  std::vector<std::vector<std::uint32_t>> arm_history;
  std::vector<std::vector<double>> reward_history;

  /// Optional sink for refreshed view entries.
  const TraceSink* message_trace = nullptr;

  std::uint64_t duplicate_deliveries = 0;
  std::uint64_t relay_rewards_dropped = 0;
  std::uint64_t gated_rounds = 0;

  HomogContext(std::size_t clients, std::size_t arms, const AlgoParams& params);
};

/// Fix the election outcome and set up the UCB phase. elected[m] is client m's choice.
void begin_ucb_phase(HomogContext& ctx, std::span<const ClientId> elected);

/// One UCB-phase round after the arms were pulled: count updates, center
/// pooling, exchange over the snapshot and hub payload adoption. With `gate`
/// on, a center whose degree this round is below params.gate_threshold
/// exchanges nothing this round.
void rule1_update(HomogContext& ctx, const GraphSnapshot& snapshot, std::size_t t, std::span<const std::uint32_t> arms,
                  std::span<const double> rewards, bool gate);

using HomogObserver = std::function<void(std::size_t t, const HomogContext& ctx)>;

RunResult run_homogeneous(const ProblemSpec& spec, const AlgoParams& params, std::uint64_t seed,
                          std::uint64_t replication, RunOptions options = {}, const HomogObserver& observer = {});

}  // namespace banditmesh
