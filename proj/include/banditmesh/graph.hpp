#pragma once

// Per-round rank-1 inhomogeneous random graph: every unordered pair (i, j)
// is an edge independently with probability min{1, h_i h_j / (theta M)},
// freshly for every round.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "banditmesh/sampling.hpp"

namespace banditmesh {

using ClientId = std::uint32_t;

double connect_prob(double u, double v, double theta, std::size_t m);

enum class EdgeSampler {
  /// Visit every pair, one uniform per pair.
  dense,
  /// Geometric skipping over weight-sorted pairs (Miller & Hagberg 2011);
  /// same edge law, expected O(M + |E|) work per round.
  skip,
};

EdgeSampler parse_edge_sampler(std::string_view text);

/// Weights h_1..h_M together with theta; immutable after construction.
class GraphProcess {
 public:
  /// theta defaults to the law mean when built from a WeightLaw.
  GraphProcess(std::vector<double> weights, double theta);
  GraphProcess(const WeightLaw& law, std::size_t m, RngStream& rng);

  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] double theta() const noexcept { return theta_; }
  [[nodiscard]] double weight(ClientId i) const { return weights_.at(i); }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] double prob(ClientId i, ClientId j) const;
  /// Client ids sorted by decreasing weight (ties by index).
  [[nodiscard]] const std::vector<ClientId>& by_weight() const noexcept { return by_weight_; }

 private:
  std::vector<double> weights_;
  double theta_;
  std::vector<ClientId> by_weight_;
};

/// One round's undirected edge set. Self-loops are implicit: a client always
/// counts as its own neighbour but never appears in its neighbour list.
class GraphSnapshot {
 public:
  GraphSnapshot() = default;
  /// Edges may be given in any orientation; duplicates and self-loops are rejected.
  GraphSnapshot(std::size_t round, std::size_t m, std::vector<std::pair<ClientId, ClientId>> edges);

  [[nodiscard]] std::size_t round() const noexcept { return round_; }
  [[nodiscard]] std::size_t size() const noexcept { return m_; }
  [[nodiscard]] std::span<const ClientId> neighbors(ClientId i) const;
  [[nodiscard]] bool has_edge(ClientId i, ClientId j) const;
  /// Edges with first < second, sorted lexicographically.
  [[nodiscard]] const std::vector<std::pair<ClientId, ClientId>>& edges() const noexcept { return edges_; }

 private:
  std::size_t round_ = 0;
  std::size_t m_ = 0;
  std::vector<std::pair<ClientId, ClientId>> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<ClientId> adjacency_;
};

GraphSnapshot sample_graph(const GraphProcess& proc, std::size_t round, RngStream& rng,
                           EdgeSampler sampler = EdgeSampler::dense);

/// Neighbours of `center` for one fresh round (a single row of the graph),
/// sorted by id. Same law as neighbors(center) of a full sample_graph.
std::vector<ClientId> sample_neighbors(const GraphProcess& proc, ClientId center, RngStream& rng);

std::size_t degree(const GraphSnapshot& snapshot, ClientId i);

/// Writes "t,i,j" rows (i < j), no header.
void write_edges_csv(std::ostream& out, const GraphSnapshot& snapshot);

// ---------------------------------------------------------------------------

/// Row m of the empirical adjacency, the only part client m may look at.
class AdjacencyRow {
 public:
  AdjacencyRow(std::span<const std::uint32_t> counts, std::size_t rounds) : counts_(counts), rounds_(rounds) {}
  [[nodiscard]] double probability(ClientId j) const;
  [[nodiscard]] std::size_t size() const noexcept { return counts_.size(); }

 private:
  std::span<const std::uint32_t> counts_;
  std::size_t rounds_;
};

/// Cumulative edge counts; P_t(i, j) = counts(i, j) / t and P_t(i, i) = 1.
class EmpiricalAdjacency {
 public:
  explicit EmpiricalAdjacency(std::size_t m);

  /// The snapshot must be round rounds() + 1.
  void update(const GraphSnapshot& snapshot);
  [[nodiscard]] std::size_t rounds() const noexcept { return t_; }
  [[nodiscard]] AdjacencyRow row(ClientId m) const;

 private:
  std::size_t m_;
  std::size_t t_ = 0;
  std::vector<std::uint32_t> counts_;
};

EmpiricalAdjacency update_empirical(EmpiricalAdjacency adj, const GraphSnapshot& snapshot);

// ---------------------------------------------------------------------------
// Hub structure

/// Argmax of degree, smallest index on ties.
ClientId max_degree_client(const GraphSnapshot& snapshot);

/// {j != center : h_j h_center >= theta M}, sorted.
std::vector<ClientId> deterministic_hub_core(const GraphProcess& proc, ClientId center);

/// Tracks S_0^t, the running intersection S_0, and tau(t) for a size threshold.
class HubInfo {
 public:
  /// `large_threshold`: a round is "large" when |S_0^t| > large_threshold.
  HubInfo(ClientId center, std::size_t m, double large_threshold);

  /// Record the hub set of the next round; `hub_set` sorted ascending.
  void observe(std::size_t round, std::span<const ClientId> hub_set);

  [[nodiscard]] ClientId hub_center() const noexcept { return center_; }
  [[nodiscard]] std::size_t rounds() const noexcept { return round_; }
  [[nodiscard]] const std::vector<ClientId>& hub_set() const noexcept { return current_; }
  [[nodiscard]] const std::vector<ClientId>& persistent_hub() const noexcept { return persistent_; }
  /// tau(t): last round u <= t with a large hub, 0 if none.
  [[nodiscard]] std::size_t last_large_round() const noexcept { return last_large_; }
  /// sup over observed t of t - tau(t).
  [[nodiscard]] std::size_t max_gap() const noexcept { return max_gap_; }

 private:
  ClientId center_;
  std::size_t m_;
  double threshold_;
  std::size_t round_ = 0;
  std::vector<ClientId> current_;
  std::vector<ClientId> persistent_;
  std::size_t last_large_ = 0;
  std::size_t max_gap_ = 0;
};

/// First t with every client informed when `seed_set` starts informed and each
/// round informs the fresh neighbours of informed clients. nullopt on timeout.
std::optional<std::size_t> broadcast_cover_time(const GraphProcess& proc, std::span<const ClientId> seed_set,
                                                RngStream& rng, std::size_t max_rounds,
                                                EdgeSampler sampler = EdgeSampler::skip);

/// (1/M) sum_i sum_{j != i} connect_prob(h_i, h_j, theta, M).
double analytic_mean_degree(const GraphProcess& proc);

}  // namespace banditmesh
