#include "banditmesh/graph.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <ostream>
#include <string>

#include "banditmesh/error.hpp"

namespace banditmesh {

double connect_prob(double u, double v, double theta, std::size_t m) {
  if (!(u > 0.0) || !(v > 0.0) || !(theta > 0.0) || m == 0) {
    throw UsageError("connect_prob: weights, theta and M must be positive");
  }
  return std::min(1.0, u * v / (theta * static_cast<double>(m)));
}

EdgeSampler parse_edge_sampler(std::string_view text) {
  if (text == "dense") return EdgeSampler::dense;
  if (text == "skip") return EdgeSampler::skip;
  throw ConfigError("unknown graph sampler '" + std::string(text) + "' (valid: dense, skip)");
}

GraphProcess::GraphProcess(std::vector<double> weights, double theta) : weights_(std::move(weights)), theta_(theta) {
  if (weights_.empty()) throw ConfigError("graph process: at least one client required");
  if (!(theta_ > 0.0)) throw ConfigError("graph process: theta must be > 0");
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("graph process: weights must be positive and finite");
  }
  by_weight_.resize(weights_.size());
  std::iota(by_weight_.begin(), by_weight_.end(), ClientId{0});
  std::stable_sort(by_weight_.begin(), by_weight_.end(),
                   [&](ClientId a, ClientId b) { return weights_[a] > weights_[b]; });
}

GraphProcess::GraphProcess(const WeightLaw& law, std::size_t m, RngStream& rng)
    : GraphProcess(sample_weights(law, m, rng), law.theta()) {}

double GraphProcess::prob(ClientId i, ClientId j) const {
  return connect_prob(weight(i), weight(j), theta_, weights_.size());
}

GraphSnapshot::GraphSnapshot(std::size_t round, std::size_t m, std::vector<std::pair<ClientId, ClientId>> edges)
    : round_(round), m_(m), edges_(std::move(edges)) {
  for (auto& [a, b] : edges_) {
    if (a >= m_ || b >= m_) throw UsageError("graph snapshot: endpoint out of range");
    if (a == b) throw UsageError("graph snapshot: self-loops are implicit and must not be listed");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    throw UsageError("graph snapshot: duplicate edge");
  }
  offsets_.assign(m_ + 1, 0);
  for (const auto& [a, b] : edges_) {
    ++offsets_[a + 1];
    ++offsets_[b + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacency_.resize(2 * edges_.size());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [a, b] : edges_) {
    adjacency_[fill[a]++] = b;
    adjacency_[fill[b]++] = a;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
  }
}

std::span<const ClientId> GraphSnapshot::neighbors(ClientId i) const {
  if (i >= m_) throw UsageError("graph snapshot: client index out of range");
  return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

bool GraphSnapshot::has_edge(ClientId i, ClientId j) const {
  const auto row = neighbors(i);
  if (j >= m_) throw UsageError("graph snapshot: client index out of range");
  return std::binary_search(row.begin(), row.end(), j);
}

namespace {

// Geometric skip over a non-increasing probability sequence p(0) >= p(1) >= ...
// Calls `accept(k)` for each selected position k in [begin, end).
template <typename ProbAt, typename Accept>
void skip_sample(std::size_t begin, std::size_t end, ProbAt prob_at, Accept accept, RngStream& rng) {
  std::size_t v = begin;
  if (v >= end) return;
  double p = prob_at(v);
  while (v < end && p > 0.0) {
    if (p < 1.0) {
      const double skip = std::floor(std::log(rng.uniform()) / std::log1p(-p));
      if (skip >= static_cast<double>(end - v)) return;
      v += static_cast<std::size_t>(skip);
    }
    const double q = prob_at(v);
    if (q >= p || rng.uniform() < q / p) accept(v);
    p = q;
    ++v;
  }
}

}  // namespace

GraphSnapshot sample_graph(const GraphProcess& proc, std::size_t round, RngStream& rng, EdgeSampler sampler) {
  const std::size_t m = proc.size();
  std::vector<std::pair<ClientId, ClientId>> edges;
  const auto& w = proc.weights();
  const double norm = proc.theta() * static_cast<double>(m);
  if (sampler == EdgeSampler::dense) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double p = std::min(1.0, w[i] * w[j] / norm);
        if (rng.uniform() < p) edges.emplace_back(static_cast<ClientId>(i), static_cast<ClientId>(j));
      }
    }
  } else {
    const auto& order = proc.by_weight();
    for (std::size_t u = 0; u + 1 < m; ++u) {
      const double wu = w[order[u]];
      skip_sample(
          u + 1, m, [&](std::size_t v) { return std::min(1.0, wu * w[order[v]] / norm); },
          [&](std::size_t v) { edges.emplace_back(order[u], order[v]); }, rng);
    }
  }
  return GraphSnapshot(round, m, std::move(edges));
}

std::vector<ClientId> sample_neighbors(const GraphProcess& proc, ClientId center, RngStream& rng) {
  const std::size_t m = proc.size();
  if (center >= m) throw UsageError("sample_neighbors: center out of range");
  const auto& w = proc.weights();
  const auto& order = proc.by_weight();
  const double norm = proc.theta() * static_cast<double>(m);
  const double wc = w[center];
  // Iterate the weight order with the center removed.
  const auto center_pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), center) - order.begin());
  auto client_at = [&](std::size_t v) { return order[v < center_pos ? v : v + 1]; };
  std::vector<ClientId> out;
  skip_sample(
      0, m - 1, [&](std::size_t v) { return std::min(1.0, wc * w[client_at(v)] / norm); },
      [&](std::size_t v) { out.push_back(client_at(v)); }, rng);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t degree(const GraphSnapshot& snapshot, ClientId i) { return snapshot.neighbors(i).size(); }

void write_edges_csv(std::ostream& out, const GraphSnapshot& snapshot) {
  for (const auto& [a, b] : snapshot.edges()) out << snapshot.round() << ',' << a << ',' << b << '\n';
}

// ---------------------------------------------------------------------------

double AdjacencyRow::probability(ClientId j) const {
  if (j >= counts_.size()) throw UsageError("adjacency row: index out of range");
  if (rounds_ == 0) return 0.0;
  return static_cast<double>(counts_[j]) / static_cast<double>(rounds_);
}

EmpiricalAdjacency::EmpiricalAdjacency(std::size_t m) : m_(m), counts_(m * m, 0) {}

void EmpiricalAdjacency::update(const GraphSnapshot& snapshot) {
  if (snapshot.size() != m_) throw UsageError("empirical adjacency: snapshot size mismatch");
  if (snapshot.round() != t_ + 1) {
    throw SequencingError("empirical adjacency: expected round " + std::to_string(t_ + 1) + ", got " +
                          std::to_string(snapshot.round()));
  }
  for (const auto& [a, b] : snapshot.edges()) {
    ++counts_[static_cast<std::size_t>(a) * m_ + b];
    ++counts_[static_cast<std::size_t>(b) * m_ + a];
  }
  for (std::size_t i = 0; i < m_; ++i) ++counts_[i * m_ + i];
  ++t_;
}

AdjacencyRow EmpiricalAdjacency::row(ClientId m) const {
  if (m >= m_) throw UsageError("empirical adjacency: row out of range");
  return AdjacencyRow({counts_.data() + static_cast<std::size_t>(m) * m_, m_}, t_);
}

EmpiricalAdjacency update_empirical(EmpiricalAdjacency adj, const GraphSnapshot& snapshot) {
  adj.update(snapshot);
  return adj;
}

// ---------------------------------------------------------------------------

ClientId max_degree_client(const GraphSnapshot& snapshot) {
  ClientId best = 0;
  std::size_t best_degree = 0;
  for (ClientId i = 0; i < snapshot.size(); ++i) {
    const std::size_t d = snapshot.neighbors(i).size();
    if (d > best_degree) {
      best = i;
      best_degree = d;
    }
  }
  return best;
}

std::vector<ClientId> deterministic_hub_core(const GraphProcess& proc, ClientId center) {
  if (center >= proc.size()) throw UsageError("deterministic_hub_core: center out of range");
  const double bar = proc.theta() * static_cast<double>(proc.size());
  const double hc = proc.weight(center);
  std::vector<ClientId> core;
  for (ClientId j = 0; j < proc.size(); ++j) {
    if (j != center && proc.weights()[j] * hc >= bar) core.push_back(j);
  }
  return core;
}

HubInfo::HubInfo(ClientId center, std::size_t m, double large_threshold)
    : center_(center), m_(m), threshold_(large_threshold) {
  if (center >= m) throw UsageError("hub info: center out of range");
}

void HubInfo::observe(std::size_t round, std::span<const ClientId> hub_set) {
  if (round != round_ + 1) throw SequencingError("hub info: rounds must be observed in order");
  current_.assign(hub_set.begin(), hub_set.end());
  if (round == 1) {
    persistent_ = current_;
  } else {
    std::vector<ClientId> kept;
    std::set_intersection(persistent_.begin(), persistent_.end(), current_.begin(), current_.end(),
                          std::back_inserter(kept));
    persistent_ = std::move(kept);
  }
  if (static_cast<double>(current_.size()) > threshold_) last_large_ = round;
  max_gap_ = std::max(max_gap_, round - last_large_);
  round_ = round;
}

std::optional<std::size_t> broadcast_cover_time(const GraphProcess& proc, std::span<const ClientId> seed_set,
                                                RngStream& rng, std::size_t max_rounds, EdgeSampler sampler) {
  if (seed_set.empty()) throw UsageError("broadcast_cover_time: seed set must be non-empty");
  const std::size_t m = proc.size();
  std::vector<char> informed(m, 0);
  std::size_t count = 0;
  for (ClientId s : seed_set) {
    if (s >= m) throw UsageError("broadcast_cover_time: seed out of range");
    if (!informed[s]) {
      informed[s] = 1;
      ++count;
    }
  }
  if (count == m) return 0;
  std::vector<ClientId> newly;
  for (std::size_t t = 1; t <= max_rounds; ++t) {
    const GraphSnapshot g = sample_graph(proc, t, rng, sampler);
    newly.clear();
    for (const auto& [a, b] : g.edges()) {
      if (informed[a] && !informed[b]) newly.push_back(b);
      if (informed[b] && !informed[a]) newly.push_back(a);
    }
    for (ClientId v : newly) {
      if (!informed[v]) {
        informed[v] = 1;
        ++count;
      }
    }
    if (count == m) return t;
  }
  return std::nullopt;
}

double analytic_mean_degree(const GraphProcess& proc) {
  const std::size_t m = proc.size();
  const auto& w = proc.weights();
  const double norm = proc.theta() * static_cast<double>(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) row += std::min(1.0, w[i] * w[j] / norm);
    }
    total += row;
  }
  return total / static_cast<double>(m);
}

}  // namespace banditmesh
