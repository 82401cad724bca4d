#pragma once

// Brute-force reference implementations used to check the library against
// independent replays of recorded runs.

#include <cstddef>
#include <cstdint>
#include <set>
#include <vector>

#include "banditmesh/graph.hpp"
#include "banditmesh/problem.hpp"

namespace oracle {

using banditmesh::ClientId;
using banditmesh::GraphSnapshot;

/// stamps[t][m][j]: latest round s <= t such that origin j's round-s
/// information reaches m by the end of round t, found by flooding a separate
/// informed set from every (j, s), one hop per round. Index t = 0 is all zeros.
inline std::vector<std::vector<std::vector<std::uint32_t>>> flood_stamps(const std::vector<GraphSnapshot>& rounds,
                                                                         std::size_t m) {
  const std::size_t horizon = rounds.size();
  std::vector<std::vector<std::vector<std::uint32_t>>> out(
      horizon + 1, std::vector<std::vector<std::uint32_t>>(m, std::vector<std::uint32_t>(m, 0)));
  for (ClientId j = 0; j < m; ++j) {
    for (std::size_t s = 1; s <= horizon; ++s) {
      std::set<ClientId> informed{j};
      for (std::size_t u = s; u <= horizon; ++u) {
        std::set<ClientId> next = informed;
        for (const auto& [a, b] : rounds[u - 1].edges()) {
          if (informed.count(a)) next.insert(b);
          if (informed.count(b)) next.insert(a);
        }
        informed = std::move(next);
        for (ClientId c : informed) {
          auto& slot = out[u][c][j];
          if (s > slot) slot = static_cast<std::uint32_t>(s);
        }
      }
    }
  }
  return out;
}

/// Pseudo-regret recomputed from an action log (rounds x clients) with gaps
/// derived directly from the means matrix.
inline double replay_regret(const std::vector<std::uint32_t>& actions, const std::vector<double>& means,
                            std::size_t clients, std::size_t arms) {
  std::vector<double> mu(arms, 0.0);
  for (std::size_t k = 0; k < arms; ++k) {
    double sum = 0.0;
    for (std::size_t m = 0; m < clients; ++m) sum += means[m * arms + k];
    mu[k] = sum / static_cast<double>(clients);
  }
  double best = mu[0];
  for (double v : mu) best = v > best ? v : best;
  double worst_gap = 0.0;
  for (double v : mu) worst_gap = best - v > worst_gap ? best - v : worst_gap;
  double regret = 0.0;
  const std::size_t rounds = actions.size() / clients;
  for (std::size_t t = 0; t < rounds; ++t) {
    double round_gap = 0.0;
    for (std::size_t m = 0; m < clients; ++m) {
      const std::uint32_t a = actions[t * clients + m];
      round_gap += a == banditmesh::kNoPull ? worst_gap : best - mu[a];
    }
    regret += round_gap / static_cast<double>(clients);
  }
  return regret;
}

}  // namespace oracle
