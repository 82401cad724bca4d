#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "banditmesh/error.hpp"
#include "banditmesh/harness.hpp"
#include "banditmesh/homogeneous.hpp"
#include "oracles.hpp"

using namespace banditmesh;

namespace {

ProblemSpec make_spec(std::size_t m, std::size_t horizon, const std::vector<double>& row, RewardKind kind,
                      double c_h = 1.0, double alpha = 1.5) {
  std::vector<double> means;
  for (std::size_t i = 0; i < m; ++i) means.insert(means.end(), row.begin(), row.end());
  return ProblemSpec{WeightLaw{alpha, c_h}, m, horizon, 0.1, EdgeSampler::skip,
                     RewardModel(kind, m, row.size(), means, 1.0, 1.0)};
}

GraphSnapshot complete(std::size_t m, std::size_t round) {
  std::vector<std::pair<ClientId, ClientId>> e;
  for (ClientId i = 0; i < m; ++i) {
    for (ClientId j = i + 1; j < m; ++j) e.emplace_back(i, j);
  }
  return GraphSnapshot(round, m, e);
}

}  // namespace

TEST_CASE("hub identification basics") {
  auto single = start_hub_identification(GraphSnapshot(1, 1, {}));
  CHECK(single[0].elected() == 0);

  auto g = GraphSnapshot(1, 4, {{0, 2}, {1, 2}, {2, 3}, {0, 1}});
  auto states = start_hub_identification(g);
  CHECK(states[1].known_degree == std::vector<std::int64_t>{-1, 2, -1, -1});
  CHECK(states[1].elected() == 1);
  hub_identification_round(states, complete(4, 1));
  for (const auto& s : states) CHECK(s.elected() == 2);

  // Ties go to the smallest index.
  auto tie = start_hub_identification(GraphSnapshot(1, 4, {{0, 1}, {2, 3}}));
  hub_identification_round(tie, complete(4, 1));
  for (const auto& s : tie) CHECK(s.elected() == 0);
}

TEST_CASE("degree flooding matches the brute-force flood") {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream rng(seed, {1, Purpose::test});
    const std::size_t m = 2 + rng.uniform_index(7);
    std::vector<GraphSnapshot> rounds;
    for (std::size_t t = 1; t <= 12; ++t) {
      std::vector<std::pair<ClientId, ClientId>> e;
      for (ClientId i = 0; i < m; ++i) {
        for (ClientId j = i + 1; j < m; ++j) {
          if (rng.uniform() < 0.2) e.emplace_back(i, j);
        }
      }
      rounds.emplace_back(t, m, e);
    }
    const auto want = oracle::flood_stamps(rounds, m);
    auto states = start_hub_identification(rounds[0]);
    for (std::size_t t = 1; t <= rounds.size(); ++t) {
      hub_identification_round(states, rounds[t - 1]);
      for (ClientId c = 0; c < m; ++c) {
        for (ClientId j = 0; j < m; ++j) {
          const bool known = states[c].known_degree[j] >= 0;
          if (known != (want[t][c][j] >= 1)) ++mismatches;
          if (known && states[c].known_degree[j] != static_cast<std::int64_t>(degree(rounds[0], j))) ++mismatches;
        }
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("identification agrees on the true hub at M = 200") {
  const WeightLaw law{1.5, 1.0};
  const std::size_t m = 200;
  const double kappa = estimate_kappa(law, m, 100, 10000, 3).kappa;
  const double lm = std::log(static_cast<double>(m));
  const auto rounds = static_cast<std::size_t>(std::ceil(kappa * 3.0 * lm * lm));
  int agree = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    RngStream wr(17, {rep, Purpose::weights});
    GraphProcess proc(law, m, wr);
    RngStream gr(17, {rep, Purpose::graph});
    const GraphSnapshot first = sample_graph(proc, 1, gr, EdgeSampler::skip);
    auto states = start_hub_identification(first);
    hub_identification_round(states, first);
    for (std::size_t t = 2; t <= rounds; ++t) hub_identification_round(states, sample_graph(proc, t, gr, EdgeSampler::skip));
    const ClientId hub = max_degree_client(first);
    agree += std::all_of(states.begin(), states.end(), [&](const HubIdState& s) { return s.elected() == hub; });
  }
  CHECK(agree >= 95);
}

TEST_CASE("homog_select_arm") {
  const UcbParams p = UcbParams::from_theory(1.0, 1.0);
  HomogClientState s;
  s.mu_hat = {0.0, 0.0, 0.0};
  s.big_n = {0, 0, 0};
  CHECK(homog_select_arm(s, 5, p) == 0);
  s.mu_hat = {0.9, 0.1};
  s.big_n = {20, 20};
  CHECK(homog_select_arm(s, 5, p) == 0);
  s.mu_hat = {0.5, 0.6};
  s.big_n = {1000, 4};
  CHECK(homog_select_arm(s, 100, p) == 1);
}

TEST_CASE("single client reduces to own median-of-means UCB") {
  const auto spec = make_spec(1, 300, {0.5, 0.3, 0.2}, RewardKind::pareto_shifted);
  const auto params = derive_params(spec, 1.0);
  CHECK(params.id_rounds == 0);
  const RewardSource source(spec.rewards, 4, 0);
  std::vector<std::vector<double>> rewards(3);
  auto observer = [&](std::size_t, const HomogContext& ctx) {
    const auto& s = ctx.states[0];
    CHECK(s.center);
    for (std::size_t a = 0; a < 3; ++a) {
      CHECK(s.big_n[a] == s.n[a]);
      if (s.n[a] == 0) continue;
      std::vector<double> own;
      for (std::uint64_t i = 0; i < s.n[a]; ++i) own.push_back(source.draw(0, a, i));
      CHECK(s.mu_hat[a] == doctest::Approx(median_of_means(own, {params.batches})).epsilon(1e-12));
    }
  };
  run_homogeneous(spec, params, 4, 0, {}, observer);
}

TEST_CASE("complete graph: the center pools every pull exactly") {
  const auto spec = make_spec(3, 60, {0.7, 0.4}, RewardKind::bernoulli, 1000.0);
  auto params = derive_params(spec, 0.05);
  params.id_rounds = 2;
  std::vector<std::uint64_t> totals(2, 0);
  auto observer = [&](std::size_t t, const HomogContext& ctx) {
    if (t <= params.id_rounds) return;
    REQUIRE(ctx.centers.size() == 1);
    std::fill(totals.begin(), totals.end(), 0);
    for (const auto& s : ctx.states) {
      for (std::size_t a = 0; a < 2; ++a) totals[a] += s.n[a];
    }
    const auto& c = ctx.states[ctx.centers[0]];
    for (std::size_t a = 0; a < 2; ++a) {
      CHECK(c.big_n[a] == totals[a]);
      CHECK(c.hub_log[a].size() == totals[a]);
    }
  };
  const auto r = run_homogeneous(spec, params, 9, 0, {}, observer);
  CHECK(r.summary.events.a3 == true);
}

TEST_CASE("hub log equals the tally of pulls whose information reached the center") {
  std::size_t mismatches = 0;
  std::size_t checks = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t m = 3 + seed % 4;
    const auto spec = make_spec(m, 30, {0.6, 0.5, 0.2}, RewardKind::gaussian, 1.5);
    auto params = derive_params(spec, 0.2);
    params.id_rounds = 3 + seed % 5;
    RunOptions rec;
    rec.record_actions = true;
    rec.record_edges = true;
    const auto first = run_homogeneous(spec, params, seed, 0, rec);
    const auto want = oracle::flood_stamps(first.edges, m);
    auto observer = [&](std::size_t t, const HomogContext& ctx) {
      if (t <= params.id_rounds) return;
      for (ClientId c : ctx.centers) {
        std::vector<std::uint64_t> tally(3, 0);
        for (ClientId j = 0; j < m; ++j) {
          for (std::size_t s = params.id_rounds + 1; s <= want[t][c][j]; ++s) ++tally[first.actions[(s - 1) * m + j]];
        }
        for (std::size_t a = 0; a < 3; ++a) {
          ++checks;
          if (ctx.states[c].hub_log[a].size() != tally[a] || ctx.states[c].big_n[a] != tally[a]) ++mismatches;
        }
      }
    };
    run_homogeneous(spec, params, seed, 0, {}, observer);
  }
  CHECK(checks > 0);
  CHECK(mismatches == 0);
}

TEST_CASE("non-center estimates are earlier center estimates") {
  // The hub log only grows, so the estimate a center served at any earlier
  // stamp is the median of means of a prefix of its current log.
  const auto spec = make_spec(40, 400, {0.6, 0.5, 0.4}, RewardKind::pareto_shifted);
  const auto params = derive_params(spec, 0.3);
  std::size_t adopted = 0;
  auto observer = [&](std::size_t t, const HomogContext& ctx) {
    if (t % 7 != 0) return;
    for (const auto& s : ctx.states) {
      if (s.center || s.hub_stamp == 0) continue;
      ++adopted;
      CHECK(s.hub_stamp <= t);
      const auto& c = ctx.states[s.elected];
      REQUIRE(c.center);
      for (std::size_t a = 0; a < 3; ++a) {
        REQUIRE(s.big_n[a] <= c.hub_log[a].size());
        if (s.big_n[a] == 0) continue;
        std::vector<double> prefix;
        for (std::size_t i = 0; i < s.big_n[a]; ++i) prefix.push_back(c.hub_log[a].value(i));
        CHECK(s.mu_hat[a] == doctest::Approx(median_of_means(prefix, {params.batches})).epsilon(1e-12));
      }
    }
  };
  run_homogeneous(spec, params, 21, 0, {}, observer);
  CHECK(adopted > 0);
}

TEST_CASE("gate that never opens keeps non-centers on their own estimates") {
  const auto spec = make_spec(20, 300, {0.6, 0.3}, RewardKind::pareto_shifted);
  auto params = derive_params(spec, 0.3);
  params.options.gate = true;
  params.gate_threshold = 21;
  auto observer = [&](std::size_t t, const HomogContext& ctx) {
    if (t == spec.horizon) {
      for (const auto& s : ctx.states) {
        if (!s.center) CHECK(s.hub_stamp == 0);
      }
    }
  };
  const auto r = run_homogeneous(spec, params, 2, 0, {}, observer);
  CHECK(r.summary.diagnostics.at("gated_rounds") == spec.horizon - params.id_rounds);
}

TEST_CASE("regret accounting and pull conservation") {
  SUBCASE("single arm and equal means give zero regret") {
    CHECK(run_homogeneous(make_spec(10, 200, {0.5}, RewardKind::gaussian), derive_params(make_spec(10, 200, {0.5}, RewardKind::gaussian), 0.3), 1, 0).summary.regret == 0.0);
    const auto flat = make_spec(10, 200, {0.5, 0.5, 0.5}, RewardKind::gaussian);
    CHECK(run_homogeneous(flat, derive_params(flat, 0.3), 1, 0).summary.regret == 0.0);
  }
  SUBCASE("replay, monotone trace and conservation") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const std::size_t m = 2 + seed % 3;
      const auto spec = make_spec(m, 50, {0.2, 0.5, 0.4}, RewardKind::bernoulli);
      auto params = derive_params(spec, 0.1);
      RunOptions o;
      o.record_actions = true;
      const auto r = run_homogeneous(spec, params, seed, 0, o);
      CHECK(r.summary.regret == oracle::replay_regret(r.actions, spec.rewards.means(), m, 3));
      CHECK(r.summary.regret <= 50 * 0.3 + 1e-12);
      for (std::size_t i = 1; i < r.trace.rows.size(); ++i) CHECK(r.trace.rows[i].regret >= r.trace.rows[i - 1].regret);
      for (ClientId c = 0; c < m; ++c) {
        std::uint64_t pulls = 0;
        for (std::size_t a = 0; a < 3; ++a) pulls += r.client_pulls[c * 3 + a];
        CHECK(pulls == 50 - params.id_rounds);
      }
    }
  }
}

TEST_CASE("configuration errors") {
  const auto hetero = ProblemSpec{WeightLaw{}, 2, 10, 0.1, EdgeSampler::skip,
                                  RewardModel(RewardKind::gaussian, 2, 2, {0.1, 0.2, 0.2, 0.1}, 1.0, 1.0)};
  CHECK_THROWS_AS(run_homogeneous(hetero, derive_params(hetero, 0.3), 1, 0), ConfigError);
  const auto spec = make_spec(3, 10, {0.1, 0.2}, RewardKind::gaussian);
  auto params = derive_params(spec, 0.3);
  params.id_rounds = 0;
  CHECK_THROWS_AS(run_homogeneous(spec, params, 1, 0), ConfigError);
}
