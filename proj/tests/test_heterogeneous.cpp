#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "banditmesh/error.hpp"
#include "banditmesh/heterogeneous.hpp"

using namespace banditmesh;

namespace {

ProblemSpec make_spec(std::size_t m, std::size_t horizon, const std::vector<double>& means, std::size_t arms,
                      RewardKind kind = RewardKind::pareto_shifted) {
  return ProblemSpec{WeightLaw{1.5, 1.0}, m, horizon, 0.1, EdgeSampler::skip,
                     RewardModel(kind, m, arms, means, 1.0, 1.0)};
}

std::vector<double> repeat_row(std::size_t m, const std::vector<double>& row) {
  std::vector<double> out;
  for (std::size_t i = 0; i < m; ++i) out.insert(out.end(), row.begin(), row.end());
  return out;
}

GraphSnapshot complete(std::size_t m, std::size_t round) {
  std::vector<std::pair<ClientId, ClientId>> e;
  for (ClientId i = 0; i < m; ++i) {
    for (ClientId j = i + 1; j < m; ++j) e.emplace_back(i, j);
  }
  return GraphSnapshot(round, m, e);
}

AlgoParams small_params(std::size_t burn_in) {
  AlgoParams p;
  p.batches = 3;
  p.ucb = UcbParams::from_theory(1.0, 1.0);
  p.burn_in = burn_in;
  p.sync_slack = 4;
  return p;
}

// Round-robin burn-in where client m always receives value[m][arm].
void deterministic_burn_in(HeterogContext& ctx, const std::vector<std::vector<double>>& value,
                           const std::vector<GraphSnapshot>& rounds) {
  const std::size_t m = ctx.clients;
  for (std::size_t t = 1; t <= rounds.size(); ++t) {
    std::vector<std::uint32_t> arms(m, static_cast<std::uint32_t>(t % ctx.arms));
    std::vector<double> rewards(m);
    for (ClientId c = 0; c < m; ++c) rewards[c] = value[c][arms[c]];
    burn_in_round(ctx, rounds[t - 1], t, arms, rewards);
  }
  finish_burn_in(ctx);
}

}  // namespace

TEST_CASE("mixing weights") {
  const auto one = rule2_weights(1, 1.0);
  CHECK(one.n_const == doctest::Approx(13.0));
  CHECK(one.p_prime == doctest::Approx((13.0 - std::sqrt(2.0)) / (13.0 * std::sqrt(2.0))));
  CHECK(one.p_prime == doctest::Approx(0.6303).epsilon(1e-3));
  CHECK(one.d == doctest::Approx(1.0 - one.p_prime));
  CHECK_FALSE(one.clamped());

  const auto hundred = rule2_weights(100, 1.0);
  CHECK(hundred.clamped());
  CHECK(hundred.p_prime == 0.0);
  CHECK(hundred.d == doctest::Approx(0.01));
  CHECK(rule2_weights(10, 1.0).clamped());
  CHECK_FALSE(rule2_weights(9, 1.0).clamped());
  CHECK(rule2_weights(3, 0.5).n_const == doctest::Approx(145.0));

  for (std::size_t m : {1, 2, 5, 9, 10, 50, 1000}) {
    for (double eps : {0.25, 0.5, 1.0}) {
      const auto w = rule2_weights(m, eps);
      CHECK(std::abs(m * w.p_prime + m * w.d - 1.0) < 1e-12);
      CHECK(w.p_prime >= 0.0);
      CHECK(w.d >= 0.0);
    }
  }
  CHECK_THROWS_AS(rule2_weights(0, 1.0), UsageError);
  CHECK_THROWS_AS(rule2_weights(3, 1.5), UsageError);
}

TEST_CASE("burn-in on a complete graph averages the local means") {
  const std::vector<std::vector<double>> value{{1.0, 4.0}, {2.0, 6.0}, {6.0, 2.0}};
  HeterogContext ctx(3, 2, small_params(4));
  std::vector<GraphSnapshot> rounds;
  for (std::size_t t = 1; t <= 4; ++t) rounds.push_back(complete(3, t));
  deterministic_burn_in(ctx, value, rounds);
  for (const auto& s : ctx.states) {
    CHECK(s.n == std::vector<std::uint64_t>{2, 2});
    CHECK(s.mu_tilde[0] == doctest::Approx(3.0));
    CHECK(s.mu_tilde[1] == doctest::Approx(4.0));
    CHECK(s.mu_bar == value[s.id]);
  }
}

TEST_CASE("burn-in hand trace on a partial graph") {
  // Rounds pull arms 1, 0, 1, 0. Clients 0 and 1 meet only in round 1, when
  // arm 0 has not been pulled yet; client 2 never meets anyone.
  const std::vector<std::vector<double>> value{{1.0, 4.0}, {2.0, 6.0}, {6.0, 2.0}};
  HeterogContext ctx(3, 2, small_params(4));
  std::vector<GraphSnapshot> rounds{GraphSnapshot(1, 3, {{0, 1}}), GraphSnapshot(2, 3, {}), GraphSnapshot(3, 3, {}),
                                    GraphSnapshot(4, 3, {})};
  deterministic_burn_in(ctx, value, rounds);
  const double third = 1.0 / 3.0;
  CHECK(ctx.states[0].last_contact == std::vector<Stamp>{0, 1, 0});
  CHECK(ctx.states[0].mu_tilde[0] == doctest::Approx(third * (1.0 + 0.0)));
  CHECK(ctx.states[0].mu_tilde[1] == doctest::Approx(third * (4.0 + 6.0)));
  CHECK(ctx.states[1].mu_tilde[0] == doctest::Approx(third * (2.0 + 0.0)));
  CHECK(ctx.states[1].mu_tilde[1] == doctest::Approx(third * (6.0 + 4.0)));
  CHECK(ctx.states[2].mu_tilde[0] == doctest::Approx(third * 6.0));
  CHECK(ctx.states[2].mu_tilde[1] == doctest::Approx(third * 2.0));
  CHECK_THROWS_AS(burn_in_round(ctx, GraphSnapshot(9, 3, {}), 9, std::vector<std::uint32_t>{0, 0, 0},
                                std::vector<double>{0, 0, 0}),
                  SequencingError);
}

TEST_CASE("update on a complete graph with only local weights") {
  const std::vector<std::vector<double>> value{{1.0}, {2.0}, {3.0}};
  HeterogContext ctx(3, 1, small_params(1));
  deterministic_burn_in(ctx, value, {complete(3, 1)});
  ctx.weights.p_prime = 0.0;
  ctx.weights.d = 1.0 / 3.0;
  rule2_update(ctx, complete(3, 2), 2, std::vector<std::uint32_t>{0, 0, 0}, std::vector<double>{1.0, 2.0, 3.0});
  for (const auto& s : ctx.states) CHECK(s.mu_tilde[0] == doctest::Approx(2.0));
  CHECK(ctx.coverage_gaps == 0);
}

TEST_CASE("identical estimates are a fixed point") {
  for (std::size_t m : {1, 3, 12}) {
    HeterogContext ctx(m, 2, small_params(2));
    std::vector<std::vector<double>> value(m, {0.25, 0.25});
    std::vector<GraphSnapshot> rounds{complete(m, 1), complete(m, 2)};
    deterministic_burn_in(ctx, value, rounds);
    for (auto& s : ctx.states) s.mu_tilde = {0.25, 0.25};
    for (std::size_t t = 3; t <= 6; ++t) {
      rule2_update(ctx, complete(m, t), t, std::vector<std::uint32_t>(m, t % 2), std::vector<double>(m, 0.25));
      for (const auto& s : ctx.states) {
        CHECK(s.mu_tilde[0] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(s.mu_tilde[1] == doctest::Approx(0.25).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("missing origins are counted as coverage gaps") {
  HeterogContext ctx(3, 1, small_params(1));
  deterministic_burn_in(ctx, {{1.0}, {2.0}, {3.0}}, {GraphSnapshot(1, 3, {{0, 1}})});
  rule2_update(ctx, GraphSnapshot(2, 3, {}), 2, std::vector<std::uint32_t>{0, 0, 0}, std::vector<double>{1, 2, 3});
  // 0 and 1 know each other; 2 knows nobody and nobody knows 2.
  CHECK(ctx.coverage_gaps == 4);
}

TEST_CASE("arm selection") {
  HeterogClientState s;
  s.n = {5, 5, 5};
  s.big_n = {5, 5, 5};
  s.mu_tilde = {0.2, 0.9, 0.1};
  const auto p = UcbParams::from_theory(1.0, 1.0);
  CHECK(heterog_select_arm(s, 7, p, 4) == std::pair<std::size_t, Mode>{1, Mode::ucb});
  s.mu_tilde = {0.2, 0.2, 0.9};
  CHECK(heterog_select_arm(s, 7, p, 4).first == 2);
  s.big_n = {5, 5, 9};
  CHECK(heterog_select_arm(s, 7, p, 4) == std::pair<std::size_t, Mode>{1, Mode::resync});
  CHECK(heterog_select_arm(s, 8, p, 4) == std::pair<std::size_t, Mode>{2, Mode::resync});
  s.big_n = {5, 5, 8};
  CHECK(heterog_select_arm(s, 7, p, 4).second == Mode::ucb);
}

TEST_CASE("single arm accrues no regret") {
  const auto spec = make_spec(8, 300, std::vector<double>(8, 0.3), 1);
  const auto result = run_heterogeneous(spec, derive_params(spec, 0.3), 1, 0);
  CHECK(result.summary.regret == 0.0);
}

TEST_CASE("homogeneous means: converges to the common best arm") {
  const std::size_t m = 10;
  const auto spec = make_spec(m, 6000, repeat_row(m, {0.7, 0.4, 0.2}), 3);
  const auto params = derive_params(spec, 0.3);
  for (std::uint64_t rep = 0; rep < 3; ++rep) {
    const auto result = run_heterogeneous(spec, params, 5, rep);
    std::uint64_t best = 0;
    std::uint64_t total = 0;
    for (ClientId c = 0; c < m; ++c) {
      best += result.tail_pulls[c * 3];
      for (std::size_t a = 0; a < 3; ++a) total += result.tail_pulls[c * 3 + a];
    }
    CHECK(static_cast<double>(best) / static_cast<double>(total) >= 0.9);
  }
}

TEST_CASE("count invariants and resync liveness") {
  const std::size_t m = 12;
  const std::size_t k = 3;
  const std::vector<double> row_a{0.6, 0.2, 0.4};
  const std::vector<double> row_b{0.1, 0.5, 0.3};
  std::vector<double> means;
  for (std::size_t c = 0; c < m; ++c) {
    const auto& row = c % 3 == 0 ? row_b : row_a;
    means.insert(means.end(), row.begin(), row.end());
  }
  const auto spec = make_spec(m, 3000, means, k);
  const auto params = derive_params(spec, 0.3);
  std::vector<HeterogClientState> previous;
  std::vector<std::size_t> streak(m, 0);
  std::size_t longest = 0;
  std::size_t violations = 0;
  auto observer = [&](std::size_t t, const HeterogContext& ctx) {
    for (ClientId c = 0; c < m; ++c) {
      const auto& s = ctx.states[c];
      for (std::size_t i = 0; i < k; ++i) {
        if (s.big_n[i] < s.n[i]) ++violations;
        if (!previous.empty() && (s.n[i] < previous[c].n[i] || s.big_n[i] < previous[c].big_n[i])) ++violations;
      }
      std::uint64_t pulls = 0;
      for (auto x : s.n) pulls += x;
      if (pulls != t) ++violations;
      streak[c] = s.resync ? streak[c] + 1 : 0;
      longest = std::max(longest, streak[c]);
    }
    previous = ctx.states;
  };
  const auto result = run_heterogeneous(spec, params, 9, 0, {}, observer);
  CHECK(violations == 0);
  CHECK(longest <= k * params.sync_slack);
  CHECK(result.summary.diagnostics.at("p_prime_clamped") == 1.0);
  CHECK(result.trace.rows.size() == 3000);
  CHECK(result.trace.rows[params.burn_in - 1].mode == Mode::burnin);
}

TEST_CASE("burn-in shorter than the arm count is rejected") {
  const auto spec = make_spec(2, 10, std::vector<double>(6, 0.1), 3);
  auto params = derive_params(spec, 0.3);
  params.burn_in = 2;
  CHECK_THROWS_AS(run_heterogeneous(spec, params, 1, 0), ConfigError);
}
