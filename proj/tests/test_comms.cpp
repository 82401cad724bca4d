#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "banditmesh/comms.hpp"
#include "banditmesh/error.hpp"
#include "oracles.hpp"

using namespace banditmesh;

namespace {

SummaryPtr summary(ClientId origin, Stamp stamp, double value) {
  auto s = std::make_shared<ClientSummary>();
  s->origin = origin;
  s->stamp = stamp;
  s->local_est = {value};
  return s;
}

GraphSnapshot complete(std::size_t m, std::size_t round) {
  std::vector<std::pair<ClientId, ClientId>> e;
  for (ClientId i = 0; i < m; ++i) {
    for (ClientId j = i + 1; j < m; ++j) e.emplace_back(i, j);
  }
  return GraphSnapshot(round, m, e);
}

// One synchronous round of the view-level API.
std::vector<FiltrationView> view_round(const std::vector<FiltrationView>& views, const GraphSnapshot& g, Stamp t) {
  std::vector<Message> out;
  for (const auto& v : views) out.push_back(make_message(v, t));
  std::vector<FiltrationView> next;
  for (ClientId m = 0; m < views.size(); ++m) {
    std::vector<Message> in;
    for (ClientId b : g.neighbors(m)) in.push_back(out[b]);
    next.push_back(merge(views[m], in));
  }
  return next;
}

}  // namespace

TEST_CASE("message contents") {
  FiltrationView v(0, 4);
  v.record_own(1, summary(0, 1, 0.5));
  auto msg = make_message(v, 1);
  REQUIRE(msg.entries.size() == 1);
  CHECK(msg.entries[0].origin == 0);
  v.offer({2, 1, summary(2, 1, 2.0)});
  v.offer({3, 1, nullptr});
  v.record_own(2);
  msg = make_message(v, 2);
  CHECK(msg.entries.size() == 3);
  CHECK(v.known_origins() == std::vector<ClientId>{0, 2, 3});
  CHECK_THROWS_AS(make_message(v, 3), SequencingError);
  CHECK_THROWS_AS(v.record_own(2), SequencingError);
  CHECK_THROWS_AS(v.record_own(5, summary(1, 5, 0.0)), UsageError);
}

TEST_CASE("merge semantics") {
  FiltrationView v(0, 3);
  v.offer({1, 4, summary(1, 4, 1.0)});
  const FiltrationView same = merge(v, {});
  CHECK(same.stamp(1) == 4);
  Message old{2, {{1, 2, summary(1, 2, 9.0)}}};
  const FiltrationView kept = merge(v, std::vector<Message>{old});
  CHECK(kept.stamp(1) == 4);
  CHECK(kept.summary(1)->local_est[0] == 1.0);
  Message newer{2, {{1, 6, summary(1, 6, 3.0)}}};
  const FiltrationView took = merge(v, std::vector<Message>{newer});
  CHECK(took.stamp(1) == 6);
  CHECK(took.summary(1)->local_est[0] == 3.0);
  Message equal{2, {{1, 4, summary(1, 4, 1.0)}}};
  CHECK_NOTHROW(merge(v, std::vector<Message>{equal}));
  Message conflict{2, {{1, 4, summary(1, 4, 7.0)}}};
  CHECK_THROWS_AS(merge(v, std::vector<Message>{conflict}), IntegrityError);
}

TEST_CASE("chain 0-1-2 delivers with delay two") {
  std::vector<FiltrationView> views;
  for (ClientId m = 0; m < 3; ++m) views.emplace_back(m, 3);
  GossipNetwork net(3, {0, 1, 2});
  for (Stamp t = 1; t <= 2; ++t) {
    GraphSnapshot g(t, 3, {{0, 1}, {1, 2}});
    for (ClientId m = 0; m < 3; ++m) {
      views[m].record_own(t, summary(m, t, m + 0.1 * t));
      net.publish(m, t, summary(m, t, m + 0.1 * t));
    }
    views = view_round(views, g, t);
    net.exchange(g);
  }
  CHECK(views[2].stamp(0) == 1);
  CHECK(net.stamp(2, 0) == 1);
  CHECK(net.summary(2, 0)->local_est[0] == doctest::Approx(0.1));
  CHECK(views[2].stamp(1) == 2);
  CHECK(staleness(views[2], 2) == 1);
  CHECK(net.staleness(2, 2) == 1);
}

TEST_CASE("full mesh and isolation") {
  GossipNetwork net(3);
  for (Stamp t = 1; t <= 3; ++t) {
    for (ClientId m = 0; m < 3; ++m) net.publish(m, t);
    net.exchange(complete(3, t));
    for (ClientId m = 0; m < 3; ++m) {
      for (ClientId j = 0; j < 3; ++j) CHECK(net.stamp(m, j) == t);
    }
    CHECK(net.max_staleness(t) == 0);
    CHECK(net.max_staleness(t + 1) <= 1);
  }
  for (Stamp t = 4; t <= 10; ++t) {
    for (ClientId m = 0; m < 3; ++m) net.publish(m, t);
    net.exchange(GraphSnapshot(t, 3, {{0, 1}}));
  }
  CHECK(net.staleness(2, 10) >= 7);
  CHECK(net.summary(0, 1) == nullptr);
}

TEST_CASE("muted clients exchange nothing") {
  GossipNetwork net(3);
  for (ClientId m = 0; m < 3; ++m) net.publish(m, 1);
  std::vector<char> muted{1, 0, 0};
  net.exchange(complete(3, 1), muted);
  CHECK(net.stamp(0, 1) == 0);
  CHECK(net.stamp(1, 0) == 0);
  CHECK(net.stamp(1, 2) == 1);
}

TEST_CASE("trace sink sees refreshed entries only") {
  GossipNetwork net(2);
  std::vector<std::tuple<std::size_t, ClientId, ClientId, ClientId, Stamp>> log;
  TraceSink sink = [&](std::size_t t, ClientId from, ClientId to, ClientId origin, Stamp s) {
    log.emplace_back(t, from, to, origin, s);
  };
  for (Stamp t = 1; t <= 2; ++t) {
    for (ClientId m = 0; m < 2; ++m) net.publish(m, t);
    net.exchange(complete(2, t), {}, &sink);
  }
  // Each round each client learns the other's fresh stamp; its own stamp never refreshes.
  CHECK(log.size() == 4);
  CHECK(log[0] == std::tuple<std::size_t, ClientId, ClientId, ClientId, Stamp>{1, 1, 0, 1, 1});
}

TEST_CASE("gossip and views agree with brute-force flooding") {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed, {0, Purpose::test});
    const std::size_t m = 2 + rng.uniform_index(7);
    const std::size_t horizon = 1 + rng.uniform_index(20);
    const double p = 0.05 + 0.4 * rng.uniform();
    std::vector<GraphSnapshot> rounds;
    for (std::size_t t = 1; t <= horizon; ++t) {
      std::vector<std::pair<ClientId, ClientId>> e;
      for (ClientId i = 0; i < m; ++i) {
        for (ClientId j = i + 1; j < m; ++j) {
          if (rng.uniform() < p) e.emplace_back(i, j);
        }
      }
      rounds.emplace_back(t, m, e);
    }
    const auto want = oracle::flood_stamps(rounds, m);

    GossipNetwork net = GossipNetwork::with_all_content(m);
    std::vector<FiltrationView> views;
    for (ClientId c = 0; c < m; ++c) views.emplace_back(c, m);
    for (std::size_t t = 1; t <= horizon; ++t) {
      const auto st = static_cast<Stamp>(t);
      for (ClientId c = 0; c < m; ++c) {
        net.publish(c, st, summary(c, st, c * 100.0 + t));
        views[c].record_own(st, summary(c, st, c * 100.0 + t));
      }
      net.exchange(rounds[t - 1]);
      views = view_round(views, rounds[t - 1], st);
      for (ClientId c = 0; c < m; ++c) {
        for (ClientId j = 0; j < m; ++j) {
          const Stamp s = want[t][c][j];
          if (net.stamp(c, j) != s || views[c].stamp(j) != s) ++mismatches;
          if (s > 0 && (net.summary(c, j)->stamp != s || views[c].summary(j)->stamp != s)) ++mismatches;
        }
        if (net.view(c).known_origins() != views[c].known_origins()) ++mismatches;
      }
    }
  }
  CHECK(mismatches == 0);
}
