#include "banditmesh/heterogeneous.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "banditmesh/error.hpp"

namespace banditmesh {

Rule2Weights rule2_weights(std::size_t m, double epsilon) {
  if (m == 0) throw UsageError("rule2_weights: client count must be >= 1");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw UsageError("rule2_weights: epsilon must lie in (0, 1]");
  Rule2Weights w;
  const double mm = static_cast<double>(m);
  const double root = std::pow(2.0, 1.0 / (1.0 + epsilon));
  w.n_const = std::pow(12.0, 1.0 / epsilon) + 1.0;
  w.raw_p_prime = (w.n_const - mm * root) / (mm * w.n_const * root);
  w.p_prime = std::max(0.0, w.raw_p_prime);
  w.d = (1.0 - mm * w.p_prime) / mm;
  return w;
}

std::pair<std::size_t, Mode> heterog_select_arm(const HeterogClientState& state, std::size_t t, const UcbParams& p,
                                                std::size_t sync_slack) {
  const std::size_t k = state.n.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (state.n[i] + sync_slack <= state.big_n[i]) return {t % k, Mode::resync};
  }
  return {argmax_ucb(state.mu_tilde, state.big_n, t, p), Mode::ucb};
}

HeterogContext::HeterogContext(std::size_t clients_in, std::size_t arms_in, const AlgoParams& params_in)
    : clients(clients_in),
      arms(arms_in),
      params(params_in),
      network(GossipNetwork::with_all_content(clients_in)),
      adjacency(clients_in) {
  if (clients == 0 || arms == 0) throw UsageError("heterogeneous run: clients and arms must be >= 1");
  weights = rule2_weights(clients, params.ucb.epsilon);
  states.resize(clients);
  for (ClientId m = 0; m < clients; ++m) {
    auto& s = states[m];
    s.id = m;
    s.n.assign(arms, 0);
    s.big_n.assign(arms, 0);
    s.mu_bar.assign(arms, 0.0);
    s.mu_tilde.assign(arms, 0.0);
    s.log.assign(arms, RewardLog(params.batches, params.options.mom_mode));
    s.burn_sum.assign(arms, 0.0);
    s.last_contact.assign(clients, 0);
    s.contact_mu_bar.assign(clients * arms, 0.0);
  }
}

namespace {

void check_round(const HeterogContext& ctx, std::span<const std::uint32_t> arms, std::span<const double> rewards) {
  if (arms.size() != ctx.clients || rewards.size() != ctx.clients) {
    throw UsageError("heterogeneous update: one arm and one reward per client required");
  }
  for (std::uint32_t a : arms) {
    if (a >= ctx.arms) throw UsageError("heterogeneous update: arm out of range");
  }
}

void publish_all(HeterogContext& ctx, std::size_t t, bool burn) {
  for (ClientId m = 0; m < ctx.clients; ++m) {
    const auto& s = ctx.states[m];
    auto summary = std::make_shared<ClientSummary>();
    summary->origin = m;
    summary->stamp = static_cast<Stamp>(t);
    summary->local_counts = s.n;
    summary->local_est = s.mu_bar;
    summary->global_est = burn ? s.mu_bar : s.mu_tilde;
    summary->agg_counts = s.big_n;
    ctx.network.publish(m, static_cast<Stamp>(t), std::move(summary));
  }
}

}  // namespace

void burn_in_round(HeterogContext& ctx, const GraphSnapshot& snapshot, std::size_t t,
                   std::span<const std::uint32_t> arms, std::span<const double> rewards) {
  check_round(ctx, arms, rewards);
  if (ctx.adjacency.rounds() + 1 != t) throw SequencingError("burn-in rounds must be consecutive from 1");
  for (ClientId m = 0; m < ctx.clients; ++m) {
    auto& s = ctx.states[m];
    const std::uint32_t a = arms[m];
    ++s.n[a];
    s.burn_sum[a] += rewards[m];
    s.mu_bar[a] = s.burn_sum[a] / static_cast<double>(s.n[a]);
    s.log[a].append(rewards[m]);
    s.big_n[a] = std::max(s.big_n[a], s.n[a]);
  }
  publish_all(ctx, t, true);
  ctx.network.exchange(snapshot, {}, ctx.message_trace);
  ctx.adjacency.update(snapshot);
  const std::size_t k = ctx.arms;
  for (const auto& [a, b] : snapshot.edges()) {
    for (auto [me, other] : {std::pair{a, b}, std::pair{b, a}}) {
      auto& s = ctx.states[me];
      s.last_contact[other] = static_cast<Stamp>(t);
      std::copy(ctx.states[other].mu_bar.begin(), ctx.states[other].mu_bar.end(),
                s.contact_mu_bar.begin() + static_cast<std::ptrdiff_t>(other * k));
    }
  }
}

void finish_burn_in(HeterogContext& ctx) {
  const std::size_t k = ctx.arms;
  const double share = 1.0 / static_cast<double>(ctx.clients);
  for (ClientId m = 0; m < ctx.clients; ++m) {
    auto& s = ctx.states[m];
    const AdjacencyRow row = ctx.adjacency.row(m);
    std::vector<double> tilde(k, 0.0);
    for (ClientId j = 0; j < ctx.clients; ++j) {
      if (row.probability(j) <= 0.0) continue;
      for (std::size_t i = 0; i < k; ++i) {
        tilde[i] += share * (j == m ? s.mu_bar[i] : s.contact_mu_bar[j * k + i]);
      }
    }
    s.mu_tilde = std::move(tilde);
  }
  for (auto& s : ctx.states) {
    for (std::size_t i = 0; i < k; ++i) {
      if (!s.log[i].empty()) s.mu_bar[i] = s.log[i].estimate();
    }
  }
}

void rule2_update(HeterogContext& ctx, const GraphSnapshot& snapshot, std::size_t t,
                  std::span<const std::uint32_t> arms, std::span<const double> rewards) {
  check_round(ctx, arms, rewards);
  const std::size_t k = ctx.arms;
  for (ClientId m = 0; m < ctx.clients; ++m) {
    auto& s = ctx.states[m];
    const std::uint32_t a = arms[m];
    ++s.n[a];
    s.log[a].append(rewards[m]);
    s.mu_bar[a] = s.log[a].estimate();
  }
  publish_all(ctx, t, false);
  ctx.network.exchange(snapshot, {}, ctx.message_trace);

  const double p_prime = ctx.weights.p_prime;
  const double d = ctx.weights.d;
  std::vector<std::vector<double>> next(ctx.clients, std::vector<double>(k, 0.0));
  for (ClientId m = 0; m < ctx.clients; ++m) {
    auto& s = ctx.states[m];
    for (std::size_t i = 0; i < k; ++i) s.big_n[i] = std::max(s.big_n[i], s.n[i]);
    for (ClientId j : snapshot.neighbors(m)) {
      const ClientSummary* fresh = ctx.network.summary(m, j);
      for (std::size_t i = 0; i < k; ++i) s.big_n[i] = std::max(s.big_n[i], fresh->agg_counts[i]);
    }
    auto& out = next[m];
    for (ClientId j = 0; j < ctx.clients; ++j) {
      if (j == m) {
        for (std::size_t i = 0; i < k; ++i) out[i] += p_prime * s.mu_tilde[i] + d * s.mu_bar[i];
        continue;
      }
      const ClientSummary* stored = ctx.network.summary(m, j);
      if (stored == nullptr) {
        ++ctx.coverage_gaps;
        continue;
      }
      for (std::size_t i = 0; i < k; ++i) out[i] += p_prime * stored->global_est[i] + d * stored->local_est[i];
    }
  }
  for (ClientId m = 0; m < ctx.clients; ++m) ctx.states[m].mu_tilde = std::move(next[m]);
}

RunResult run_heterogeneous(const ProblemSpec& spec, const AlgoParams& params, std::uint64_t seed,
                            std::uint64_t replication, RunOptions options, const HeterogObserver& observer) {
  const std::size_t m_count = spec.clients;
  const std::size_t k = spec.arms();
  const std::size_t horizon = spec.horizon;
  const std::size_t burn = params.burn_in;
  if (burn < k) throw ConfigError("heterogeneous run: burn-in must cover every arm at least once");

  const GraphProcess proc = make_graph_process(spec, seed, replication);
  RngStream graph_rng(seed, {replication, Purpose::graph});
  const RewardSource source(spec.rewards, seed, replication);
  const GlobalMeans means = compute_global_means(spec.rewards);
  RegretMeter meter(means, m_count, horizon, replication, options);
  HeterogContext ctx(m_count, k, params);
  if (options.message_trace) ctx.message_trace = &options.message_trace;

  std::vector<std::uint32_t> actions(m_count, 0);
  std::vector<double> rewards(m_count, 0.0);
  std::size_t worst_staleness = 0;
  std::uint64_t resync_client_rounds = 0;
  std::uint64_t resync_rounds = 0;
  RunResult result;

  for (std::size_t t = 1; t <= horizon; ++t) {
    GraphSnapshot g = sample_graph(proc, t, graph_rng, spec.sampler);
    Mode mode = Mode::burnin;
    if (t <= burn) {
      for (ClientId m = 0; m < m_count; ++m) {
        actions[m] = static_cast<std::uint32_t>(t % k);
        rewards[m] = source.draw(m, actions[m], ctx.states[m].n[actions[m]]);
      }
      burn_in_round(ctx, g, t, actions, rewards);
      if (t == burn) finish_burn_in(ctx);
    } else {
      mode = Mode::ucb;
      for (ClientId m = 0; m < m_count; ++m) {
        auto& s = ctx.states[m];
        const auto [a, client_mode] = heterog_select_arm(s, t, params.ucb, params.sync_slack);
        s.resync = client_mode == Mode::resync;
        if (s.resync) {
          mode = Mode::resync;
          ++resync_client_rounds;
        }
        actions[m] = static_cast<std::uint32_t>(a);
        rewards[m] = source.draw(m, a, s.n[a]);
      }
      if (mode == Mode::resync) ++resync_rounds;
      rule2_update(ctx, g, t, actions, rewards);
    }

    const std::size_t stale = ctx.network.max_staleness(t);
    worst_staleness = std::max(worst_staleness, stale);
    meter.add_round(t, actions, mode, stale, -1);
    if (observer) observer(t, ctx);
    if (options.record_edges) result.edges.push_back(std::move(g));
  }

  meter.finish(result);
  auto& summary = result.summary;
  summary.events.a2 = worst_staleness <= params.delay_bound;
  auto& diag = summary.diagnostics;
  diag["burn_in"] = static_cast<double>(burn);
  diag["sync_slack"] = static_cast<double>(params.sync_slack);
  diag["p_prime"] = ctx.weights.p_prime;
  diag["d"] = ctx.weights.d;
  diag["p_prime_clamped"] = ctx.weights.clamped() ? 1.0 : 0.0;
  diag["coverage_gaps"] = static_cast<double>(ctx.coverage_gaps);
  diag["resync_rounds"] = static_cast<double>(resync_rounds);
  diag["resync_client_rounds"] = static_cast<double>(resync_client_rounds);
  diag["max_staleness"] = static_cast<double>(worst_staleness);
  return result;
}

}  // namespace banditmesh
