#include "banditmesh/homogeneous.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>

#include "banditmesh/error.hpp"

namespace banditmesh {

ClientId HubIdState::elected() const {
  ClientId best = owner;
  std::int64_t best_degree = -1;
  for (ClientId j = 0; j < known_degree.size(); ++j) {
    if (known_degree[j] > best_degree) {
      best = j;
      best_degree = known_degree[j];
    }
  }
  return best;
}

std::vector<HubIdState> start_hub_identification(const GraphSnapshot& first_round) {
  const std::size_t m = first_round.size();
  std::vector<HubIdState> states(m);
  for (ClientId i = 0; i < m; ++i) {
    states[i].owner = i;
    states[i].known_degree.assign(m, -1);
    states[i].known_degree[i] = static_cast<std::int64_t>(degree(first_round, i));
  }
  return states;
}

void hub_identification_round(std::vector<HubIdState>& states, const GraphSnapshot& snapshot) {
  if (states.size() != snapshot.size()) throw UsageError("hub identification: snapshot size mismatch");
  const std::vector<HubIdState> before = states;
  for (const auto& [a, b] : snapshot.edges()) {
    for (auto [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
      const auto& src = before[from].known_degree;
      auto& dst = states[to].known_degree;
      for (std::size_t j = 0; j < src.size(); ++j) {
        if (dst[j] < 0 && src[j] >= 0) dst[j] = src[j];
      }
    }
  }
}

std::size_t homog_select_arm(const HomogClientState& state, std::size_t t, const UcbParams& p) {
  return argmax_ucb(state.mu_hat, state.big_n, t, p);
}

HomogContext::HomogContext(std::size_t clients_in, std::size_t arms_in, const AlgoParams& params_in)
    : clients(clients_in),
      arms(arms_in),
      id_rounds(params_in.id_rounds),
      params(params_in),
      network(clients_in),
      arm_history(clients_in),
      reward_history(clients_in) {
  if (clients == 0 || arms == 0) throw UsageError("homogeneous run: clients and arms must be >= 1");
  states.resize(clients);
  for (ClientId m = 0; m < clients; ++m) {
    auto& s = states[m];
    s.id = m;
    s.elected = m;
    s.n.assign(arms, 0);
    s.big_n.assign(arms, 0);
    s.mu_hat.assign(arms, 0.0);
    s.own_log.assign(arms, RewardLog(params.batches, params.options.mom_mode));
  }
}

void begin_ucb_phase(HomogContext& ctx, std::span<const ClientId> elected) {
  if (elected.size() != ctx.clients) throw UsageError("begin_ucb_phase: one election result per client required");
  ctx.centers.clear();
  for (ClientId m = 0; m < ctx.clients; ++m) {
    if (elected[m] >= ctx.clients) throw UsageError("begin_ucb_phase: elected client out of range");
    auto& s = ctx.states[m];
    s.elected = elected[m];
    s.center = elected[m] == m;
    if (s.center) {
      ctx.centers.push_back(m);
      s.hub_log.assign(ctx.arms, RewardLog(ctx.params.batches, ctx.params.options.mom_mode));
      s.absorbed.assign(ctx.clients, static_cast<Stamp>(ctx.id_rounds));
      s.own_log.clear();
    }
  }
  ctx.network.carry_content(ctx.centers);
}

namespace {

// Pool origin j's rewards for rounds (absorbed[j], upto] into the center's log.
void absorb(HomogContext& ctx, HomogClientState& center, ClientId j, Stamp upto, std::vector<char>& dirty) {
  const Stamp from = center.absorbed[j];
  if (upto <= from) return;
  std::size_t first = from - ctx.id_rounds;
  const std::size_t last = upto - ctx.id_rounds;
  const std::size_t cap = ctx.params.options.max_relay_rewards;
  if (cap > 0 && last - first > cap && j != center.id) {
    ctx.relay_rewards_dropped += last - first - cap;
    first = last - cap;
  }
  const auto& arms = ctx.arm_history[j];
  const auto& rewards = ctx.reward_history[j];
  for (std::size_t s = first; s < last; ++s) {
    center.hub_log[arms[s]].append(rewards[s]);
    dirty[arms[s]] = 1;
  }
  center.absorbed[j] = upto;
}

void refresh_center(HomogClientState& center, std::vector<char>& dirty) {
  for (std::size_t a = 0; a < dirty.size(); ++a) {
    if (!dirty[a]) continue;
    center.mu_hat[a] = center.hub_log[a].estimate();
    center.big_n[a] = center.hub_log[a].size();
    dirty[a] = 0;
  }
}

}  // namespace

void rule1_update(HomogContext& ctx, const GraphSnapshot& snapshot, std::size_t t, std::span<const std::uint32_t> arms,
                  std::span<const double> rewards, bool gate) {
  const std::size_t m_count = ctx.clients;
  if (arms.size() != m_count || rewards.size() != m_count) {
    throw UsageError("rule1_update: one arm and one reward per client required");
  }
  if (t <= ctx.id_rounds) throw SequencingError("rule1_update: round lies in the identification phase");
  if (ctx.arm_history[0].size() != t - ctx.id_rounds - 1) throw SequencingError("rule1_update: rounds must be consecutive");
  const auto stamp = static_cast<Stamp>(t);

  for (ClientId m = 0; m < m_count; ++m) {
    auto& s = ctx.states[m];
    const std::uint32_t a = arms[m];
    if (a >= ctx.arms) throw UsageError("rule1_update: arm out of range");
    ++s.n[a];
    ctx.arm_history[m].push_back(a);
    ctx.reward_history[m].push_back(rewards[m]);
    if (!s.center && s.hub_stamp == 0) {
      s.own_log[a].append(rewards[m]);
      s.mu_hat[a] = s.own_log[a].estimate();
      s.big_n[a] = s.n[a];
    }
  }

  std::vector<char> dirty(ctx.arms, 0);
  std::vector<char> muted;
  bool any_muted = false;
  for (ClientId c : ctx.centers) {
    auto& s = ctx.states[c];
    absorb(ctx, s, c, stamp, dirty);
    refresh_center(s, dirty);
    if (gate && degree(snapshot, c) < ctx.params.gate_threshold) {
      if (muted.empty()) muted.assign(m_count, 0);
      muted[c] = 1;
      any_muted = true;
    }
  }
  if (any_muted) ++ctx.gated_rounds;

  for (ClientId m = 0; m < m_count; ++m) {
    SummaryPtr content;
    const auto& s = ctx.states[m];
    if (s.center) {
      auto summary = std::make_shared<ClientSummary>();
      summary->origin = m;
      summary->stamp = stamp;
      summary->local_counts = s.n;
      summary->hub_est = s.mu_hat;
      summary->hub_counts = s.big_n;
      content = std::move(summary);
    }
    ctx.network.publish(m, stamp, std::move(content));
  }

  // The same fresh rewards offered by several neighbours are pooled once.
  for (ClientId c : ctx.centers) {
    if (!muted.empty() && muted[c]) continue;
    const auto own = ctx.network.stamps(c);
    std::vector<std::uint32_t> offers(m_count, 0);
    for (ClientId b : snapshot.neighbors(c)) {
      if (!muted.empty() && muted[b]) continue;
      const auto theirs = ctx.network.stamps(b);
      for (std::size_t j = 0; j < m_count; ++j) offers[j] += theirs[j] > own[j] ? 1u : 0u;
    }
    for (std::uint32_t k : offers) ctx.duplicate_deliveries += k > 1 ? k - 1 : 0;
  }

  ctx.network.exchange(snapshot, muted, ctx.message_trace);

  for (ClientId c : ctx.centers) {
    auto& s = ctx.states[c];
    const auto known = ctx.network.stamps(c);
    for (ClientId j = 0; j < m_count; ++j) absorb(ctx, s, j, known[j], dirty);
    refresh_center(s, dirty);
  }

  for (ClientId m = 0; m < m_count; ++m) {
    auto& s = ctx.states[m];
    if (s.center) continue;
    const Stamp fresh = ctx.network.stamp(m, s.elected);
    if (fresh <= s.hub_stamp) continue;
    const ClientSummary* payload = ctx.network.summary(m, s.elected);
    if (payload == nullptr) continue;
    s.mu_hat = payload->hub_est;
    s.big_n = payload->hub_counts;
    if (s.hub_stamp == 0) s.own_log = {};
    s.hub_stamp = fresh;
  }
}

RunResult run_homogeneous(const ProblemSpec& spec, const AlgoParams& params, std::uint64_t seed,
                          std::uint64_t replication, RunOptions options, const HomogObserver& observer) {
  const std::size_t m_count = spec.clients;
  const std::size_t horizon = spec.horizon;
  const std::size_t id_rounds = params.id_rounds;
  if (m_count > 1 && id_rounds == 0) throw ConfigError("homogeneous run: identification needs at least one round");
  if (!spec.rewards.is_homogeneous()) {
    throw ConfigError("homogeneous run: every client must share the same arm means");
  }

  const GraphProcess proc = make_graph_process(spec, seed, replication);
  RngStream graph_rng(seed, {replication, Purpose::graph});
  const RewardSource source(spec.rewards, seed, replication);
  const GlobalMeans means = compute_global_means(spec.rewards);
  RegretMeter meter(means, m_count, horizon, replication, options);
  HomogContext ctx(m_count, spec.arms(), params);
  if (options.message_trace) ctx.message_trace = &options.message_trace;

  const double recurrence_threshold = std::pow(static_cast<double>(m_count), 1.0 / spec.law.alpha - spec.zeta);
  std::optional<HubInfo> hub;
  ClientId true_hub = 0;
  std::vector<HubIdState> id;
  std::vector<ClientId> elected(m_count, 0);
  std::vector<std::uint32_t> actions(m_count, kNoPull);
  std::vector<double> rewards(m_count, 0.0);
  std::size_t worst_staleness = 0;
  RunResult result;

  for (std::size_t t = 1; t <= horizon; ++t) {
    GraphSnapshot g = sample_graph(proc, t, graph_rng, spec.sampler);
    if (t == 1) {
      true_hub = max_degree_client(g);
      hub.emplace(true_hub, m_count, recurrence_threshold);
      if (id_rounds > 0) id = start_hub_identification(g);
    }
    hub->observe(t, g.neighbors(true_hub));

    Mode mode = Mode::ucb;
    if (t <= id_rounds) {
      mode = Mode::idphase;
      hub_identification_round(id, g);
      for (ClientId m = 0; m < m_count; ++m) ctx.network.publish(m, static_cast<Stamp>(t));
      ctx.network.exchange(g, {}, ctx.message_trace);
      std::fill(actions.begin(), actions.end(), kNoPull);
    } else {
      if (t == id_rounds + 1) {
        for (ClientId m = 0; m < m_count; ++m) elected[m] = id_rounds > 0 ? id[m].elected() : m;
        begin_ucb_phase(ctx, elected);
      }
      for (ClientId m = 0; m < m_count; ++m) {
        auto& s = ctx.states[m];
        const std::size_t a = homog_select_arm(s, t, params.ucb);
        actions[m] = static_cast<std::uint32_t>(a);
        rewards[m] = source.draw(m, a, s.n[a]);
      }
      rule1_update(ctx, g, t, actions, rewards, params.options.gate);
    }

    const std::size_t stale = ctx.network.max_staleness(t);
    worst_staleness = std::max(worst_staleness, stale);
    meter.add_round(t, actions, mode, stale, static_cast<std::int64_t>(degree(g, true_hub)));
    if (observer) observer(t, ctx);
    if (options.record_edges) result.edges.push_back(std::move(g));
  }

  meter.finish(result);
  auto& summary = result.summary;
  const double m_real = static_cast<double>(m_count);
  const double alpha = spec.law.alpha;
  const std::size_t persistent = hub->persistent_hub().size();
  summary.events.a1 = static_cast<double>(persistent) >= std::pow(m_real, 2.0 - alpha - spec.zeta);
  summary.events.a2 = worst_staleness <= params.delay_bound;
  if (horizon > id_rounds) {
    summary.events.a3 = std::all_of(elected.begin(), elected.end(), [&](ClientId e) { return e == true_hub; });
  } else {
    summary.events.a3 = false;
  }
  summary.events.a_alpha_zeta = proc.weight(true_hub) >= std::pow(m_real, 1.0 / alpha - spec.zeta / 2.0);

  auto& d = summary.diagnostics;
  d["id_rounds"] = static_cast<double>(id_rounds);
  d["centers"] = static_cast<double>(ctx.centers.size());
  d["hub_weight"] = proc.weight(true_hub);
  d["persistent_hub_size"] = static_cast<double>(persistent);
  d["hub_max_gap"] = static_cast<double>(hub->max_gap());
  d["max_staleness"] = static_cast<double>(worst_staleness);
  d["duplicate_deliveries"] = static_cast<double>(ctx.duplicate_deliveries);
  d["relay_rewards_dropped"] = static_cast<double>(ctx.relay_rewards_dropped);
  d["gated_rounds"] = static_cast<double>(ctx.gated_rounds);
  return result;
}

}  // namespace banditmesh
