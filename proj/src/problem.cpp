#include "banditmesh/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "banditmesh/error.hpp"

namespace banditmesh {

GlobalMeans compute_global_means(std::span<const double> means, std::size_t clients, std::size_t arms) {
  if (clients == 0 || arms == 0 || means.size() != clients * arms) {
    throw UsageError("compute_global_means: need a non-empty clients x arms matrix");
  }
  GlobalMeans g;
  g.mu.assign(arms, 0.0);
  for (std::size_t k = 0; k < arms; ++k) {
    double sum = 0.0;
    for (std::size_t m = 0; m < clients; ++m) sum += means[m * arms + k];
    g.mu[k] = sum / static_cast<double>(clients);
  }
  g.best = static_cast<std::size_t>(std::max_element(g.mu.begin(), g.mu.end()) - g.mu.begin());
  g.gaps.resize(arms);
  for (std::size_t k = 0; k < arms; ++k) g.gaps[k] = g.mu[g.best] - g.mu[k];
  g.max_gap = *std::max_element(g.gaps.begin(), g.gaps.end());
  return g;
}

GlobalMeans compute_global_means(const RewardModel& model) {
  return compute_global_means(model.means(), model.clients(), model.arms());
}

std::size_t broadcast_rounds(double kappa, std::size_t m, std::size_t horizon) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be positive and finite");
  const double lm = std::log(static_cast<double>(m));
  const double v = std::ceil(kappa * lm * lm * std::log(static_cast<double>(horizon)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(v));
}

AlgoParams derive_params(const ProblemSpec& spec, double kappa, AlgoOptions options) {
  spec.law.validate();
  if (spec.clients == 0 || spec.horizon == 0) throw ConfigError("clients and horizon must be >= 1");
  if (!(spec.zeta > 0.0 && spec.zeta < 1.0)) throw ConfigError("zeta must lie in (0, 1)");
  if (spec.rewards.clients() != spec.clients) throw ConfigError("reward model client count differs from M");
  const std::size_t m = spec.clients;
  const std::size_t k = spec.arms();
  const std::size_t t = spec.horizon;

  AlgoParams p;
  p.kappa = kappa;
  p.options = options;
  p.batches = batches_for_horizon(t);
  p.ucb = UcbParams::from_theory(spec.rewards.rho(), spec.rewards.epsilon());
  p.delay_bound = broadcast_rounds(kappa, m, t);
  p.sync_slack = broadcast_rounds(2.0 * kappa, m, t);
  p.id_rounds = m == 1 ? 0 : p.sync_slack;
  p.burn_in = std::max(k, broadcast_rounds(2.0 * kappa * static_cast<double>(k), m, t));
  const double a = std::pow(static_cast<double>(m), 1.0 / spec.law.alpha - spec.zeta);
  p.gate_threshold = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(a)));
  return p;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::ucb: return "ucb";
    case Mode::resync: return "resync";
    case Mode::idphase: return "idphase";
    case Mode::burnin: return "burnin";
  }
  return "ucb";
}

Mode parse_mode(std::string_view text) {
  for (Mode mode : {Mode::ucb, Mode::resync, Mode::idphase, Mode::burnin}) {
    if (to_string(mode) == text) return mode;
  }
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

std::size_t tail_start(std::size_t horizon) {
  const std::size_t window = (horizon + 9) / 10;
  return horizon - window + 1;
}

RegretMeter::RegretMeter(const GlobalMeans& means, std::size_t clients, std::size_t horizon,
                         std::uint64_t replication, RunOptions options)
    : means_(means),
      clients_(clients),
      arms_(means.mu.size()),
      tail_start_(tail_start(horizon)),
      replication_(replication),
      options_(options),
      totals_(arms_, 0),
      client_pulls_(clients * arms_, 0),
      tail_pulls_(clients * arms_, 0) {
  trace_.arms = arms_;
  if (options_.record_trace) trace_.rows.reserve(horizon);
  if (options_.record_actions) actions_.reserve(horizon * clients);
}

void RegretMeter::add_round(std::size_t t, std::span<const std::uint32_t> actions, Mode mode,
                            std::size_t staleness_max, std::int64_t hub_size) {
  if (actions.size() != clients_) throw UsageError("regret meter: one action per client required");
  double round_gap = 0.0;
  for (std::size_t m = 0; m < clients_; ++m) {
    const std::uint32_t a = actions[m];
    if (a == kNoPull) {
      round_gap += means_.max_gap;
      continue;
    }
    if (a >= arms_) throw UsageError("regret meter: arm out of range");
    round_gap += means_.gaps[a];
    ++totals_[a];
    ++client_pulls_[m * arms_ + a];
    if (t >= tail_start_) ++tail_pulls_[m * arms_ + a];
  }
  regret_ += round_gap / static_cast<double>(clients_);
  if (options_.record_actions) actions_.insert(actions_.end(), actions.begin(), actions.end());
  if (options_.record_trace) {
    trace_.rows.push_back({replication_, t, regret_, staleness_max, hub_size, mode, totals_});
  }
}

void RegretMeter::finish(RunResult& out) {
  out.trace = std::move(trace_);
  out.summary.replication = replication_;
  out.summary.regret = regret_;
  out.client_pulls = std::move(client_pulls_);
  out.tail_pulls = std::move(tail_pulls_);
  out.actions = std::move(actions_);
}

GraphProcess make_graph_process(const ProblemSpec& spec, std::uint64_t seed, std::uint64_t replication) {
  RngStream rng(seed, {replication, Purpose::weights});
  return GraphProcess(spec.law, spec.clients, rng);
}

}  // namespace banditmesh
