#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "banditmesh/error.hpp"
#include "banditmesh/harness.hpp"

namespace banditmesh {

RunResult baseline_no_comm(const ProblemSpec& spec, const AlgoParams& params, std::uint64_t seed,
                           std::uint64_t replication, RunOptions options) {
  const std::size_t m_count = spec.clients;
  const std::size_t k = spec.arms();
  const RewardSource source(spec.rewards, seed, replication);
  const GlobalMeans means = compute_global_means(spec.rewards);
  RegretMeter meter(means, m_count, spec.horizon, replication, options);

  std::vector<std::vector<std::uint64_t>> n(m_count, std::vector<std::uint64_t>(k, 0));
  std::vector<std::vector<double>> est(m_count, std::vector<double>(k, 0.0));
  std::vector<std::vector<RewardLog>> logs(m_count,
                                           std::vector<RewardLog>(k, RewardLog(params.batches, params.options.mom_mode)));
  std::vector<std::uint32_t> actions(m_count, 0);
  for (std::size_t t = 1; t <= spec.horizon; ++t) {
    for (ClientId m = 0; m < m_count; ++m) {
      const std::size_t a = argmax_ucb(est[m], n[m], t, params.ucb);
      const double r = source.draw(m, a, n[m][a]);
      ++n[m][a];
      logs[m][a].append(r);
      est[m][a] = logs[m][a].estimate();
      actions[m] = static_cast<std::uint32_t>(a);
    }
    meter.add_round(t, actions, Mode::ucb, 0, -1);
  }
  RunResult result;
  meter.finish(result);
  return result;
}

// ---------------------------------------------------------------------------

KappaEstimate estimate_kappa(const WeightLaw& law, std::size_t m, std::size_t replications, std::size_t max_rounds,
                             std::uint64_t seed, std::size_t threads) {
  if (m < 10) throw ConfigError("kappa calibration needs M >= 10; set algorithm.kappa for smaller networks");
  if (replications == 0) throw ConfigError("kappa calibration needs at least one replication");
  KappaEstimate est;
  est.replications = replications;
  est.cover_times.assign(replications, 0);
  parallel_for(replications, threads, [&](std::size_t r) {
    RngStream rng(seed, {r, Purpose::calibration});
    const GraphProcess proc(law, m, rng);
    const auto start = static_cast<ClientId>(rng.uniform_index(m));
    const auto cover = broadcast_cover_time(proc, std::span<const ClientId>(&start, 1), rng, max_rounds);
    est.cover_times[r] = cover ? *cover : max_rounds + 1;
  });
  est.timeouts = static_cast<std::size_t>(
      std::count_if(est.cover_times.begin(), est.cover_times.end(), [&](std::size_t c) { return c > max_rounds; }));
  if (static_cast<double>(est.timeouts) > 0.05 * static_cast<double>(replications)) {
    throw CalibrationError("kappa calibration: " + std::to_string(est.timeouts) + " of " +
                           std::to_string(replications) + " broadcasts did not cover within " +
                           std::to_string(max_rounds) + " rounds");
  }
  std::vector<std::size_t> sorted = est.cover_times;
  std::sort(sorted.begin(), sorted.end());
  // Nearest-rank quantile at level 1 - 1/M.
  const double level = 1.0 - 1.0 / static_cast<double>(m);
  const auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(replications)));
  est.quantile_rounds = sorted[std::clamp<std::size_t>(rank, 1, replications) - 1];
  const double lm = std::log(static_cast<double>(m));
  est.kappa = static_cast<double>(est.quantile_rounds) / (lm * lm);
  return est;
}

void write_kappa_file(const std::filesystem::path& path, const ExperimentConfig& cfg, const KappaEstimate& est) {
  nlohmann::ordered_json j;
  j["kappa"] = est.kappa;
  j["M"] = cfg.graph.m;
  j["alpha"] = cfg.graph.alpha;
  j["c_h"] = cfg.graph.c_h;
  j["seed"] = cfg.seed;
  j["replications"] = est.replications;
  j["timeouts"] = est.timeouts;
  j["quantile_rounds"] = est.quantile_rounds;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write kappa file '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing kappa file '" + path.string() + "'");
}

double read_kappa_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kappa file '" + path.string() + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    const double kappa = j.at("kappa").get<double>();
    if (!(kappa > 0.0)) throw ConfigError("kappa file '" + path.string() + "': kappa must be > 0");
    return kappa;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("kappa file '" + path.string() + "' is malformed: " + e.what());
  }
}

KappaChoice resolve_kappa(const ExperimentConfig& cfg) {
  if (cfg.algorithm.kappa) return {*cfg.algorithm.kappa, "config"};
  if (!cfg.algorithm.kappa_file.empty()) {
    std::filesystem::path p = cfg.algorithm.kappa_file;
    if (p.is_relative()) p = cfg.base_dir / p;
    return {read_kappa_file(p), "file"};
  }
  const auto est = estimate_kappa(WeightLaw{cfg.graph.alpha, cfg.graph.c_h}, cfg.graph.m, cfg.calibration.replications,
                                  cfg.calibration.max_rounds, cfg.seed, resolve_threads(cfg.threads));
  return {est.kappa, "estimate"};
}

// ---------------------------------------------------------------------------

namespace {

double median_of(std::vector<std::size_t> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? static_cast<double>(v[h]) : 0.5 * static_cast<double>(v[h - 1] + v[h]);
}

}  // namespace

HubSizeReport verify_hub_size(const WeightLaw& law, std::size_t m, double zeta, std::size_t horizon,
                              std::size_t replications, std::uint64_t seed, std::size_t threads) {
  law.validate();
  if (!(law.alpha < 2.0)) throw ConfigError("hub-size check needs alpha in (1, 2)");
  if (!(zeta > 0.0 && zeta < 2.0 - law.alpha)) throw ConfigError("hub-size check needs zeta in (0, 2 - alpha)");
  if (replications == 0 || horizon == 0 || m < 2) throw ConfigError("hub-size check needs M >= 2, T >= 1, R >= 1");
  HubSizeReport rep;
  rep.threshold = std::pow(static_cast<double>(m), 2.0 - law.alpha - zeta);
  rep.replications = replications;
  rep.persistent_sizes.assign(replications, 0);
  rep.core_sizes.assign(replications, 0);
  std::vector<char> core_ok(replications, 1);
  parallel_for(replications, threads, [&](std::size_t r) {
    RngStream weights_rng(seed, {r, Purpose::weights});
    const GraphProcess proc(law, m, weights_rng);
    RngStream rng(seed, {r, Purpose::verification});
    const GraphSnapshot first = sample_graph(proc, 1, rng, EdgeSampler::skip);
    const ClientId hub = max_degree_client(first);
    const auto core = deterministic_hub_core(proc, hub);
    const auto first_row = first.neighbors(hub);
    std::vector<ClientId> persistent(first_row.begin(), first_row.end());
    std::vector<ClientId> kept;
    bool ok = std::includes(persistent.begin(), persistent.end(), core.begin(), core.end());
    for (std::size_t t = 2; t <= horizon; ++t) {
      const auto row = sample_neighbors(proc, hub, rng);
      ok = ok && std::includes(row.begin(), row.end(), core.begin(), core.end());
      kept.clear();
      std::set_intersection(persistent.begin(), persistent.end(), row.begin(), row.end(), std::back_inserter(kept));
      persistent.swap(kept);
    }
    rep.persistent_sizes[r] = persistent.size();
    rep.core_sizes[r] = core.size();
    core_ok[r] = ok ? 1 : 0;
  });
  std::size_t pass = 0;
  for (std::size_t r = 0; r < replications; ++r) {
    if (static_cast<double>(rep.persistent_sizes[r]) > rep.threshold) ++pass;
    if (!core_ok[r]) ++rep.core_violations;
  }
  rep.pass_fraction = static_cast<double>(pass) / static_cast<double>(replications);
  rep.median_persistent = median_of(rep.persistent_sizes);
  rep.median_core = median_of(rep.core_sizes);
  return rep;
}

HubRecurrenceReport verify_hub_recurrence(const WeightLaw& law, std::size_t m, double zeta, std::size_t horizon,
                                          std::size_t replications, std::uint64_t seed, std::size_t threads) {
  law.validate();
  if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("hub-recurrence check needs zeta in (0, 1)");
  if (replications == 0 || horizon == 0 || m < 2) throw ConfigError("hub-recurrence check needs M >= 2, T >= 1, R >= 1");
  HubRecurrenceReport rep;
  const double mm = static_cast<double>(m);
  rep.size_threshold = std::pow(mm, 1.0 / law.alpha - zeta);
  rep.weight_threshold = std::pow(mm, 1.0 / law.alpha - zeta / 2.0);
  rep.gap_limit = std::log(static_cast<double>(horizon));
  rep.replications = replications;
  rep.max_gaps.assign(replications, 0);
  rep.heavy_hub.assign(replications, 0);
  parallel_for(replications, threads, [&](std::size_t r) {
    RngStream weights_rng(seed, {r, Purpose::weights});
    const GraphProcess proc(law, m, weights_rng);
    RngStream rng(seed, {r, Purpose::verification});
    const GraphSnapshot first = sample_graph(proc, 1, rng, EdgeSampler::skip);
    const ClientId hub = max_degree_client(first);
    HubInfo info(hub, m, rep.size_threshold);
    info.observe(1, first.neighbors(hub));
    for (std::size_t t = 2; t <= horizon; ++t) info.observe(t, sample_neighbors(proc, hub, rng));
    rep.max_gaps[r] = info.max_gap();
    rep.heavy_hub[r] = proc.weight(hub) >= rep.weight_threshold ? 1 : 0;
  });
  for (std::size_t r = 0; r < replications; ++r) {
    if (!rep.heavy_hub[r]) continue;
    ++rep.conditioned;
    if (static_cast<double>(rep.max_gaps[r]) > rep.gap_limit) ++rep.violations;
  }
  rep.violation_frequency =
      rep.conditioned == 0 ? 0.0 : static_cast<double>(rep.violations) / static_cast<double>(rep.conditioned);
  return rep;
}

BroadcastReport verify_broadcast(const WeightLaw& law, std::size_t m, double kappa, double factor,
                                 std::size_t replications, std::size_t max_rounds, std::uint64_t seed,
                                 std::size_t threads) {
  law.validate();
  if (m < 2 || replications == 0) throw ConfigError("broadcast check needs M >= 2 and R >= 1");
  BroadcastReport rep;
  rep.kappa = kappa;
  const double lm = std::log(static_cast<double>(m));
  rep.bound_rounds = factor * kappa * lm * lm;
  rep.replications = replications;
  rep.cover_times.assign(replications, 0);
  parallel_for(replications, threads, [&](std::size_t r) {
    RngStream rng(seed, {r, Purpose::verification});
    const GraphProcess proc(law, m, rng);
    const auto start = static_cast<ClientId>(rng.uniform_index(m));
    const auto cover = broadcast_cover_time(proc, std::span<const ClientId>(&start, 1), rng, max_rounds);
    rep.cover_times[r] = cover ? *cover : max_rounds + 1;
  });
  for (std::size_t c : rep.cover_times) {
    if (c > max_rounds) ++rep.timeouts;
    if (static_cast<double>(c) <= rep.bound_rounds) ++rep.within;
  }
  rep.fraction_within = static_cast<double>(rep.within) / static_cast<double>(replications);
  return rep;
}

MomReport verify_mom(RewardKind kind, double epsilon, double rho, double scale, double mean, std::size_t n,
                     double delta, std::size_t trials, std::uint64_t seed, std::size_t threads) {
  if (n == 0 || trials == 0) throw ConfigError("mom check needs n >= 1 and trials >= 1");
  const RewardModel model(kind, 1, 1, {mean}, epsilon, rho, scale);
  MomReport rep;
  rep.n = n;
  rep.trials = trials;
  rep.delta = delta;
  rep.batches = batches_for_confidence(delta);
  rep.radius = mom_radius(n, delta, UcbParams::from_theory(rho, epsilon));
  std::vector<char> hit(trials, 0);
  parallel_for(trials, threads, [&](std::size_t i) {
    RngStream rng(seed, {i, Purpose::verification});
    std::vector<double> samples(n);
    for (double& x : samples) x = sample_reward(model, 0, 0, rng);
    hit[i] = std::abs(median_of_means(samples, {rep.batches}) - mean) <= rep.radius ? 1 : 0;
  });
  rep.coverage = static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(trials);
  return rep;
}

}  // namespace banditmesh
