#include <fstream>
#include <sstream>

#include "banditmesh/error.hpp"
#include "banditmesh/harness.hpp"
#include "banditmesh/heterogeneous.hpp"
#include "banditmesh/homogeneous.hpp"

namespace banditmesh {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_traces(const std::filesystem::path& path, std::size_t arms, const std::vector<RunResult>& runs) {
  std::vector<const RegretTrace*> traces;
  for (const auto& r : runs) traces.push_back(&r.trace);
  auto out = open_out(path);
  write_trace_csv(out, arms, traces);
}

nlohmann::ordered_json regret_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                         std::size_t threads, nlohmann::ordered_json summary) {
  const ProblemSpec spec = make_problem(cfg);
  const KappaChoice kappa = resolve_kappa(cfg);
  const AlgoParams params = derive_params(spec, kappa.kappa, cfg.algorithm.options);
  const bool homog = cfg.kind == ExperimentKind::homog_regret;
  const std::size_t reps = cfg.replications;

  std::ostringstream messages;
  TraceSink sink = [&](std::size_t t, ClientId from, ClientId to, ClientId origin, Stamp stamp) {
    messages << t << ',' << from << ',' << to << ',' << origin << ',' << stamp << '\n';
  };
  std::vector<RunResult> runs(reps);
  std::vector<RunResult> baseline(cfg.algorithm.baseline ? reps : 0);
  parallel_for(reps, threads, [&](std::size_t r) {
    RunOptions options;
    options.record_trace = cfg.trace.trace_csv;
    if (r == 0) {
      options.record_edges = cfg.trace.edges_csv;
      if (cfg.trace.messages_csv) options.message_trace = sink;
    }
    runs[r] = homog ? run_homogeneous(spec, params, cfg.seed, r, options)
                    : run_heterogeneous(spec, params, cfg.seed, r, options);
    if (cfg.algorithm.baseline) {
      RunOptions plain;
      plain.record_trace = cfg.trace.trace_csv;
      baseline[r] = baseline_no_comm(spec, params, cfg.seed, r, plain);
    }
  });

  if (cfg.trace.trace_csv) {
    write_traces(out_dir / "trace.csv", spec.arms(), runs);
    if (cfg.algorithm.baseline) write_traces(out_dir / "baseline_trace.csv", spec.arms(), baseline);
  }
  if (cfg.trace.edges_csv) {
    auto out = open_out(out_dir / "edges.csv");
    out << "t,i,j\n";
    for (const auto& g : runs.front().edges) write_edges_csv(out, g);
  }
  if (cfg.trace.messages_csv) {
    auto out = open_out(out_dir / "messages.csv");
    out << "t,from,to,origin,stamp\n" << messages.str();
  }

  std::vector<ReplicationSummary> summaries;
  for (const auto& r : runs) summaries.push_back(r.summary);
  const auto agg = summarize_runs(summaries);
  summary["kappa_used"] = kappa.kappa;
  summary["kappa_source"] = kappa.source;
  summary["events"] = agg["events"];
  summary["regret"] = agg["regret"];
  if (cfg.algorithm.baseline) {
    std::vector<ReplicationSummary> base;
    for (const auto& r : baseline) base.push_back(r.summary);
    summary["baseline"] = {{"regret", summarize_runs(base)["regret"]}};
  }
  summary["params"] = {{"batches", params.batches},
                       {"id_rounds", params.id_rounds},
                       {"burn_in", params.burn_in},
                       {"sync_slack", params.sync_slack},
                       {"delay_bound", params.delay_bound},
                       {"gate_threshold", params.gate_threshold},
                       {"ucb_c", params.ucb.c}};
  summary["diagnostics"] = agg["diagnostics"];
  return summary;
}

}  // namespace

nlohmann::ordered_json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  const std::size_t threads = resolve_threads(cfg.threads);
  const WeightLaw law{cfg.graph.alpha, cfg.graph.c_h};

  nlohmann::ordered_json summary;
  summary["config"] = config_to_json(cfg);
  summary["config"].erase("threads");
  summary["config"].erase("output");
  summary["seed"] = cfg.seed;
  summary["kappa_used"] = nullptr;

  switch (cfg.kind) {
    case ExperimentKind::homog_regret:
    case ExperimentKind::heterog_regret:
      summary = regret_experiment(cfg, out_dir, threads, std::move(summary));
      break;
    case ExperimentKind::mom: {
      const auto rep = verify_mom(cfg.bandit.kind, cfg.bandit.epsilon, cfg.bandit.rho, cfg.bandit.scale, cfg.mom.mean,
                                  cfg.mom.n, cfg.mom.delta, cfg.mom.trials, cfg.seed, threads);
      summary["mom"] = {{"n", rep.n},           {"delta", rep.delta},   {"batches", rep.batches},
                        {"trials", rep.trials}, {"radius", rep.radius}, {"coverage", rep.coverage}};
      break;
    }
    case ExperimentKind::hub_size: {
      const auto rep = verify_hub_size(law, cfg.graph.m, cfg.graph.zeta, cfg.bandit.horizon, cfg.replications,
                                       cfg.seed, threads);
      summary["hub_size"] = {{"threshold", rep.threshold},
                             {"pass_fraction", rep.pass_fraction},
                             {"median_persistent", rep.median_persistent},
                             {"median_core", rep.median_core},
                             {"core_violations", rep.core_violations}};
      auto out = open_out(out_dir / "replications.csv");
      out << "replication,persistent_size,core_size\n";
      for (std::size_t r = 0; r < rep.replications; ++r) {
        out << r << ',' << rep.persistent_sizes[r] << ',' << rep.core_sizes[r] << '\n';
      }
      break;
    }
    case ExperimentKind::hub_recurrence: {
      const auto rep = verify_hub_recurrence(law, cfg.graph.m, cfg.graph.zeta, cfg.bandit.horizon, cfg.replications,
                                             cfg.seed, threads);
      summary["hub_recurrence"] = {{"size_threshold", rep.size_threshold},
                                   {"weight_threshold", rep.weight_threshold},
                                   {"gap_limit", rep.gap_limit},
                                   {"conditioned", rep.conditioned},
                                   {"violations", rep.violations},
                                   {"violation_frequency", rep.violation_frequency}};
      auto out = open_out(out_dir / "replications.csv");
      out << "replication,max_gap,heavy_hub\n";
      for (std::size_t r = 0; r < rep.replications; ++r) {
        out << r << ',' << rep.max_gaps[r] << ',' << static_cast<int>(rep.heavy_hub[r]) << '\n';
      }
      break;
    }
    case ExperimentKind::broadcast_delay: {
      const KappaChoice kappa = resolve_kappa(cfg);
      const auto rep = verify_broadcast(law, cfg.graph.m, kappa.kappa, cfg.broadcast.factor, cfg.replications,
                                        cfg.calibration.max_rounds, cfg.seed, threads);
      summary["kappa_used"] = kappa.kappa;
      summary["kappa_source"] = kappa.source;
      summary["broadcast"] = {{"bound_rounds", rep.bound_rounds},
                              {"within", rep.within},
                              {"timeouts", rep.timeouts},
                              {"fraction_within", rep.fraction_within}};
      auto out = open_out(out_dir / "replications.csv");
      out << "replication,cover_time\n";
      for (std::size_t r = 0; r < rep.replications; ++r) out << r << ',' << rep.cover_times[r] << '\n';
      break;
    }
    case ExperimentKind::calibrate_kappa: {
      const auto est = estimate_kappa(law, cfg.graph.m, cfg.calibration.replications, cfg.calibration.max_rounds,
                                      cfg.seed, threads);
      write_kappa_file(out_dir / "kappa.json", cfg, est);
      summary["kappa_used"] = est.kappa;
      summary["calibration"] = {{"quantile_rounds", est.quantile_rounds},
                                {"replications", est.replications},
                                {"timeouts", est.timeouts}};
      break;
    }
  }
  write_json(out_dir / "summary.json", summary);
  return summary;
}

}  // namespace banditmesh
