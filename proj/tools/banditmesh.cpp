#include <CLI11.hpp>

#include <iostream>

#include "banditmesh/error.hpp"
#include "banditmesh/harness.hpp"

using namespace banditmesh;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<std::size_t> threads;
  std::string out;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--replications", o.replications, "Number of replications")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory (overrides the config)");
  cmd->add_option("--threads", o.threads, "Worker threads (default: BANDITMESH_THREADS or 1)")
      ->check(CLI::PositiveNumber);
}

ExperimentConfig apply(ExperimentConfig cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.replications) cfg.replications = *o.replications;
  if (o.threads) cfg.threads = *o.threads;
  if (!o.out.empty()) cfg.output = o.out;
  return cfg;
}

void print_summary(const nlohmann::ordered_json& summary, const std::filesystem::path& out_dir) {
  nlohmann::ordered_json brief = summary;
  brief.erase("config");
  if (brief.contains("regret")) brief["regret"].erase("per_replication");
  if (brief.contains("baseline")) brief["baseline"]["regret"].erase("per_replication");
  std::cout << brief.dump(2) << '\n' << "wrote " << out_dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized heavy-tailed bandits over sparse random graphs"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_o;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  add_overrides(run, run_o);

  Overrides cal_o;
  auto* cal = app.add_subcommand("calibrate-kappa", "Estimate the broadcast constant kappa and save it");
  cal->add_option("config", config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  add_overrides(cal, cal_o);

  auto* list = app.add_subcommand("list-experiments", "Print the experiment kinds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (ExperimentKind k : all_experiment_kinds()) std::cout << to_string(k) << '\n';
      return 0;
    }
    if (*run) {
      const ExperimentConfig cfg = apply(load_config(config_path), run_o);
      const auto summary = run_experiment(cfg, cfg.output);
      print_summary(summary, cfg.output);
      return 0;
    }
    ExperimentConfig cfg = apply(load_config(config_path), cal_o);
    cfg.kind = ExperimentKind::calibrate_kappa;
    const auto summary = run_experiment(cfg, cfg.output);
    if (!cfg.algorithm.kappa_file.empty()) {
      std::filesystem::path target = cfg.algorithm.kappa_file;
      if (target.is_relative()) target = cfg.base_dir / target;
      std::filesystem::copy_file(std::filesystem::path(cfg.output) / "kappa.json", target,
                                 std::filesystem::copy_options::overwrite_existing);
      std::cout << "kappa file " << target.string() << '\n';
    }
    print_summary(summary, cfg.output);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
