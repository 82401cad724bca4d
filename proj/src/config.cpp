#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "banditmesh/error.hpp"
#include "banditmesh/harness.hpp"

namespace banditmesh {

using nlohmann::json;

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::mom, "mom"},
    {ExperimentKind::hub_size, "hub-size"},
    {ExperimentKind::hub_recurrence, "hub-recurrence"},
    {ExperimentKind::broadcast_delay, "broadcast-delay"},
    {ExperimentKind::homog_regret, "homog-regret"},
    {ExperimentKind::heterog_regret, "heterog-regret"},
    {ExperimentKind::calibrate_kappa, "calibrate-kappa"},
};

// Reads one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  Section child(const std::string& key) {
    static const json empty = json::object();
    if (!has(key)) return Section(empty, where(key));
    return Section(j_.at(key), where(key));
  }

  [[nodiscard]] std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError("unknown configuration key '" + where(item.key()) + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::size_t get_count(Section& s, const std::string& key, std::size_t fallback, std::size_t minimum) {
  const auto v = s.get<std::int64_t>(key, static_cast<std::int64_t>(fallback));
  if (v < static_cast<std::int64_t>(minimum)) {
    throw ConfigError(s.where(key) + " must be >= " + std::to_string(minimum));
  }
  return static_cast<std::size_t>(v);
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + ": expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

void parse_bandit(Section s, BanditSection& b, std::size_t m) {
  const bool k_given = s.has("K");
  b.k = get_count(s, "K", b.k, 1);
  b.horizon = get_count(s, "T", b.horizon, 1);
  b.epsilon = s.get<double>("epsilon", b.epsilon);
  b.rho = s.get<double>("rho", b.rho);
  b.scale = s.get<double>("scale", b.scale);
  b.kind = parse_reward_kind(s.get<std::string>("reward_kind", std::string(to_string(b.kind))));
  const double best_mean = s.get<double>("best_mean", 0.5);
  const bool has_means = s.has("means");
  const bool has_gaps = s.has("gaps");
  if (has_means && has_gaps) throw ConfigError(s.where("means") + " and gaps are mutually exclusive");

  std::vector<double> row;
  if (has_means) {
    const json& raw = s.raw("means");
    if (raw.is_array() && !raw.empty() && raw.front().is_array()) {
      if (raw.size() != m) {
        throw ConfigError(s.where("means") + ": matrix must have one row per client (" + std::to_string(m) + ")");
      }
      std::vector<double> matrix;
      std::size_t width = 0;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto r = number_list(raw[i], s.where("means") + "[" + std::to_string(i) + "]");
        if (i == 0) width = r.size();
        if (r.size() != width) throw ConfigError(s.where("means") + ": rows differ in length");
        matrix.insert(matrix.end(), r.begin(), r.end());
      }
      if (k_given && width != b.k) throw ConfigError(s.where("K") + " disagrees with the width of means");
      b.k = width;
      b.means = std::move(matrix);
      s.finish();
      return;
    }
    row = number_list(raw, s.where("means"));
  } else if (has_gaps) {
    for (double g : number_list(s.raw("gaps"), s.where("gaps"))) {
      if (g < 0.0) throw ConfigError(s.where("gaps") + ": gaps must be >= 0");
      row.push_back(best_mean - g);
    }
  } else {
    for (std::size_t i = 0; i < b.k; ++i) row.push_back(best_mean - 0.1 * static_cast<double>(i));
  }
  if (k_given && row.size() != b.k) throw ConfigError(s.where("K") + " disagrees with the number of arm means");
  b.k = row.size();
  b.means.clear();
  for (std::size_t i = 0; i < m; ++i) b.means.insert(b.means.end(), row.begin(), row.end());
  s.finish();
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  std::string valid;
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
    valid += (valid.empty() ? "" : ", ") + std::string(name);
  }
  throw ConfigError("unknown experiment '" + std::string(text) + "' (valid: " + valid + ")");
}

const std::vector<ExperimentKind>& all_experiment_kinds() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> v;
    for (const auto& [k, name] : kKindNames) v.push_back(k);
    return v;
  }();
  return kinds;
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  Section root(j, "");
  if (!root.has("experiment")) throw ConfigError("missing required key 'experiment'");
  cfg.kind = parse_experiment_kind(root.get<std::string>("experiment", ""));
  cfg.seed = root.get<std::uint64_t>("seed", cfg.seed);
  cfg.replications = get_count(root, "replications", cfg.replications, 1);
  cfg.threads = get_count(root, "threads", cfg.threads, 0);
  cfg.output = root.get<std::string>("output", cfg.output);

  {
    Section s = root.child("graph");
    cfg.graph.m = get_count(s, "M", cfg.graph.m, 1);
    cfg.graph.alpha = s.get<double>("alpha", cfg.graph.alpha);
    cfg.graph.c_h = s.get<double>("c_h", cfg.graph.c_h);
    cfg.graph.zeta = s.get<double>("zeta", cfg.graph.zeta);
    cfg.graph.sampler = parse_edge_sampler(s.get<std::string>("sampler", "skip"));
    s.finish();
    WeightLaw{cfg.graph.alpha, cfg.graph.c_h}.validate();
    if (!(cfg.graph.zeta > 0.0 && cfg.graph.zeta < 1.0)) throw ConfigError("graph.zeta must lie in (0, 1)");
  }
  parse_bandit(root.child("bandit"), cfg.bandit, cfg.graph.m);
  {
    Section s = root.child("algorithm");
    cfg.algorithm.options.gate = s.get<bool>("gate", false);
    cfg.algorithm.options.mom_mode = parse_mom_mode(s.get<std::string>("mom_mode", "contiguous"));
    cfg.algorithm.options.max_relay_rewards = get_count(s, "max_relay_rewards", 0, 0);
    if (s.has("kappa")) {
      const double kappa = s.get<double>("kappa", 0.0);
      if (!(kappa > 0.0)) throw ConfigError("algorithm.kappa must be > 0");
      cfg.algorithm.kappa = kappa;
    }
    cfg.algorithm.kappa_file = s.get<std::string>("kappa_file", "");
    cfg.algorithm.baseline = s.get<bool>("baseline", true);
    s.finish();
  }
  {
    Section s = root.child("calibration");
    cfg.calibration.replications = get_count(s, "replications", cfg.calibration.replications, 1);
    cfg.calibration.max_rounds = get_count(s, "max_rounds", cfg.calibration.max_rounds, 1);
    s.finish();
  }
  {
    Section s = root.child("mom");
    cfg.mom.n = get_count(s, "n", cfg.mom.n, 1);
    cfg.mom.delta = s.get<double>("delta", cfg.mom.delta);
    cfg.mom.trials = get_count(s, "trials", cfg.mom.trials, 1);
    cfg.mom.mean = s.get<double>("mean", cfg.mom.mean);
    s.finish();
    if (!(cfg.mom.delta > 0.0 && cfg.mom.delta < 1.0)) throw ConfigError("mom.delta must lie in (0, 1)");
  }
  {
    Section s = root.child("broadcast");
    cfg.broadcast.factor = s.get<double>("factor", cfg.broadcast.factor);
    s.finish();
    if (!(cfg.broadcast.factor > 0.0)) throw ConfigError("broadcast.factor must be > 0");
  }
  {
    Section s = root.child("trace");
    cfg.trace.trace_csv = s.get<bool>("csv", cfg.trace.trace_csv);
    cfg.trace.edges_csv = s.get<bool>("edges", cfg.trace.edges_csv);
    cfg.trace.messages_csv = s.get<bool>("messages", cfg.trace.messages_csv);
    s.finish();
  }
  root.finish();
  (void)make_problem(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["experiment"] = to_string(cfg.kind);
  j["seed"] = cfg.seed;
  j["replications"] = cfg.replications;
  j["threads"] = cfg.threads;
  j["output"] = cfg.output;
  j["graph"] = {{"M", cfg.graph.m},
                {"alpha", cfg.graph.alpha},
                {"c_h", cfg.graph.c_h},
                {"zeta", cfg.graph.zeta},
                {"sampler", cfg.graph.sampler == EdgeSampler::skip ? "skip" : "dense"}};
  nlohmann::ordered_json means = nlohmann::ordered_json::array();
  for (std::size_t m = 0; m < cfg.graph.m; ++m) {
    means.push_back(std::vector<double>(cfg.bandit.means.begin() + static_cast<std::ptrdiff_t>(m * cfg.bandit.k),
                                        cfg.bandit.means.begin() + static_cast<std::ptrdiff_t>((m + 1) * cfg.bandit.k)));
  }
  j["bandit"] = {{"K", cfg.bandit.k},
                 {"T", cfg.bandit.horizon},
                 {"epsilon", cfg.bandit.epsilon},
                 {"rho", cfg.bandit.rho},
                 {"scale", cfg.bandit.scale},
                 {"reward_kind", to_string(cfg.bandit.kind)},
                 {"means", means}};
  j["algorithm"] = {{"gate", cfg.algorithm.options.gate},
                    {"mom_mode", cfg.algorithm.options.mom_mode == MomMode::streaming ? "streaming" : "contiguous"},
                    {"max_relay_rewards", cfg.algorithm.options.max_relay_rewards},
                    {"kappa", cfg.algorithm.kappa ? nlohmann::ordered_json(*cfg.algorithm.kappa) : nullptr},
                    {"kappa_file", cfg.algorithm.kappa_file},
                    {"baseline", cfg.algorithm.baseline}};
  j["calibration"] = {{"replications", cfg.calibration.replications}, {"max_rounds", cfg.calibration.max_rounds}};
  j["mom"] = {{"n", cfg.mom.n}, {"delta", cfg.mom.delta}, {"trials", cfg.mom.trials}, {"mean", cfg.mom.mean}};
  j["broadcast"] = {{"factor", cfg.broadcast.factor}};
  j["trace"] = {{"csv", cfg.trace.trace_csv}, {"edges", cfg.trace.edges_csv}, {"messages", cfg.trace.messages_csv}};
  return j;
}

ProblemSpec make_problem(const ExperimentConfig& cfg) {
  return ProblemSpec{WeightLaw{cfg.graph.alpha, cfg.graph.c_h},
                     cfg.graph.m,
                     cfg.bandit.horizon,
                     cfg.graph.zeta,
                     cfg.graph.sampler,
                     RewardModel(cfg.bandit.kind, cfg.graph.m, cfg.bandit.k, cfg.bandit.means, cfg.bandit.epsilon,
                                 cfg.bandit.rho, cfg.bandit.scale)};
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BANDITMESH_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError("BANDITMESH_THREADS must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return 1;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace banditmesh
