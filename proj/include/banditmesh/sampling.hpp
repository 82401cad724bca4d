#pragma once

// Seedable random streams and the weight / reward laws used by the simulator.
//
// Every random quantity in a run is drawn from a counter-based Philox4x32-10
// stream keyed by (seed, replication, purpose). Two streams with different
// keys never overlap, and a stream can be positioned at any counter value,
// which is how rewards are keyed by (client, arm, pull index).

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace banditmesh {

/// Philox4x32-10 block function (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// What a stream is used for. Distinct purposes never share random numbers.
enum class Purpose : std::uint32_t {
  weights = 1,
  graph = 2,
  rewards = 3,
  protocol = 4,
  calibration = 5,
  verification = 6,
  test = 7,
};

struct StreamId {
  std::uint64_t replication = 0;
  Purpose purpose = Purpose::test;
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamId id) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  double gaussian() noexcept;

  /// Copy of this stream restarted at counter (hi, lo).
  [[nodiscard]] RngStream positioned(std::uint64_t hi, std::uint64_t lo) const noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] StreamId id() const noexcept { return id_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  StreamId id_;
  Philox4x32::Key key_{};
  std::uint64_t counter_hi_ = 0;
  std::uint64_t counter_lo_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

// ---------------------------------------------------------------------------
// Weight law

/// Shifted Pareto P(h > x) = (c_h / x)^alpha for x >= c_h.
struct WeightLaw {
  double alpha = 1.5;
  double c_h = 1.0;

  /// Mean of the law, c_h * alpha / (alpha - 1).
  [[nodiscard]] double theta() const;
  /// Throws ConfigError unless alpha > 1 and c_h > 0.
  void validate() const;
};

std::vector<double> sample_weights(const WeightLaw& law, std::size_t m, RngStream& rng);

// ---------------------------------------------------------------------------
// Reward model

enum class RewardKind { pareto_shifted, student_t_like, gaussian, bernoulli };

std::string_view to_string(RewardKind kind) noexcept;
RewardKind parse_reward_kind(std::string_view text);

/// Reward laws with per-(client, arm) means and a shared noise shape.
///
/// pareto-shifted: mean + S * Y where S is a fair sign and Y is Lomax with
///   shape 1 + 2 epsilon and the configured scale. The (1+eps)-th absolute
///   moment is finite, the variance is infinite for eps <= 0.5.
/// student-t-like: mean + scale * T with T Student-t, dof 1 + 2 epsilon.
/// gaussian: mean + scale * Z.
/// bernoulli: {0, 1} with P(1) = mean; scale unused.
class RewardModel {
 public:
  /// `means` is row-major clients x arms. A non-positive scale means "pick the
  /// scale whose centered (1+eps)-th moment equals rho".
  RewardModel(RewardKind kind, std::size_t clients, std::size_t arms, std::vector<double> means,
              double epsilon, double rho, double scale = 0.0);

  [[nodiscard]] RewardKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t clients() const noexcept { return clients_; }
  [[nodiscard]] std::size_t arms() const noexcept { return arms_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
  [[nodiscard]] double rho() const noexcept { return rho_; }
  [[nodiscard]] double scale() const noexcept { return scale_; }
  [[nodiscard]] double mean(std::size_t client, std::size_t arm) const;
  [[nodiscard]] const std::vector<double>& means() const noexcept { return means_; }
  [[nodiscard]] bool is_homogeneous() const noexcept;

 private:
  RewardKind kind_;
  std::size_t clients_;
  std::size_t arms_;
  std::vector<double> means_;
  double epsilon_;
  double rho_;
  double scale_;
};

double sample_reward(const RewardModel& model, std::size_t client, std::size_t arm, RngStream& rng);

/// Exact E|r - mu|^{1+eps} for the (client, arm) law.
double analytic_moment(const RewardModel& model, std::size_t client, std::size_t arm);

/// Common-random-number reward source: the n-th pull of arm k by client m
/// always yields the same value for a given (seed, replication).
class RewardSource {
 public:
  RewardSource(const RewardModel& model, std::uint64_t seed, std::uint64_t replication);

  [[nodiscard]] double draw(std::size_t client, std::size_t arm, std::uint64_t pull_index) const;
  [[nodiscard]] const RewardModel& model() const noexcept { return *model_; }

 private:
  const RewardModel* model_;
  RngStream base_;
};

}  // namespace banditmesh
