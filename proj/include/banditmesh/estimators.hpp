#pragma once

// Median-of-means estimation and the heavy-tailed UCB index.
// All logarithms are natural.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace banditmesh {

struct MomConfig {
  std::size_t batches = 1;
};

/// Batch count actually used for n samples: min{B, floor(n/2)} for n >= 2, else 1.
std::size_t effective_batches(std::size_t n, std::size_t batches);

/// ceil(8 log(e^{1/8} T)), at least 1: the per-run batch count for horizon T.
std::size_t batches_for_horizon(std::size_t horizon);

/// floor(8 log(e^{1/8} / delta)), at least 1: the batch count for confidence delta.
std::size_t batches_for_confidence(double delta);

/// Median of the means of k contiguous batches of size floor(n/k) taken in
/// order from the front; trailing samples beyond k * floor(n/k) are ignored.
/// Even k uses the midpoint of the two central batch means.
double median_of_means(std::span<const double> samples, MomConfig cfg);

enum class MomMode {
  /// Exact contiguous batching as in median_of_means.
  contiguous,
  /// Once n >= 2B, sample s goes to batch s mod B.
  streaming,
};

MomMode parse_mom_mode(std::string_view text);

/// Append-only reward log with O(B) median-of-means queries.
///
/// Contiguous queries use long-double prefix sums so batch sums are O(1).
/// Streaming mode keeps round-robin batch sums fixed at `batches` batches.
class RewardLog {
 public:
  explicit RewardLog(std::size_t batches = 1, MomMode mode = MomMode::contiguous);

  void append(double value);
  [[nodiscard]] std::size_t size() const noexcept { return prefix_.size() - 1; }
  [[nodiscard]] bool empty() const noexcept { return size() == 0; }
  [[nodiscard]] double value(std::size_t index) const;
  [[nodiscard]] double mean() const;
  /// Median-of-means estimate; 0 for an empty log.
  [[nodiscard]] double estimate() const;
  [[nodiscard]] std::size_t batches() const noexcept { return batches_; }
  [[nodiscard]] MomMode mode() const noexcept { return mode_; }

 private:
  std::size_t batches_;
  MomMode mode_;
  std::vector<long double> prefix_;
  std::vector<long double> rr_sums_;
  std::vector<std::size_t> rr_counts_;
};

/// Constants of the UCB index and its analysis radius.
struct UcbParams {
  double rho = 1.0;
  double epsilon = 1.0;
  /// Exploration constant used by the index.
  double c = 1.0;
  /// Median-of-means constant used only in analysis radii.
  double big_c = 1.0;

  /// c = (16 log(2 e^{1/8}))^{eps/(1+eps)}, C = 12^{1/(1+eps)}.
  static UcbParams from_theory(double rho, double epsilon);
};

/// (12 rho)^{1/(1+eps)} (16 log(e^{1/8}/delta) / n)^{eps/(1+eps)}.
double mom_radius(std::size_t n, double delta, const UcbParams& p);

/// mean + rho^{1/(1+eps)} (c log t / n)^{eps/(1+eps)}; +infinity when n == 0.
double ucb_index(double mean_estimate, std::uint64_t n_eff, std::uint64_t t, const UcbParams& p);

/// Argmax of ucb_index over arms, ties to the smallest index.
std::size_t argmax_ucb(std::span<const double> estimates, std::span<const std::uint64_t> counts, std::uint64_t t,
                       const UcbParams& p);

}  // namespace banditmesh
