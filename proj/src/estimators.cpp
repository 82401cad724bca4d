#include "banditmesh/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "banditmesh/error.hpp"

namespace banditmesh {

namespace {

double median_in_place(std::vector<double>& values) {
  const std::size_t k = values.size();
  const std::size_t mid = k / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (k % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

std::size_t effective_batches(std::size_t n, std::size_t batches) {
  if (batches == 0) throw UsageError("median of means: batch count must be >= 1");
  if (n < 2) return 1;
  return std::min(batches, n / 2);
}

std::size_t batches_for_horizon(std::size_t horizon) {
  if (horizon == 0) throw UsageError("batches_for_horizon: horizon must be >= 1");
  const double b = std::ceil(8.0 * (0.125 + std::log(static_cast<double>(horizon))));
  return std::max<std::size_t>(1, static_cast<std::size_t>(b));
}

std::size_t batches_for_confidence(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("batches_for_confidence: delta must lie in (0, 1)");
  const double b = std::floor(8.0 * (0.125 - std::log(delta)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(b));
}

double median_of_means(std::span<const double> samples, MomConfig cfg) {
  if (samples.empty()) throw UsageError("median_of_means: samples must be non-empty");
  const std::size_t n = samples.size();
  const std::size_t k = effective_batches(n, cfg.batches);
  const std::size_t size = n / k;
  std::vector<double> means(k);
  for (std::size_t j = 0; j < k; ++j) {
    long double sum = 0.0L;
    for (std::size_t s = j * size; s < (j + 1) * size; ++s) sum += samples[s];
    means[j] = static_cast<double>(sum / static_cast<long double>(size));
  }
  return median_in_place(means);
}

MomMode parse_mom_mode(std::string_view text) {
  if (text == "contiguous") return MomMode::contiguous;
  if (text == "streaming") return MomMode::streaming;
  throw ConfigError("unknown mom_mode '" + std::string(text) + "' (valid: contiguous, streaming)");
}

RewardLog::RewardLog(std::size_t batches, MomMode mode)
    : batches_(batches), mode_(mode), prefix_{0.0L}, rr_sums_(batches, 0.0L), rr_counts_(batches, 0) {
  if (batches_ == 0) throw UsageError("reward log: batch count must be >= 1");
}

void RewardLog::append(double value) {
  const std::size_t index = size();
  prefix_.push_back(prefix_.back() + value);
  if (mode_ == MomMode::streaming) {
    rr_sums_[index % batches_] += value;
    ++rr_counts_[index % batches_];
  }
}

double RewardLog::value(std::size_t index) const {
  if (index >= size()) throw UsageError("reward log: index out of range");
  return static_cast<double>(prefix_[index + 1] - prefix_[index]);
}

double RewardLog::mean() const {
  if (empty()) return 0.0;
  return static_cast<double>(prefix_.back() / static_cast<long double>(size()));
}

double RewardLog::estimate() const {
  const std::size_t n = size();
  if (n == 0) return 0.0;
  std::vector<double> means;
  if (mode_ == MomMode::streaming && n >= 2 * batches_) {
    means.resize(batches_);
    for (std::size_t j = 0; j < batches_; ++j) {
      means[j] = static_cast<double>(rr_sums_[j] / static_cast<long double>(rr_counts_[j]));
    }
  } else {
    const std::size_t k = effective_batches(n, batches_);
    const std::size_t batch = n / k;
    means.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      const long double sum = prefix_[(j + 1) * batch] - prefix_[j * batch];
      means[j] = static_cast<double>(sum / static_cast<long double>(batch));
    }
  }
  return median_in_place(means);
}

UcbParams UcbParams::from_theory(double rho, double epsilon) {
  if (!(rho > 0.0)) throw ConfigError("ucb params: rho must be > 0");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("ucb params: epsilon must lie in (0, 1]");
  UcbParams p;
  p.rho = rho;
  p.epsilon = epsilon;
  p.c = std::pow(16.0 * (std::log(2.0) + 0.125), epsilon / (1.0 + epsilon));
  p.big_c = std::pow(12.0, 1.0 / (1.0 + epsilon));
  return p;
}

double mom_radius(std::size_t n, double delta, const UcbParams& p) {
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("mom_radius: delta must lie in (0, 1)");
  if (n == 0) throw UsageError("mom_radius: n must be >= 1");
  const double e = p.epsilon;
  return std::pow(12.0 * p.rho, 1.0 / (1.0 + e)) *
         std::pow(16.0 * (0.125 - std::log(delta)) / static_cast<double>(n), e / (1.0 + e));
}

double ucb_index(double mean_estimate, std::uint64_t n_eff, std::uint64_t t, const UcbParams& p) {
  if (n_eff == 0) return std::numeric_limits<double>::infinity();
  if (t < 2) throw UsageError("ucb_index: round must be >= 2 so that log t > 0");
  const double e = p.epsilon;
  return mean_estimate + std::pow(p.rho, 1.0 / (1.0 + e)) *
                             std::pow(p.c * std::log(static_cast<double>(t)) / static_cast<double>(n_eff), e / (1.0 + e));
}

std::size_t argmax_ucb(std::span<const double> estimates, std::span<const std::uint64_t> counts, std::uint64_t t,
                       const UcbParams& p) {
  if (estimates.empty() || estimates.size() != counts.size()) {
    throw UsageError("argmax_ucb: estimates and counts must be non-empty and of equal length");
  }
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (counts[i] == 0) return i;  // first unexplored arm wins via the +inf sentinel
    const double value = ucb_index(estimates[i], counts[i], t, p);
    if (value > best_value) {
      best = i;
      best_value = value;
    }
  }
  return best;
}

}  // namespace banditmesh
