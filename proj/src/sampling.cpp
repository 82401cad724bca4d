#include "banditmesh/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "banditmesh/error.hpp"

namespace banditmesh {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

// E|X|^q for the unit-scale noise of each law (X centered at 0).
double unit_abs_moment(RewardKind kind, double epsilon) {
  const double q = 1.0 + epsilon;
  switch (kind) {
    case RewardKind::pareto_shifted: {
      // Lomax(shape beta, scale 1): E Y^q = Gamma(q+1) Gamma(beta-q) / Gamma(beta).
      const double beta = 1.0 + 2.0 * epsilon;
      return std::exp(std::lgamma(q + 1.0) + std::lgamma(beta - q) - std::lgamma(beta));
    }
    case RewardKind::student_t_like: {
      const double nu = 1.0 + 2.0 * epsilon;
      return std::exp(0.5 * q * std::log(nu) + std::lgamma(0.5 * (q + 1.0)) + std::lgamma(0.5 * (nu - q)) -
                      0.5 * std::log(std::numbers::pi) - std::lgamma(0.5 * nu));
    }
    case RewardKind::gaussian:
      return std::exp(0.5 * q * std::log(2.0) + std::lgamma(0.5 * (q + 1.0)) - 0.5 * std::log(std::numbers::pi));
    case RewardKind::bernoulli:
      break;
  }
  throw UnsupportedModelError("reward kind has no scale-family moment");
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, StreamId id) noexcept : seed_(seed), id_(id) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ id.replication);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(id.purpose) << 40));
  key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

void RngStream::refill() noexcept {
  const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(counter_lo_), static_cast<std::uint32_t>(counter_lo_ >> 32),
                                   static_cast<std::uint32_t>(counter_hi_), static_cast<std::uint32_t>(counter_hi_ >> 32)};
  const auto out = Philox4x32::generate(ctr, key_);
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  buffered_ = 2;
  if (++counter_lo_ == 0) ++counter_hi_;
}

std::uint64_t RngStream::next_u64() noexcept {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double RngStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * kTwoPow53Inv;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) noexcept {
  // Lemire's multiply-shift with rejection keeps the result unbiased.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::gaussian() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::positioned(std::uint64_t hi, std::uint64_t lo) const noexcept {
  RngStream copy = *this;
  copy.counter_hi_ = hi;
  copy.counter_lo_ = lo;
  copy.buffered_ = 0;
  return copy;
}

// ---------------------------------------------------------------------------

double WeightLaw::theta() const {
  validate();
  return c_h * alpha / (alpha - 1.0);
}

void WeightLaw::validate() const {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ConfigError("weight law: alpha must be > 1");
  if (!(c_h > 0.0) || !std::isfinite(c_h)) throw ConfigError("weight law: c_h must be > 0");
}

std::vector<double> sample_weights(const WeightLaw& law, std::size_t m, RngStream& rng) {
  law.validate();
  if (m == 0) throw ConfigError("sample_weights: client count must be >= 1");
  std::vector<double> weights(m);
  const double inv_alpha = 1.0 / law.alpha;
  for (auto& w : weights) {
    // u in (0,1) so w > c_h; the max() only guards against rounding at u ~ 1.
    w = std::max(law.c_h, law.c_h * std::pow(rng.uniform(), -inv_alpha));
  }
  return weights;
}

// ---------------------------------------------------------------------------

std::string_view to_string(RewardKind kind) noexcept {
  switch (kind) {
    case RewardKind::pareto_shifted: return "pareto-shifted";
    case RewardKind::student_t_like: return "student-t-like";
    case RewardKind::gaussian: return "gaussian";
    case RewardKind::bernoulli: return "bernoulli";
  }
  return "unknown";
}

RewardKind parse_reward_kind(std::string_view text) {
  for (auto kind : {RewardKind::pareto_shifted, RewardKind::student_t_like, RewardKind::gaussian, RewardKind::bernoulli}) {
    if (to_string(kind) == text) return kind;
  }
  throw ConfigError("unknown reward kind '" + std::string(text) +
                    "' (valid: pareto-shifted, student-t-like, gaussian, bernoulli)");
}

RewardModel::RewardModel(RewardKind kind, std::size_t clients, std::size_t arms, std::vector<double> means,
                         double epsilon, double rho, double scale)
    : kind_(kind), clients_(clients), arms_(arms), means_(std::move(means)), epsilon_(epsilon), rho_(rho), scale_(scale) {
  if (clients_ == 0 || arms_ == 0) throw ConfigError("reward model: clients and arms must be >= 1");
  if (means_.size() != clients_ * arms_) throw ConfigError("reward model: means matrix must be clients x arms");
  if (!(epsilon_ > 0.0 && epsilon_ <= 1.0)) throw ConfigError("reward model: epsilon must lie in (0, 1]");
  if (!(rho_ > 0.0) || !std::isfinite(rho_)) throw ConfigError("reward model: rho must be > 0");
  for (double mu : means_) {
    if (!std::isfinite(mu)) throw ConfigError("reward model: means must be finite");
    if (kind_ == RewardKind::bernoulli && (mu < 0.0 || mu > 1.0)) {
      throw ConfigError("reward model: bernoulli means must lie in [0, 1]");
    }
  }
  if (kind_ != RewardKind::bernoulli && !(scale_ > 0.0)) {
    scale_ = std::pow(rho_ / unit_abs_moment(kind_, epsilon_), 1.0 / (1.0 + epsilon_));
  }
  for (std::size_t m = 0; m < clients_; ++m) {
    for (std::size_t k = 0; k < arms_; ++k) {
      const double moment = analytic_moment(*this, m, k);
      if (moment > rho_ * (1.0 + 1e-12)) {
        throw ConfigError("reward model: centered (1+eps)-moment " + std::to_string(moment) + " of client " +
                          std::to_string(m) + " arm " + std::to_string(k) + " exceeds rho");
      }
    }
  }
}

double RewardModel::mean(std::size_t client, std::size_t arm) const {
  if (client >= clients_ || arm >= arms_) throw UsageError("reward model: index out of range");
  return means_[client * arms_ + arm];
}

bool RewardModel::is_homogeneous() const noexcept {
  for (std::size_t m = 1; m < clients_; ++m) {
    for (std::size_t k = 0; k < arms_; ++k) {
      if (means_[m * arms_ + k] != means_[k]) return false;
    }
  }
  return true;
}

double sample_reward(const RewardModel& model, std::size_t client, std::size_t arm, RngStream& rng) {
  const double mu = model.mean(client, arm);
  const double eps = model.epsilon();
  switch (model.kind()) {
    case RewardKind::pareto_shifted: {
      const double beta = 1.0 + 2.0 * eps;
      const double magnitude = model.scale() * (std::pow(rng.uniform(), -1.0 / beta) - 1.0);
      return rng.uniform() < 0.5 ? mu - magnitude : mu + magnitude;
    }
    case RewardKind::student_t_like: {
      // Bailey's polar method.
      const double nu = 1.0 + 2.0 * eps;
      for (;;) {
        const double u = 2.0 * rng.uniform() - 1.0;
        const double v = 2.0 * rng.uniform() - 1.0;
        const double w = u * u + v * v;
        if (w > 0.0 && w <= 1.0) {
          const double t = u * std::sqrt(nu * (std::pow(w, -2.0 / nu) - 1.0) / w);
          return mu + model.scale() * t;
        }
      }
    }
    case RewardKind::gaussian:
      return mu + model.scale() * rng.gaussian();
    case RewardKind::bernoulli:
      return rng.uniform() < mu ? 1.0 : 0.0;
  }
  return mu;
}

double analytic_moment(const RewardModel& model, std::size_t client, std::size_t arm) {
  const double q = 1.0 + model.epsilon();
  if (model.kind() == RewardKind::bernoulli) {
    const double p = model.mean(client, arm);
    return p * std::pow(1.0 - p, q) + (1.0 - p) * std::pow(p, q);
  }
  if (client >= model.clients() || arm >= model.arms()) throw UsageError("analytic_moment: index out of range");
  return std::pow(model.scale(), q) * unit_abs_moment(model.kind(), model.epsilon());
}

RewardSource::RewardSource(const RewardModel& model, std::uint64_t seed, std::uint64_t replication)
    : model_(&model), base_(seed, {replication, Purpose::rewards}) {}

double RewardSource::draw(std::size_t client, std::size_t arm, std::uint64_t pull_index) const {
  if (client >= model_->clients() || arm >= model_->arms()) throw UsageError("reward source: index out of range");
  // 2^20 blocks per pull leaves room for the rejection sampler.
  RngStream rng = base_.positioned((static_cast<std::uint64_t>(client) << 32) | arm, pull_index << 20);
  return sample_reward(*model_, client, arm, rng);
}

}  // namespace banditmesh
