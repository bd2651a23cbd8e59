#include "memlog/rng.hpp"

#include <algorithm>
#include <cmath>

#include "memlog/error.hpp"

namespace memlog {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ConfigError("empty range");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = next();
  while (v >= limit) v = next();
  return v % n;
}

double Rng::exponential(double rate) {
  if (rate <= 0) throw ConfigError("exponential rate must be positive");
  return -std::log1p(-unit()) / rate;
}

Zipf::Zipf(std::uint64_t n, double theta) : n_(n), theta_(theta) {
  if (n == 0) throw ConfigError("zipf over an empty range");
  if (theta < 0) throw ConfigError("zipf exponent must be non-negative");
  if (theta_ == 0) return;
  cdf_.resize(n);
  double sum = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    sum += 1.0 / std::pow(static_cast<double>(i + 1), theta_);
    cdf_[i] = sum;
  }
  for (auto& c : cdf_) c /= sum;
  cdf_.back() = 1.0;
}

std::uint64_t Zipf::sample(Rng& rng) const {
  if (theta_ == 0) return rng.below(n_);
  const double u = rng.unit();
  return static_cast<std::uint64_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
}

}  // namespace memlog
