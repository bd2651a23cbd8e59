#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace memlog {

// mt19937_64 with portable bounded draws (the std distributions are not
// specified bit-exactly across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }
  // Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  // Uniform in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return unit() < p; }
  // Exponential with the given rate (events per unit).
  double exponential(double rate);

 private:
  std::mt19937_64 gen_;
};

// Zipf over [0, n) with exponent theta; theta = 0 is uniform.
class Zipf {
 public:
  Zipf(std::uint64_t n, double theta);
  std::uint64_t sample(Rng& rng) const;
  std::uint64_t size() const { return n_; }

 private:
  std::uint64_t n_;
  double theta_;
  std::vector<double> cdf_;
};

}  // namespace memlog
