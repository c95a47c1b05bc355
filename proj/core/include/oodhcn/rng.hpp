#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace oodhcn {

// Counter-based generator. The n-th draw is a pure function of (key, n), so
// streams with distinct keys are independent and a stream can be recreated
// anywhere from its key alone. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform over {0, ..., n - 1}; n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  // Inclusive bounds.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Standard normal via Box-Muller; consumes two draws.
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace oodhcn
