#pragma once

#include <cstdint>
#include <limits>

namespace mixstat {

// Identifies one independent random stream: (master seed, replication, stream).
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  std::uint64_t stream = 0;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

// Counter-based generator. The n-th output is a pure function of (key, n), so
// a replication's draws never depend on which thread produced them or on what
// other replications did. Models UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng() : CounterRng(StreamKey{}) {}
  explicit CounterRng(const StreamKey& key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    return mix64(key_ + kGamma * ++counter_);
  }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t counter() const noexcept { return counter_; }

  // Derived child stream; does not advance this generator.
  CounterRng split(std::uint64_t child) const;

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace mixstat
