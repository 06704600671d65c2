#ifndef NETUM_RNG_HPP
#define NETUM_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <random>

namespace netum {

/// Seeded mt19937_64 with sampling helpers that are bit-reproducible across
/// standard library implementations (std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, count) by rejection, no modulo bias.
  std::size_t uniform_index(std::size_t count) {
    const std::uint64_t range = count;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range + 1) % range;
    std::uint64_t draw = next();
    while (draw > limit) draw = next();
    return static_cast<std::size_t>(draw % range);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Independent child stream; advances this generator.
  Rng split() {
    std::seed_seq seq{static_cast<std::uint32_t>(next()),
                      static_cast<std::uint32_t>(next()),
                      static_cast<std::uint32_t>(next()),
                      static_cast<std::uint32_t>(next())};
    Rng child(0);
    child.engine_.seed(seq);
    return child;
  }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace netum

#endif  // NETUM_RNG_HPP
