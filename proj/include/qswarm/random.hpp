#ifndef QSWARM_RANDOM_HPP_
#define QSWARM_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace qswarm {

// splitmix64 finalizer (Steele, Lea, Flood 2014):
//   z += 0x9E3779B97F4A7C15
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z ^= z >> 31
constexpr std::uint64_t SplitMix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seed for replication `rep` at sweep point `point`:
//   SplitMix64(master ^ SplitMix64((point << 32) | rep)).
constexpr std::uint64_t DeriveRunSeed(std::uint64_t master, std::uint64_t point,
                                      std::uint64_t rep) {
  return SplitMix64(master ^ SplitMix64((point << 32) | (rep & 0xFFFFFFFFULL)));
}

// Stream for agent `id` within one run: SplitMix64(run_seed + id).
constexpr std::uint64_t DeriveAgentSeed(std::uint64_t run_seed, int id) {
  return SplitMix64(run_seed + static_cast<std::uint64_t>(id));
}

// mt19937_64 with a portable uniform draw: the top 53 bits scaled to [0,1).
// std::uniform_real_distribution is not bit-stable across standard
// libraries, so it is not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  std::uint64_t Next() { return engine_(); }
  // Uniform integer in [0, n) by rejection sampling.
  std::uint64_t Below(std::uint64_t n);

  bool operator==(const Rng&) const = default;

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t Rng::Below(std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

}  // namespace qswarm

#endif  // QSWARM_RANDOM_HPP_
