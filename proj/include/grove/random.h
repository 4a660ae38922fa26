#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace grove {

// splitmix64 finalizer; the building block for deriving independent seeds.
std::uint64_t mix64(std::uint64_t x);

// Seed for stream `index` of a master seed. Tree t of a forest uses
// derive_seed(seed, t); permutation importance uses
// derive_seed(derive_seed(seed ^ kPermutationSalt, t), j).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

inline constexpr std::uint64_t kPermutationSalt = 0x7065726d75746521ULL;

// Deterministic random stream: std::mt19937_64 with portable bounded draws
// (the standard distributions differ between library implementations).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }

  // Uniform on [0, bound), bound >= 1. Lemire's multiply-shift with rejection.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (one value per two uniforms).
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

struct BagRecord {
  std::vector<std::uint32_t> inbag_counts;
  std::vector<std::uint32_t> oob_indices;  // ascending
};

// n draws with replacement.
BagRecord bootstrap(std::size_t n, Rng& rng);

// Knuth's Algorithm S: k distinct indices from [0, n) in ascending order.
std::vector<std::uint32_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

// Fisher-Yates shuffle in place.
template <typename T>
void permute(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(values[i - 1], values[j]);
  }
}

template <typename T>
std::vector<T> permuted(std::vector<T> values, Rng& rng) {
  permute(std::span<T>(values), rng);
  return values;
}

}  // namespace grove
