#include "grove/random.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace grove {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("uniform_index bound must be positive");
  }
  __uint128_t product = static_cast<__uint128_t>(next()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<__uint128_t>(next()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

double Rng::normal() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

BagRecord bootstrap(std::size_t n, Rng& rng) {
  if (n == 0) {
    throw std::invalid_argument("bootstrap needs at least one sample");
  }
  BagRecord bag;
  bag.inbag_counts.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++bag.inbag_counts[rng.uniform_index(n)];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (bag.inbag_counts[i] == 0) {
      bag.oob_indices.push_back(static_cast<std::uint32_t>(i));
    }
  }
  return bag;
}

std::vector<std::uint32_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  if (k > n) {
    throw std::invalid_argument("cannot draw " + std::to_string(k) + " of " + std::to_string(n) +
                                " without replacement");
  }
  std::vector<std::uint32_t> selected;
  selected.reserve(k);
  for (std::size_t t = 0; t < n && selected.size() < k; ++t) {
    const auto remaining = static_cast<double>(n - t);
    const auto needed = static_cast<double>(k - selected.size());
    if (remaining * rng.uniform01() < needed) {
      selected.push_back(static_cast<std::uint32_t>(t));
    }
  }
  return selected;
}

}  // namespace grove
