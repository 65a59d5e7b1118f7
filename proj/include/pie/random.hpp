#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pie {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Folds a list of stream coordinates (seed, user, day, purpose, ...) into a
// single seed. Independent of call order across users.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

inline Rng make_stream(std::initializer_list<std::uint64_t> parts) {
  return Rng(derive_seed(parts));
}

// Purpose tags keep streams for different draws from colliding.
namespace stream {
inline constexpr std::uint64_t kWorld = 1;
inline constexpr std::uint64_t kBootstrap = 2;
inline constexpr std::uint64_t kServe = 3;
inline constexpr std::uint64_t kBandit = 4;
inline constexpr std::uint64_t kCorpus = 5;
inline constexpr std::uint64_t kPartition = 6;
inline constexpr std::uint64_t kBlend = 7;
}  // namespace stream

inline double sample_beta(double alpha, double beta, Rng& rng) {
  std::gamma_distribution<double> ga(alpha, 1.0);
  std::gamma_distribution<double> gb(beta, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y <= 0.0) return 0.5;
  return x / (x + y);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace pie
