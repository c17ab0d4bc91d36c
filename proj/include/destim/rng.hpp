#pragma once

#include <cstdint>

namespace destim {

// Splittable counter-derived 64-bit generator (splitmix64 core). Streams are
// derived from (seed, tag, id) so machines and trials get independent streams
// without shared state. Replaying the same seed reproduces every draw exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Derives an independent stream keyed by (master, tag, id).
  static Rng derive(std::uint64_t master, std::uint64_t tag, std::uint64_t id = 0);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53 random bits.
  double next_unit();

  // Uniform in (0, 1], never exactly 0 (safe for log()).
  double next_unit_open();

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double next_gaussian();

  // Uniform integer in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound);

  // Exact Binomial(n, p) sample. Inversion for small n*p, Hormann's BTRS
  // transformed-rejection otherwise. Both routes are exact samplers.
  long long next_binomial(long long n, double p);

 private:
  std::uint64_t state_;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;

  long long binomial_inversion(long long n, double p);
  long long binomial_btrs(long long n, double p);
};

// Stream tags used across the project. Distinct tags keep the public stream,
// per-machine private streams and per-trial streams pairwise independent.
namespace stream_tag {
inline constexpr std::uint64_t kPublic = 0x7075626c69637374ULL;
inline constexpr std::uint64_t kPrivate = 0x7072697661746573ULL;
inline constexpr std::uint64_t kTrial = 0x747269616c737472ULL;
inline constexpr std::uint64_t kNoise = 0x6e6f697365737472ULL;
}  // namespace stream_tag

}  // namespace destim
