#include "destim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace destim {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t splitmix_step(std::uint64_t& s) {
  std::uint64_t z = (s += kGolden);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Rng Rng::derive(std::uint64_t master, std::uint64_t tag, std::uint64_t id) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix_step(s);
  s = h ^ (tag * 0xD1342543DE82EF95ULL);
  h = splitmix_step(s);
  s = h ^ ((id + 1) * 0xDABA0B6EB09322E3ULL);
  h = splitmix_step(s);
  return Rng(h);
}

std::uint64_t Rng::next_u64() { return splitmix_step(state_); }

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_unit_open() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  const double u1 = next_unit_open();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  cached_gaussian_ = r * std::sin(kTwoPi * u2);
  has_cached_gaussian_ = true;
  return r * std::cos(kTwoPi * u2);
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

long long Rng::next_binomial(long long n, double p) {
  if (n < 0 || p < 0.0 || p > 1.0 || !std::isfinite(p))
    throw std::invalid_argument("next_binomial: bad arguments");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - next_binomial(n, 1.0 - p);
  const double np = static_cast<double>(n) * p;
  if (np < 10.0) return binomial_inversion(n, p);
  return binomial_btrs(n, p);
}

long long Rng::binomial_inversion(long long n, double p) {
  // CDF inversion via the pmf recurrence; requires n*p small so (1-p)^n
  // stays well above underflow.
  const double q = 1.0 - p;
  const double ratio = p / q;
  double pmf = std::exp(static_cast<double>(n) * std::log(q));
  double cdf = pmf;
  const double u = next_unit();
  long long k = 0;
  while (u > cdf && k < n) {
    ++k;
    pmf *= ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
    cdf += pmf;
  }
  return k;
}

long long Rng::binomial_btrs(long long n, double p) {
  // Hormann (1993), "The generation of binomial random variates", BTRS.
  // Exact transformed-rejection sampler, valid for n*p >= 10 and p <= 1/2.
  const double nd = static_cast<double>(n);
  const double q = 1.0 - p;
  const double spq = std::sqrt(nd * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = nd * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double r_logit = p / q;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double m = std::floor((nd + 1.0) * p);

  for (;;) {
    double u = next_unit() - 0.5;
    double v = next_unit();
    const double us = 0.5 - std::fabs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + c);
    if (kd < 0.0 || kd > nd) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<long long>(kd);
    // Accept iff v * hat(k) <= pmf(k) / pmf(m), in log space with exact
    // factorials.
    v = std::log(v * alpha / (a / (us * us) + b));
    const double log_pmf_ratio =
        std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0) -
        std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
        (kd - m) * std::log(r_logit);
    if (v <= log_pmf_ratio) return static_cast<long long>(kd);
  }
}

}  // namespace destim
