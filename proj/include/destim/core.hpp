#pragma once

#include <cstdint>
#include <vector>

#include "destim/rng.hpp"

namespace destim {

// Task parameters: dimension d, machine budget m, samples per machine n,
// noise variance sigma2. Protocols may instantiate pools larger than m;
// m is the budget the bit/loss targets are expressed in.
struct ExperimentConfig {
  int d = 1;
  int m = 1;
  int n = 1;
  double sigma2 = 1.0;

  void validate() const;
};

using ParameterVector = std::vector<double>;

// Product prior over the mean vector, one of:
//   PointMass(theta)          - deterministic
//   UniformPlusMinus(delta)   - each coordinate +-delta with prob 1/2
//   GaussianPrior(delta2)     - each coordinate N(0, delta2), unbounded means
//   UniformInterval(lo, hi)   - each coordinate uniform on [lo, hi]
struct PriorSpec {
  enum class Kind { PointMass, UniformPlusMinus, GaussianPrior, UniformInterval };

  Kind kind = Kind::PointMass;
  ParameterVector point;
  double delta = 0.0;
  double delta2 = 0.0;
  double lo = -1.0;
  double hi = 1.0;

  static PriorSpec point_mass(ParameterVector theta);
  static PriorSpec uniform_pm(double delta);
  static PriorSpec gaussian(double delta2);
  static PriorSpec uniform_interval(double lo, double hi);

  // True when every draw lies in [-1, 1]^d.
  bool bounded() const;
};

// Full data tensor, indexed (machine j, sample k, coordinate i).
struct SampleSet {
  int machine_count = 0;
  int n = 0;
  int d = 0;
  std::vector<double> data;

  double& at(int j, int k, int i) {
    return data[(static_cast<std::size_t>(j) * n + k) * d + i];
  }
  double at(int j, int k, int i) const {
    return data[(static_cast<std::size_t>(j) * n + k) * d + i];
  }
};

// Per-machine sample means, row-major (machine, coordinate). Protocols in
// this model only ever read sample means, so this is the working currency.
struct MeanMatrix {
  long long machines = 0;
  int d = 0;
  std::vector<double> v;

  double at(long long j, int i) const {
    return v[static_cast<std::size_t>(j) * d + i];
  }
  double& at(long long j, int i) {
    return v[static_cast<std::size_t>(j) * d + i];
  }
};

// One public stream plus one private stream per machine, all derived from a
// single master seed.
struct RandomnessModel {
  std::uint64_t master_seed = 0;

  Rng public_stream() const {
    return Rng::derive(master_seed, stream_tag::kPublic);
  }
  Rng private_stream(long long machine) const {
    return Rng::derive(master_seed, stream_tag::kPrivate,
                       static_cast<std::uint64_t>(machine));
  }
  RandomnessModel for_trial(long long trial) const {
    Rng r = Rng::derive(master_seed, stream_tag::kTrial,
                        static_cast<std::uint64_t>(trial));
    return RandomnessModel{r.next_u64()};
  }
};

// Draws theta with i.i.d. coordinates from the per-coordinate prior.
ParameterVector draw_parameter(const PriorSpec& prior, int d, Rng& public_rng);

// Entry (j,k,i) = theta_i + sigma * Z with Z from machine j's private stream.
SampleSet sample_data(const ParameterVector& theta, long long machine_count,
                      int n, double sigma2, const RandomnessModel& rnd);

// Draws the per-machine sample means directly as N(theta, sigma2/n I_d) from
// the private streams. Distributionally identical to averaging sample_data;
// used where materializing the full tensor would dominate the runtime.
MeanMatrix sample_machine_means(const ParameterVector& theta,
                                long long machine_count, int n, double sigma2,
                                const RandomnessModel& rnd);

// Coordinate-wise average of one machine's n samples.
std::vector<double> sample_mean(const SampleSet& data, long long machine);

MeanMatrix machine_means(const SampleSet& data);

// Standard normal CDF, absolute error well below 1e-10.
double normal_cdf(double x);

// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

}  // namespace destim
