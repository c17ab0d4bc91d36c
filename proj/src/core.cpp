#include "destim/core.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <stdexcept>

namespace destim {

void ExperimentConfig::validate() const {
  if (d < 1 || m < 1 || n < 1)
    throw std::invalid_argument("config: d, m, n must be positive");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::invalid_argument("config: sigma2 must be positive and finite");
}

PriorSpec PriorSpec::point_mass(ParameterVector theta) {
  PriorSpec p;
  p.kind = Kind::PointMass;
  p.point = std::move(theta);
  return p;
}

PriorSpec PriorSpec::uniform_pm(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("prior: delta must be positive");
  PriorSpec p;
  p.kind = Kind::UniformPlusMinus;
  p.delta = delta;
  return p;
}

PriorSpec PriorSpec::gaussian(double delta2) {
  if (!(delta2 > 0.0)) throw std::invalid_argument("prior: delta2 must be positive");
  PriorSpec p;
  p.kind = Kind::GaussianPrior;
  p.delta2 = delta2;
  return p;
}

PriorSpec PriorSpec::uniform_interval(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("prior: lo must be below hi");
  PriorSpec p;
  p.kind = Kind::UniformInterval;
  p.lo = lo;
  p.hi = hi;
  return p;
}

bool PriorSpec::bounded() const {
  switch (kind) {
    case Kind::PointMass:
      for (double x : point)
        if (x < -1.0 || x > 1.0) return false;
      return true;
    case Kind::UniformPlusMinus:
      return delta <= 1.0;
    case Kind::GaussianPrior:
      return false;
    case Kind::UniformInterval:
      return lo >= -1.0 && hi <= 1.0;
  }
  return false;
}

ParameterVector draw_parameter(const PriorSpec& prior, int d, Rng& public_rng) {
  if (d < 1) throw std::invalid_argument("draw_parameter: d must be positive");
  ParameterVector theta(static_cast<std::size_t>(d));
  switch (prior.kind) {
    case PriorSpec::Kind::PointMass:
      if (static_cast<int>(prior.point.size()) != d)
        throw std::invalid_argument("draw_parameter: point mass dimension mismatch");
      return prior.point;
    case PriorSpec::Kind::UniformPlusMinus:
      for (auto& x : theta)
        x = (public_rng.next_u64() & 1u) ? prior.delta : -prior.delta;
      return theta;
    case PriorSpec::Kind::GaussianPrior: {
      const double delta = std::sqrt(prior.delta2);
      for (auto& x : theta) x = delta * public_rng.next_gaussian();
      return theta;
    }
    case PriorSpec::Kind::UniformInterval:
      for (auto& x : theta)
        x = prior.lo + (prior.hi - prior.lo) * public_rng.next_unit();
      return theta;
  }
  throw std::logic_error("draw_parameter: unreachable");
}

SampleSet sample_data(const ParameterVector& theta, long long machine_count,
                      int n, double sigma2, const RandomnessModel& rnd) {
  if (machine_count < 1) throw std::invalid_argument("sample_data: need machines");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("sample_data: bad sigma2");
  const int d = static_cast<int>(theta.size());
  SampleSet out;
  out.machine_count = static_cast<int>(machine_count);
  out.n = n;
  out.d = d;
  out.data.resize(static_cast<std::size_t>(machine_count) * n * d);
  const double sigma = std::sqrt(sigma2);
  for (long long j = 0; j < machine_count; ++j) {
    Rng priv = rnd.private_stream(j);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < d; ++i)
        out.at(static_cast<int>(j), k, i) = theta[i] + sigma * priv.next_gaussian();
  }
  return out;
}

MeanMatrix sample_machine_means(const ParameterVector& theta,
                                long long machine_count, int n, double sigma2,
                                const RandomnessModel& rnd) {
  const int d = static_cast<int>(theta.size());
  MeanMatrix out;
  out.machines = machine_count;
  out.d = d;
  out.v.resize(static_cast<std::size_t>(machine_count) * d);
  const double scale = std::sqrt(sigma2 / n);
  for (long long j = 0; j < machine_count; ++j) {
    Rng priv = rnd.private_stream(j);
    for (int i = 0; i < d; ++i)
      out.at(j, i) = theta[i] + scale * priv.next_gaussian();
  }
  return out;
}

std::vector<double> sample_mean(const SampleSet& data, long long machine) {
  if (machine < 0 || machine >= data.machine_count)
    throw std::out_of_range("sample_mean: machine index out of range");
  std::vector<double> mean(static_cast<std::size_t>(data.d), 0.0);
  for (int k = 0; k < data.n; ++k)
    for (int i = 0; i < data.d; ++i)
      mean[i] += data.at(static_cast<int>(machine), k, i);
  for (auto& x : mean) x /= data.n;
  return mean;
}

MeanMatrix machine_means(const SampleSet& data) {
  MeanMatrix out;
  out.machines = data.machine_count;
  out.d = data.d;
  out.v.resize(static_cast<std::size_t>(data.machine_count) * data.d);
  for (long long j = 0; j < data.machine_count; ++j) {
    const auto mean = sample_mean(data, j);
    for (int i = 0; i < data.d; ++i) out.at(j, i) = mean[i];
  }
  return out;
}

double normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("normal_cdf: x must be finite");
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  static const boost::math::normal_distribution<double> unit(0.0, 1.0);
  return boost::math::quantile(unit, p);
}

}  // namespace destim
