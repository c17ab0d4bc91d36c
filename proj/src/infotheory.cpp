#include "destim/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "destim/core.hpp"

namespace destim {

namespace {

constexpr double kNormTol = 1e-12;

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> strides(sizes.size());
  std::size_t acc = 1;
  for (std::size_t a = sizes.size(); a-- > 0;) {
    strides[a] = acc;
    acc *= sizes[a];
  }
  return strides;
}

}  // namespace

std::size_t DiscreteJoint::cells() const {
  std::size_t total = 1;
  for (std::size_t s : sizes) total *= s;
  return total;
}

void DiscreteJoint::validate() const {
  if (sizes.empty()) throw std::invalid_argument("joint: no axes");
  for (std::size_t s : sizes)
    if (s == 0) throw std::invalid_argument("joint: empty axis");
  if (p.size() != cells()) throw std::invalid_argument("joint: table size mismatch");
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw std::invalid_argument("joint: negative entry");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > kNormTol)
    throw std::invalid_argument("joint: entries do not sum to 1");
}

double entropy_bits(const std::vector<double>& dist) {
  double sum = 0.0, h = 0.0;
  for (double x : dist) {
    if (!(x >= 0.0)) throw std::invalid_argument("entropy: negative entry");
    sum += x;
    if (x > 0.0) h -= x * std::log2(x);
  }
  if (std::fabs(sum - 1.0) > kNormTol)
    throw std::invalid_argument("entropy: distribution not normalized");
  return h;
}

std::vector<double> marginal(const DiscreteJoint& joint,
                             const std::vector<int>& keep_axes) {
  joint.validate();
  const auto strides = strides_of(joint.sizes);
  std::size_t out_cells = 1;
  for (int a : keep_axes) {
    if (a < 0 || a >= static_cast<int>(joint.sizes.size()))
      throw std::invalid_argument("marginal: axis out of range");
    out_cells *= joint.sizes[static_cast<std::size_t>(a)];
  }
  std::vector<double> out(out_cells, 0.0);
  std::vector<std::size_t> idx(joint.sizes.size(), 0);
  for (std::size_t cell = 0; cell < joint.p.size(); ++cell) {
    std::size_t out_idx = 0;
    for (int a : keep_axes)
      out_idx = out_idx * joint.sizes[static_cast<std::size_t>(a)] +
                idx[static_cast<std::size_t>(a)];
    out[out_idx] += joint.p[cell];
    for (std::size_t a = joint.sizes.size(); a-- > 0;) {
      if (++idx[a] < joint.sizes[a]) break;
      idx[a] = 0;
    }
  }
  (void)strides;
  return out;
}

double entropy(const DiscreteJoint& joint, const std::vector<int>& axes) {
  return entropy_bits(marginal(joint, axes));
}

double grouped_mutual_information(const DiscreteJoint& joint,
                                  const std::vector<int>& group_a,
                                  const std::vector<int>& group_b,
                                  const std::vector<int>& cond) {
  auto concat = [](std::vector<int> a, const std::vector<int>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  if (cond.empty()) {
    return entropy(joint, group_a) + entropy(joint, group_b) -
           entropy(joint, concat(group_a, group_b));
  }
  return entropy(joint, concat(group_a, cond)) +
         entropy(joint, concat(group_b, cond)) -
         entropy(joint, concat(concat(group_a, group_b), cond)) -
         entropy(joint, cond);
}

double mutual_information(const DiscreteJoint& joint) {
  if (joint.sizes.size() != 2)
    throw std::invalid_argument("mutual_information: expected 2 axes");
  return grouped_mutual_information(joint, {0}, {1});
}

double conditional_mutual_information(const DiscreteJoint& joint) {
  if (joint.sizes.size() != 3)
    throw std::invalid_argument("conditional_mutual_information: expected 3 axes");
  return grouped_mutual_information(joint, {0}, {1}, {2});
}

SuperadditivityReport check_superadditivity(const DiscreteJoint& joint, int k) {
  joint.validate();
  const int axes = static_cast<int>(joint.sizes.size());
  if (k < 1 || axes != k + 2)
    throw std::invalid_argument("superadditivity: expected k X-axes plus Y and Theta");
  const int y_axis = k;
  const int theta_axis = k + 1;

  // Conditional independence audit: p(x_1..x_k, theta) must factorize as
  // p(theta) * prod_i p(x_i | theta).
  std::vector<int> x_and_theta(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) x_and_theta[static_cast<std::size_t>(i)] = i;
  x_and_theta.push_back(theta_axis);
  const auto joint_x_theta = marginal(joint, x_and_theta);
  const auto p_theta = marginal(joint, {theta_axis});
  std::vector<std::vector<double>> per_x;
  for (int i = 0; i < k; ++i) per_x.push_back(marginal(joint, {i, theta_axis}));

  const std::size_t n_theta = joint.sizes[static_cast<std::size_t>(theta_axis)];
  std::vector<std::size_t> xi(static_cast<std::size_t>(k), 0);
  std::size_t flat = 0;
  double residual = 0.0;
  for (;;) {
    for (std::size_t t = 0; t < n_theta; ++t) {
      double expected = p_theta[t];
      if (expected > 0.0) {
        for (int i = 0; i < k; ++i)
          expected *= per_x[static_cast<std::size_t>(i)][xi[static_cast<std::size_t>(i)] * n_theta + t] /
                      p_theta[t];
      }
      residual = std::max(residual, std::fabs(joint_x_theta[flat * n_theta + t] - expected));
    }
    ++flat;
    int a = k - 1;
    for (; a >= 0; --a) {
      if (++xi[static_cast<std::size_t>(a)] < joint.sizes[static_cast<std::size_t>(a)]) break;
      xi[static_cast<std::size_t>(a)] = 0;
    }
    if (a < 0) break;
  }
  if (residual > 1e-10)
    throw std::invalid_argument("superadditivity: X_i not conditionally independent given Theta");

  SuperadditivityReport report;
  for (int i = 0; i < k; ++i)
    report.lhs += grouped_mutual_information(joint, {i}, {y_axis}, {theta_axis});
  std::vector<int> all_x(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) all_x[static_cast<std::size_t>(i)] = i;
  report.rhs = grouped_mutual_information(joint, all_x, {y_axis}, {theta_axis});
  report.holds = report.lhs <= report.rhs + 1e-9;
  return report;
}

namespace {

std::vector<double> random_simplex(std::size_t k, Rng& rng) {
  std::vector<double> p(k);
  double z = 0.0;
  for (auto& v : p) z += (v = -std::log(rng.next_unit_open()));
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace

DiscreteJoint random_ci_joint(int k, std::size_t nx, std::size_t ny,
                              std::size_t nt, Rng& rng) {
  if (k < 1 || nx == 0 || ny == 0 || nt == 0)
    throw std::invalid_argument("random_ci_joint: bad shape");
  const auto p_theta = random_simplex(nt, rng);
  std::vector<std::vector<double>> p_x(static_cast<std::size_t>(k));
  for (auto& table : p_x) {
    table.resize(nx * nt);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto col = random_simplex(nx, rng);
      for (std::size_t x = 0; x < nx; ++x) table[x * nt + t] = col[x];
    }
  }
  std::size_t x_cells = 1;
  for (int i = 0; i < k; ++i) x_cells *= nx;
  std::vector<std::vector<double>> p_y(x_cells * nt);
  for (auto& row : p_y) row = random_simplex(ny, rng);

  DiscreteJoint joint;
  joint.sizes.assign(static_cast<std::size_t>(k), nx);
  joint.sizes.push_back(ny);
  joint.sizes.push_back(nt);
  joint.p.resize(x_cells * ny * nt);
  std::vector<std::size_t> xi(static_cast<std::size_t>(k), 0);
  for (std::size_t flat = 0; flat < x_cells; ++flat) {
    for (std::size_t t = 0; t < nt; ++t) {
      double base = p_theta[t];
      for (int i = 0; i < k; ++i)
        base *= p_x[static_cast<std::size_t>(i)][xi[static_cast<std::size_t>(i)] * nt + t];
      for (std::size_t y = 0; y < ny; ++y)
        joint.p[(flat * ny + y) * nt + t] = base * p_y[flat * nt + t][y];
    }
    for (int a = k - 1; a >= 0; --a) {
      if (++xi[static_cast<std::size_t>(a)] < nx) break;
      xi[static_cast<std::size_t>(a)] = 0;
    }
  }
  double total = 0.0;
  for (double v : joint.p) total += v;
  for (double& v : joint.p) v /= total;
  return joint;
}

GaussianPosterior gaussian_posterior(double delta2, double sigma2, int n,
                                     double xbar_sum) {
  if (!(delta2 > 0.0) || !(sigma2 > 0.0))
    throw std::invalid_argument("gaussian_posterior: variances must be positive");
  const double denom = sigma2 + n * delta2;
  return {xbar_sum * delta2 / denom, delta2 * sigma2 / denom};
}

SdpiReport sdpi_check(const GaussianChainSpec& spec,
                      const std::vector<double>& thresholds) {
  if (!(spec.delta2 > 0.0) || !(spec.sigma2 > 0.0) || spec.n < 1)
    throw std::invalid_argument("sdpi: bad chain parameters");
  if (spec.grid_v < 8 || spec.grid_x < 8)
    throw std::invalid_argument("sdpi: grids too coarse");
  const int kv = spec.grid_v;
  const int kx = spec.grid_x;
  const double delta = std::sqrt(spec.delta2);
  const double nd = static_cast<double>(spec.n);
  // X is the sum of the n samples: X | V=v ~ N(n v, n sigma2), marginally
  // X ~ N(0, n^2 delta2 + n sigma2).
  const double x_sd = std::sqrt(nd * nd * spec.delta2 + nd * spec.sigma2);
  const double cond_sd = std::sqrt(nd * spec.sigma2);

  std::vector<double> v_pts(static_cast<std::size_t>(kv));
  for (int i = 0; i < kv; ++i)
    v_pts[static_cast<std::size_t>(i)] = delta * normal_quantile((i + 0.5) / kv);
  std::vector<double> x_pts(static_cast<std::size_t>(kx));
  for (int l = 0; l < kx; ++l)
    x_pts[static_cast<std::size_t>(l)] = x_sd * normal_quantile((l + 0.5) / kx);
  // Cell boundaries: midpoints between grid points, unbounded at the ends.
  std::vector<double> bounds(static_cast<std::size_t>(kx) + 1);
  bounds.front() = -HUGE_VAL;
  bounds.back() = HUGE_VAL;
  for (int l = 1; l < kx; ++l)
    bounds[static_cast<std::size_t>(l)] =
        0.5 * (x_pts[static_cast<std::size_t>(l - 1)] + x_pts[static_cast<std::size_t>(l)]);

  DiscreteJoint vx;
  vx.sizes = {static_cast<std::size_t>(kv), static_cast<std::size_t>(kx)};
  vx.p.resize(static_cast<std::size_t>(kv) * kx);
  const double pv = 1.0 / kv;
  for (int i = 0; i < kv; ++i) {
    const double mu = nd * v_pts[static_cast<std::size_t>(i)];
    double prev = 0.0;
    double row_sum = 0.0;
    for (int l = 0; l < kx; ++l) {
      const double hi = bounds[static_cast<std::size_t>(l) + 1];
      const double cdf_hi =
          std::isinf(hi) ? 1.0 : normal_cdf((hi - mu) / cond_sd);
      const double mass = cdf_hi - prev;
      prev = cdf_hi;
      vx.p[static_cast<std::size_t>(i) * kx + l] = pv * std::max(mass, 0.0);
      row_sum += std::max(mass, 0.0);
    }
    if (std::fabs(row_sum - 1.0) > 1e-6)
      throw std::invalid_argument("sdpi: grid too coarse (normalization drift)");
  }
  // Re-normalize away the accumulated floating point drift (< 1e-12 scale).
  double total = 0.0;
  for (double x : vx.p) total += x;
  for (double& x : vx.p) x /= total;

  // Y is a deterministic threshold label of X.
  std::vector<int> label(static_cast<std::size_t>(kx), 0);
  int n_labels = 1;
  for (int l = 0; l < kx; ++l) {
    int y = 0;
    for (double t : thresholds)
      if (x_pts[static_cast<std::size_t>(l)] >= t) ++y;
    label[static_cast<std::size_t>(l)] = y;
    n_labels = std::max(n_labels, y + 1);
  }

  DiscreteJoint vy;
  vy.sizes = {static_cast<std::size_t>(kv), static_cast<std::size_t>(n_labels)};
  vy.p.assign(static_cast<std::size_t>(kv) * n_labels, 0.0);
  for (int i = 0; i < kv; ++i)
    for (int l = 0; l < kx; ++l)
      vy.p[static_cast<std::size_t>(i) * n_labels + label[static_cast<std::size_t>(l)]] +=
          vx.p[static_cast<std::size_t>(i) * kx + l];

  SdpiReport report;
  report.rho2 = nd * spec.delta2 / (spec.sigma2 + nd * spec.delta2);
  report.info_x_v = mutual_information(vx);
  report.info_x_v_closed_form = 0.5 * std::log2(1.0 + nd * spec.delta2 / spec.sigma2);
  report.info_y_v = mutual_information(vy);
  // Y = f(X), so I(Y;X) = H(Y) and I(Y;X|V) = H(Y|V).
  const auto p_y = marginal(vy, {1});
  report.info_y_x = entropy_bits(p_y);
  report.info_y_x_given_v = entropy(vy, {0, 1}) - entropy(vy, {0});
  const double tol = report.tolerance_bits;
  const bool erkip_form = report.info_y_v <= report.rho2 * report.info_y_x + tol;
  const bool conditional_form =
      report.info_y_v <=
      (nd * spec.delta2 / spec.sigma2) * report.info_y_x_given_v + tol;
  report.holds = erkip_form && conditional_form;
  return report;
}

}  // namespace destim
