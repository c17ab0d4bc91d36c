#pragma once

#include <cstddef>
#include <vector>

namespace destim {

// Finite joint probability table over a product of named axes; the substrate
// for exact entropy / mutual information computation. Entries must sum to 1
// within 1e-12. Storage is row-major with the last axis fastest.
struct DiscreteJoint {
  std::vector<std::size_t> sizes;
  std::vector<double> p;

  std::size_t cells() const;
  void validate() const;
};

// Shannon entropy in bits of a (marginal) distribution, 0*log(0) = 0.
double entropy_bits(const std::vector<double>& dist);

// Marginal over a subset of axes, in the order given.
std::vector<double> marginal(const DiscreteJoint& joint,
                             const std::vector<int>& keep_axes);

// Entropy in bits of the marginal over a group of axes.
double entropy(const DiscreteJoint& joint, const std::vector<int>& axes);

// I(A;B) in bits over groups of axes; empty `cond` means unconditional,
// otherwise I(A;B|C) via H(A|C) + H(B|C) - H(A,B|C).
double grouped_mutual_information(const DiscreteJoint& joint,
                                  const std::vector<int>& group_a,
                                  const std::vector<int>& group_b,
                                  const std::vector<int>& cond = {});

// I(A;B) for a 2-axis joint.
double mutual_information(const DiscreteJoint& joint);

// I(A;B|C) for a 3-axis joint over (A, B, C).
double conditional_mutual_information(const DiscreteJoint& joint);

struct SuperadditivityReport {
  double lhs = 0.0;  // sum_i I(X_i; Y | Theta)
  double rhs = 0.0;  // I(X_1..X_k; Y | Theta)
  bool holds = false;
};

// Axes of `joint` are (X_1, ..., X_k, Y, Theta). Rejects inputs where the
// X_i are not conditionally independent given Theta (factorization residual
// above 1e-10).
SuperadditivityReport check_superadditivity(const DiscreteJoint& joint, int k);

class Rng;

// Random joint over (X_1..X_k, Y, Theta) with the X_i conditionally
// independent given Theta: p(theta), p(x_i|theta) and p(y|x,theta) drawn from
// flat Dirichlets. Input to the randomized superadditivity property suite.
DiscreteJoint random_ci_joint(int k, std::size_t nx, std::size_t ny,
                              std::size_t nt, Rng& rng);

struct GaussianPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Posterior of the mean V ~ N(0, delta2) after observing n samples with sum
// xbar_sum and noise variance sigma2:
//   mean = xbar_sum * delta2 / (sigma2 + n*delta2)
//   variance = delta2 * sigma2 / (sigma2 + n*delta2)
GaussianPosterior gaussian_posterior(double delta2, double sigma2, int n,
                                     double xbar_sum);

struct GaussianChainSpec {
  double delta2 = 1.0;
  double sigma2 = 1.0;
  int n = 1;
  int grid_v = 512;
  int grid_x = 512;
};

struct SdpiReport {
  double info_y_v = 0.0;        // I(Y;V)
  double info_y_x = 0.0;        // I(Y;X) with X the sufficient statistic
  double info_y_x_given_v = 0.0;
  double rho2 = 0.0;            // n*delta2 / (sigma2 + n*delta2)
  double info_x_v = 0.0;        // discrete I(X;V), calibration quantity
  double info_x_v_closed_form = 0.0;  // 0.5*log2(1 + n*delta2/sigma2)
  bool holds = false;
  double tolerance_bits = 0.02;
};

// Discretizes the chain V -> X -> Y on quantile grids (V ~ N(0,delta2),
// X = sum of n samples), applies the threshold quantizer Y = #{t : X >= t},
// and checks both I(Y;V) <= rho2 * I(Y;X) + tol and the conditional form
// I(Y;V) <= (n*delta2/sigma2) * I(Y;X|V) + tol on the exact discrete chain.
SdpiReport sdpi_check(const GaussianChainSpec& spec,
                      const std::vector<double>& thresholds);

}  // namespace destim
