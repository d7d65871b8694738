#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "steinlab/rate_fit.hpp"
#include "steinlab/test_function.hpp"

// Discretized Besov-Liouville space I^{beta,2} on [0, 1]. Grid functions are
// values at the midpoints x_i = (i + 1/2)/n and, as densities, are read as
// piecewise constant on the panels [i/n, (i+1)/n). Elements of I^{beta,2}
// are represented by their L^2 densities (f = I^beta f_dot).
namespace steinlab::besov {

struct GridConfig {
  int n = 256;
  double beta = 0.4;

  // n >= 64 and a power of two, 0 < beta < 1/2; InvalidArgument otherwise.
  void validate() const;
  double h() const { return 1.0 / n; }
  Eigen::VectorXd midpoints() const;
};

class CountingPath {
 public:
  CountingPath() = default;
  // Sorts the atoms; throws InvalidArgument for atoms outside [0, 1] or NaN.
  explicit CountingPath(std::vector<double> atoms);

  const std::vector<double>& atoms() const { return atoms_; }
  // Number of atoms in [0, t].
  long count(double t) const;

 private:
  std::vector<double> atoms_;
};

struct BesovVector {
  Eigen::VectorXd derivative_samples;
  int size() const { return static_cast<int>(derivative_samples.size()); }
};

enum class OperatorKind { left_integral, right_integral, left_derivative, v_beta };
std::string to_string(OperatorKind k);

struct FractionalOperator {
  OperatorKind kind = OperatorKind::left_integral;
  double alpha = 0.0;
  Eigen::MatrixXd matrix;
  // ||A||_1 ||A^{-1}||_1 for integral operators.
  double condition_estimate = 0.0;
  // max |M - M^T| / max |M| before symmetrization (v_beta only).
  double asymmetry = 0.0;
};

// Product-integration matrix of I_{0+}^alpha on an n-point grid; shared,
// built once per (n, alpha). alpha must lie in (0, 1].
std::shared_ptr<const FractionalOperator> left_integral_operator(int n, double alpha);
// J A J with J the reversal permutation.
std::shared_ptr<const FractionalOperator> right_integral_operator(int n, double alpha);

Eigen::VectorXd frac_integral_left(double alpha, const Eigen::VectorXd& g);
Eigen::VectorXd frac_integral_right(double alpha, const Eigen::VectorXd& g);
// I_{0+}^alpha of the piecewise-constant density g at an arbitrary x in [0, 1].
double frac_integral_left_at(double alpha, const Eigen::VectorXd& g, double x);

// Exact inverse of the discrete left integral (triangular solve). alpha in
// (0, 1/2]. ConditioningError when ||A||_1 ||A^{-1}||_1 exceeds 1e12.
Eigen::VectorXd frac_derivative_left(double alpha, const Eigen::VectorXd& f);

inline constexpr double kConditionLimit = 1e12;

// I^beta I^{1-beta} I_{1-}^{1-beta} I^{-beta}, multiplied in that order on
// grid functions, then expressed on density coordinates (conjugated by
// I^beta) and symmetrized. <V eta, eta>_{beta,2} = h eta_dot^T M eta_dot.
FractionalOperator v_beta_operator(const GridConfig& cfg);
double v_beta_quadratic_form(const FractionalOperator& v, const BesovVector& eta);

// Midpoint-rule L^2 pairing of the densities.
double besov_inner(const BesovVector& f, const BesovVector& g);

// (N(x_i) - lambda x_i) / sqrt(lambda) at the midpoints.
Eigen::VectorXd path_on_grid(const CountingPath& path, double lambda, int n);
// Density of the path above: frac_derivative_left(beta, path_on_grid(...)).
BesovVector donsker_map(const CountingPath& path, double lambda, const GridConfig& cfg);

// Poisson process of intensity lambda on [0, 1]; deterministic in seed.
CountingPath sample_poisson_path(double lambda, std::uint64_t seed);

// Brownian motion at the midpoints: B(x_0) ~ N(0, h/2), increments N(0, h).
Eigen::VectorXd sample_brownian_grid(int n, std::uint64_t seed);
BesovVector sample_brownian_path(const GridConfig& cfg, std::uint64_t seed);

// F(omega) = phi(<eta, omega>_{beta,2}).
struct PathFunctional {
  std::string name;
  BesovVector eta;
  SmoothTestFunction phi;
};

// phi in {sin, tanh} against eta_dot in {1, sqrt2 cos(pi x), sqrt3 x}: every
// member has unit-norm direction and phi in the unit C^2_b ball.
std::vector<PathFunctional> default_functional_family(const GridConfig& cfg);

// Per-sample values of <eta, T(N_lambda)>_{beta,2}, with the grid counts of
// N drawn exactly (independent Poisson counts between midpoints).
std::vector<double> sample_functional_values(const BesovVector& eta, double lambda, const GridConfig& cfg,
                                             long samples, std::uint64_t seed);

struct FunctionalGapEstimate {
  std::string functional;
  double lambda = 0.0;
  double gap = 0.0;  // E[F(T(N))] - E[F(B)], signed
  double std_error = 0.0;
  double poisson_mean = 0.0;
  double gaussian_mean = 0.0;
};

struct FunctionalRateResult {
  std::vector<FunctionalGapEstimate> cells;
  // Largest |gap| over the family at each lambda, with its standard error.
  std::vector<FunctionalGapEstimate> maxima;
  std::optional<RateFit> fit;
  // exponent +- 1.96 standard errors.
  double band_low = 0.0;
  double band_high = 0.0;
  bool inconclusive = false;
  std::string diagnostic;
};

// Paired Monte Carlo: one set of Poisson paths per lambda (seeded per chunk
// by derive_seed) drives every family member. The Gaussian side is exact:
// <eta, B> is N(0, sigma^2) with sigma^2 = <V eta, eta> on the grid, so
// E phi(sigma Y) is computed by Gauss-Hermite. The Poisson mean uses
// X, X^2 - k2 and X^3 - k3 (exact cumulants) as control variates.
FunctionalRateResult functional_rate_experiment(const std::vector<PathFunctional>& family,
                                                const std::vector<double>& lambdas, long samples_per_lambda,
                                                std::uint64_t seed, const GridConfig& cfg);

}  // namespace steinlab::besov
