#pragma once

#include <functional>
#include <span>
#include <vector>

#include "steinlab/test_function.hpp"

// Gaussian Dirichlet-Malliavin structure on the real line: probabilists'
// Hermite polynomials, Gauss-Hermite quadrature for the standard normal law,
// the Mehler (Ornstein-Uhlenbeck) semigroup, its generator L = x d - d^2,
// the Gaussian adjoint D*G = xG - G' and the semigroup derivative formulas.
namespace steinlab::gauss {

inline constexpr int kMaxHermiteDegree = 30;
inline constexpr int kDefaultRuleOrder = 64;
inline constexpr int kMaxRuleOrder = 256;

// Probabilists' H_n by H_{n+1} = x H_n - n H_{n-1}. Throws RangeError for
// n outside [0, kMaxHermiteDegree].
double hermite(int n, double x);

// Gauss-Hermite rule for the standard normal law: weights sum to one.
// Nodes come from the Jacobi matrix (Golub-Welsch), then are polished by
// Newton on the orthonormal recurrence; weights are Christoffel numbers.
class GaussHermiteRule {
 public:
  explicit GaussHermiteRule(int order);

  // Shared immutable rule of the given order, built once per process.
  static const GaussHermiteRule& standard(int order = kDefaultRuleOrder);

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  int order() const { return order_; }

  template <typename F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * f(nodes_[i]);
    return acc;
  }

 private:
  int order_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

struct QuadratureEstimate {
  double value = 0.0;
  // |Q_order - Q_{order/2}| at the accepted order.
  double error_estimate = 0.0;
  int order = 0;
  bool converged = false;
};

double gauss_expectation(const SmoothTestFunction& f, const GaussHermiteRule& rule);

// Starts at `start_order` and doubles the rule until two successive orders
// agree within `tol` (absolute), up to kMaxRuleOrder.
QuadratureEstimate gauss_expectation_adaptive(const std::function<double(double)>& f,
                                              int start_order = kDefaultRuleOrder, double tol = 1e-11);

// P_t F(x) = E F(e^{-t} x + sqrt(1 - e^{-2t}) Y). P_0 F(x) = F(x) exactly.
double mehler_apply(const std::function<double(double)>& f, double t, double x, const GaussHermiteRule& rule);
double mehler_apply(const SmoothTestFunction& f, double t, double x, const GaussHermiteRule& rule);

// x F'(x) - F''(x).
double ou_generator(const SmoothTestFunction& f, double x);

// x G(x) - G'(x).
double gaussian_adjoint(const SmoothTestFunction& g, double x);

enum class DerivativeForm {
  // (e^{-t}/s)^k E[F(e^{-t}x + s Y) H_k(Y)], s = sqrt(1 - e^{-2t}).
  pure,
  // e^{-3t}/s E[F''(e^{-t}x + s Y) Y]; only for k = 3.
  mixed3,
};

// k-th derivative of x -> P_t F(x) by Gaussian integration by parts.
// t = 0 raises SingularityError, k = 0 raises ContractError.
double semigroup_derivative(const SmoothTestFunction& f, double t, double x, int k, const GaussHermiteRule& rule,
                            DerivativeForm form = DerivativeForm::pure);

// Time kernel e^{-a t} (1 - e^{-2t})^{-b/2} on [0, inf).
struct TimeKernel {
  double decay = 1.0;
  double singular_power = 1.0;

  static TimeKernel pure(int k) { return {static_cast<double>(k), static_cast<double>(k)}; }
  static TimeKernel mixed3() { return {3.0, 1.0}; }
};

// Integral of the kernel over [0, inf), +infinity when it diverges
// (singular_power >= 2 or decay <= 0). Evaluated after s = e^{-t} and then
// s = sin(theta), which leaves a bounded integrand on [0, pi/2].
double ou_kernel_time_integral(const TimeKernel& kernel);

}  // namespace steinlab::gauss
