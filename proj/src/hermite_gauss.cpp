#include "steinlab/hermite_gauss.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "steinlab/errors.hpp"
#include "steinlab/numeric.hpp"

namespace steinlab::gauss {

double hermite(int n, double x) {
  if (n < 0 || n > kMaxHermiteDegree) {
    throw RangeError("hermite: degree " + std::to_string(n) + " outside [0, " +
                     std::to_string(kMaxHermiteDegree) + "]");
  }
  if (n == 0) return 1.0;
  double h0 = 1.0;
  double h1 = x;
  for (int k = 1; k < n; ++k) {
    const double h2 = x * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

namespace {

// Orthonormal Hermite values p_0..p_{n-1} at x and p_n, p_n' for Newton.
struct OrthonormalEval {
  double pn = 0.0;
  double dpn = 0.0;
  double sum_squares = 0.0;  // sum_{k<n} p_k(x)^2
};

OrthonormalEval orthonormal_eval(int n, double x) {
  // x p_k = sqrt(k+1) p_{k+1} + sqrt(k) p_{k-1}.
  double prev = 0.0;
  double cur = 1.0;
  double sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    sum_sq += cur * cur;
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(k + 1.0);
    prev = cur;
    cur = next;
  }
  // p_n' = sqrt(n) p_{n-1}.
  return {cur, std::sqrt(static_cast<double>(n)) * prev, sum_sq};
}

}  // namespace

GaussHermiteRule::GaussHermiteRule(int order) : order_(order) {
  if (order < 1 || order > kMaxRuleOrder) {
    throw RangeError("GaussHermiteRule: order " + std::to_string(order) + " outside [1, " +
                     std::to_string(kMaxRuleOrder) + "]");
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& eig = solver.eigenvalues();

  nodes_.resize(order);
  weights_.resize(order);
  for (int i = 0; i < order; ++i) {
    double x = eig[i];
    for (int iter = 0; iter < 8; ++iter) {
      const OrthonormalEval e = orthonormal_eval(order, x);
      if (e.dpn == 0.0) break;
      const double dx = e.pn / e.dpn;
      x -= dx;
      if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    nodes_[i] = x;
    weights_[i] = 1.0 / orthonormal_eval(order, x).sum_squares;
  }
  // Enforce exact symmetry: odd moments then cancel pairwise.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (nodes_[j] - nodes_[i]);
    const double w = 0.5 * (weights_[i] + weights_[j]);
    nodes_[i] = -x;
    nodes_[j] = x;
    weights_[i] = w;
    weights_[j] = w;
  }
  if (order % 2 == 1) nodes_[order / 2] = 0.0;
  CompensatedSum total;
  for (double w : weights_) total += w;
  const double norm = total.value();
  for (double& w : weights_) w /= norm;
}

const GaussHermiteRule& GaussHermiteRule::standard(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(order);
  return *slot;
}

double gauss_expectation(const SmoothTestFunction& f, const GaussHermiteRule& rule) {
  return rule.integrate([&](double x) { return f(x); });
}

QuadratureEstimate gauss_expectation_adaptive(const std::function<double(double)>& f, int start_order,
                                              double tol) {
  int order = std::clamp(start_order, 1, kMaxRuleOrder);
  double previous = GaussHermiteRule::standard(order).integrate(f);
  QuadratureEstimate est{previous, std::numeric_limits<double>::infinity(), order, false};
  while (order * 2 <= kMaxRuleOrder) {
    order *= 2;
    const double next = GaussHermiteRule::standard(order).integrate(f);
    est = {next, std::abs(next - previous), order, std::abs(next - previous) <= tol};
    if (est.converged) break;
    previous = next;
  }
  return est;
}

double mehler_apply(const std::function<double(double)>& f, double t, double x, const GaussHermiteRule& rule) {
  if (!(t >= 0.0)) throw DomainError("mehler_apply: t must be nonnegative");
  if (t == 0.0) return f(x);
  const double decay = std::exp(-t);
  const double spread = std::sqrt(-std::expm1(-2.0 * t));
  return rule.integrate([&](double y) { return f(decay * x + spread * y); });
}

double mehler_apply(const SmoothTestFunction& f, double t, double x, const GaussHermiteRule& rule) {
  return mehler_apply([&](double z) { return f(z); }, t, x, rule);
}

double ou_generator(const SmoothTestFunction& f, double x) {
  if (f.max_order() < 2) throw ContractError("ou_generator: '" + f.name() + "' needs two derivatives");
  return x * f.derivative(1, x) - f.derivative(2, x);
}

double gaussian_adjoint(const SmoothTestFunction& g, double x) {
  if (g.max_order() < 1) throw ContractError("gaussian_adjoint: '" + g.name() + "' needs a derivative");
  return x * g(x) - g.derivative(1, x);
}

double semigroup_derivative(const SmoothTestFunction& f, double t, double x, int k, const GaussHermiteRule& rule,
                            DerivativeForm form) {
  if (k <= 0) throw ContractError("semigroup_derivative: k must be positive, use mehler_apply for k = 0");
  if (t < 0.0) throw DomainError("semigroup_derivative: t must be nonnegative");
  if (t == 0.0) throw SingularityError("semigroup_derivative: the kernel is singular at t = 0");
  const double decay = std::exp(-t);
  const double spread = std::sqrt(-std::expm1(-2.0 * t));
  if (form == DerivativeForm::mixed3) {
    if (k != 3) throw ContractError("semigroup_derivative: mixed form is defined for k = 3 only");
    if (f.max_order() < 2) throw ContractError("semigroup_derivative: mixed form needs F''");
    const double factor = decay * decay * decay / spread;
    return factor * rule.integrate([&](double y) { return f.derivative(2, decay * x + spread * y) * y; });
  }
  const double factor = std::pow(decay / spread, k);
  return factor * rule.integrate([&](double y) { return f(decay * x + spread * y) * hermite(k, y); });
}

double ou_kernel_time_integral(const TimeKernel& kernel) {
  const double a = kernel.decay;
  const double b = kernel.singular_power;
  if (a <= 0.0 || b >= 2.0) return std::numeric_limits<double>::infinity();
  // s = e^{-t}: int_0^1 s^{a-1} (1-s^2)^{-b/2} ds; s = sin(theta):
  // int_0^{pi/2} sin^{a-1}(theta) cos^{1-b}(theta) dtheta. Both ends may be
  // singular, so tanh-sinh is used with the endpoint distance xc to keep
  // sin and cos accurate near the ends.
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double half = 0.25 * std::numbers::pi;
  auto integrand = [&](double th, double xc) {
    const double sn = th < half ? std::sin(-xc) : std::sin(th);
    const double cs = th > half ? std::sin(xc) : std::cos(th);
    return std::pow(sn, a - 1.0) * std::pow(cs, 1.0 - b);
  };
  return integrator.integrate(integrand, 0.0, 0.5 * std::numbers::pi, 1e-14);
}

}  // namespace steinlab::gauss
