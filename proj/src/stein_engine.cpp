#include "steinlab/stein_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "steinlab/errors.hpp"
#include "steinlab/hermite_gauss.hpp"
#include "steinlab/numeric.hpp"

namespace steinlab::stein {

namespace {

constexpr double kSeriesTol = 1e-13;

// 1 + |T(n)| <= c (1 + n) with c = 1 + sqrt(lambda) + 1/sqrt(lambda).
double rescale_constant(double lambda) {
  const double r = std::sqrt(lambda);
  return 1.0 + r + 1.0 / r;
}

// E(1 + |Y|)^p <= 2^{max(p-1,0)} (1 + E|Y|^p); bounds the Mehler average of
// an envelope with power p.
double mehler_envelope_factor(double p) {
  return std::pow(2.0, std::max(p - 1.0, 0.0)) * (1.0 + gaussian_abs_moment(p));
}

void require_lambda(double lambda, const char* op) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidLaw(std::string(op) + ": lambda must be positive");
}

double poisson_mean(const std::function<double(double)>& g, double lambda, const poisson::GrowthBound& growth,
                    double* truncation) {
  const poisson::DiscreteFunction df([&](long n) { return g(rescale(n, lambda)); }, growth);
  const auto r = poisson::poisson_expectation(df, poisson::PoissonLaw(lambda), kSeriesTol);
  if (truncation) *truncation += r.truncation_bound;
  return r.value;
}

}  // namespace

double rescale(long n, double lambda) { return (static_cast<double>(n) - lambda) / std::sqrt(lambda); }

poisson::GrowthBound composed_growth(const GrowthEnvelope& envelope, double lambda, double extra_power) {
  const double p = envelope.power + extra_power;
  return {envelope.scale * std::pow(rescale_constant(lambda), p), p};
}

SteinError stein_error_detail(const SmoothTestFunction& f, double lambda, double tol) {
  require_lambda(lambda, "stein_error");
  SteinError out;
  out.poisson_mean =
      poisson_mean([&](double x) { return f(x); }, lambda, composed_growth(f.envelope(), lambda), &out.budget.truncation);
  const auto g = gauss::gauss_expectation_adaptive([&](double y) { return f(y); }, gauss::kDefaultRuleOrder, tol);
  out.gauss_mean = g.value;
  out.budget.quadrature = g.error_estimate;
  out.quadrature_order = g.order;
  out.value = out.poisson_mean - out.gauss_mean;
  return out;
}

double stein_error(const SmoothTestFunction& f, double lambda) { return stein_error_detail(f, lambda).value; }

double c2b_bound(double lambda) {
  require_lambda(lambda, "c2b_bound");
  return std::sqrt(std::numbers::pi) / (4.0 * std::numbers::sqrt2) / std::sqrt(lambda);
}

double lip_bound(double lambda, LipReading reading) {
  require_lambda(lambda, "lip_bound");
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return reading == LipReading::inverse_lambda ? c / lambda : c / std::sqrt(lambda);
}

GapEvaluation stein_dirichlet_gap_detail(const SmoothTestFunction& f, double lambda, const TimeQuadrature& tq) {
  require_lambda(lambda, "stein_dirichlet_gap");
  if (f.max_order() < 2) throw ContractError("stein_dirichlet_gap: '" + f.name() + "' needs F''");
  if (tq.panels < 2 || tq.panels % 2 != 0) throw InvalidArgument("stein_dirichlet_gap: panels must be even");
  const QuadratureRule fine = composite_gauss_legendre(0.0, 1.0, tq.panels, tq.points_per_panel);
  const QuadratureRule coarse = composite_gauss_legendre(0.0, 1.0, tq.panels / 2, tq.points_per_panel);

  // After s = e^{-t}: int_0^1 [x P F'(x) - s P F''(x)] ds, where P averages
  // over s x + sqrt(1 - s^2) Y. The integrand is even in sqrt(1 - s^2), so
  // it stays smooth at s = 1.
  auto time_integral = [&](double x, const QuadratureRule& rule, const gauss::GaussHermiteRule& gh) {
    CompensatedSum acc;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double s = rule.nodes[j];
      const double spread = std::sqrt((1.0 - s) * (1.0 + s));
      double d1 = 0.0;
      double d2 = 0.0;
      const auto nodes = gh.nodes();
      const auto weights = gh.weights();
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double z = s * x + spread * nodes[i];
        d1 += weights[i] * f.derivative(1, z);
        d2 += weights[i] * f.derivative(2, z);
      }
      acc += rule.weights[j] * (x * d1 - s * d2);
    }
    return acc.value();
  };

  const auto& gh = gauss::GaussHermiteRule::standard(tq.hermite_order);
  const double p = f.envelope().power;
  GrowthEnvelope env{2.0 * f.envelope().scale * mehler_envelope_factor(p), p};
  const poisson::GrowthBound growth = composed_growth(env, lambda, 1.0);

  CompensatedSum time_error;
  const poisson::PoissonLaw law(lambda);
  const poisson::DiscreteFunction integrand(
      [&](long n) {
        const double x = rescale(n, lambda);
        const double v = time_integral(x, fine, gh);
        time_error += law.pmf(n) * std::abs(v - time_integral(x, coarse, gh));
        return v;
      },
      growth);
  const auto series = poisson::poisson_expectation(integrand, law, kSeriesTol);

  // Gauss-Hermite error probed over the bulk of the law by doubling the rule.
  const int doubled = std::min(2 * tq.hermite_order, gauss::kMaxRuleOrder);
  const auto& gh2 = gauss::GaussHermiteRule::standard(doubled);
  double gh_error = 0.0;
  for (double x : linspace(-6.0, 6.0, 13)) {
    gh_error = std::max(gh_error, std::abs(time_integral(x, coarse, gh) - time_integral(x, coarse, gh2)));
  }

  GapEvaluation out;
  out.value = series.value;
  out.budget.truncation = series.truncation_bound;
  out.budget.quadrature = time_error.value() + gh_error;
  return out;
}

double stein_dirichlet_gap(const SmoothTestFunction& f, double lambda, const TimeQuadrature& tq) {
  return stein_dirichlet_gap_detail(f, lambda, tq).value;
}

double cross_validate(const SmoothTestFunction& f, double lambda, const TimeQuadrature& tq, double slack) {
  const SteinError direct = stein_error_detail(f, lambda);
  const GapEvaluation gap = stein_dirichlet_gap_detail(f, lambda, tq);
  const double discrepancy = std::abs(direct.value - gap.value);
  const double budget = direct.budget.total() + gap.budget.total() + slack;
  if (discrepancy > budget) {
    throw ToleranceExceeded("cross_validate: Stein-Dirichlet gap for '" + f.name() + "' at lambda = " +
                                format_double(lambda) + " differs from the direct evaluation by " +
                                format_double(discrepancy),
                            discrepancy, budget);
  }
  return discrepancy;
}

double edgeworth_first_order(const SmoothTestFunction& f, double lambda) {
  require_lambda(lambda, "edgeworth_first_order");
  const auto e = gauss::gauss_expectation_adaptive([&](double y) { return f(y) * gauss::hermite(3, y); },
                                                   gauss::kDefaultRuleOrder, 1e-13);
  return e.value / (6.0 * std::sqrt(lambda));
}

double intermediate_remainder_bound(double lambda, double t, double sup_third_derivative) {
  require_lambda(lambda, "intermediate_remainder_bound");
  if (!(t > 0.0)) throw DomainError("intermediate_remainder_bound: t must be positive");
  return std::exp(-4.0 * t) / std::sqrt(-std::expm1(-2.0 * t)) * sup_third_derivative / (6.0 * lambda);
}

IntermediateGap edgeworth_intermediate_gap(const SmoothTestFunction& f, double lambda, double t,
                                           double sup_third_derivative) {
  require_lambda(lambda, "edgeworth_intermediate_gap");
  if (f.max_order() < 3) throw ContractError("edgeworth_intermediate_gap: '" + f.name() + "' needs F'''");
  if (!(t > 0.0)) throw DomainError("edgeworth_intermediate_gap: t must be positive");
  const auto& gh = gauss::GaussHermiteRule::standard();
  const double decay = std::exp(-t);
  auto mehler_k = [&](int k, double x) {
    return gauss::mehler_apply([&](double z) { return f.derivative(k, z); }, t, x, gh);
  };
  const double p = f.envelope().power;
  const GrowthEnvelope env{f.envelope().scale * mehler_envelope_factor(p), p};

  IntermediateGap out;
  double truncation = 0.0;
  out.lhs = poisson_mean(
      [&](double x) { return x * decay * mehler_k(1, x) - decay * decay * mehler_k(2, x); }, lambda,
      composed_growth({2.0 * env.scale, env.power}, lambda, 1.0), &truncation);
  out.main_term = decay * decay * decay / (2.0 * std::sqrt(lambda)) *
                  poisson_mean([&](double x) { return mehler_k(3, x); }, lambda, composed_growth(env, lambda),
                               &truncation);
  out.remainder = out.lhs - out.main_term;
  out.remainder_bound = intermediate_remainder_bound(lambda, t, sup_third_derivative);
  return out;
}

double chen_identity_residual(const SmoothTestFunction& g, double lambda) {
  require_lambda(lambda, "chen_identity_residual");
  const double root = std::sqrt(lambda);
  const double p = g.envelope().power;
  const poisson::GrowthBound base = composed_growth(g.envelope(), lambda, 1.0);
  const poisson::GrowthBound growth{base.scale * (2.0 * root + 1.0) * std::pow(2.0, p), base.power};
  const poisson::DiscreteFunction df(
      [&](long n) {
        const double x = rescale(n, lambda);
        return root * (g(rescale(n + 1, lambda)) - g(x)) - x * g(x);
      },
      growth);
  return poisson::poisson_expectation(df, poisson::PoissonLaw(lambda), kSeriesTol).value;
}

SteinBoundReport make_report(const SmoothTestFunction& f, double lambda) {
  const SteinError e = stein_error_detail(f, lambda);
  SteinBoundReport r;
  r.function = f.name();
  r.lambda = lambda;
  r.observed_gap = e.value;
  r.upper_bound = c2b_bound(lambda);
  r.edgeworth_term = edgeworth_first_order(f, lambda);
  r.residual = r.observed_gap - r.edgeworth_term;
  r.truncation_bound = e.budget.truncation;
  r.quadrature_error = e.budget.quadrature;
  r.quadrature_order = e.quadrature_order;
  return r;
}

std::vector<SmoothTestFunction> regression_family() {
  namespace fn = functions;
  const std::vector<std::pair<std::string, SmoothTestFunction>> raw = {
      {"cubic_rational", fn::cubic_rational()},    {"sin0.5", fn::sine(0.5)},        {"sin1", fn::sine(1.0)},
      {"sin2", fn::sine(2.0)},            {"arctan", fn::arctangent()},     {"tanh", fn::hyperbolic_tangent()},
      {"bump-1", fn::gaussian_bump(-1.0)}, {"bump0", fn::gaussian_bump(0.0)}, {"bump1", fn::gaussian_bump(1.0)},
  };
  static const std::vector<double> dense = linspace(-6.0, 6.0, 4801);
  std::vector<SmoothTestFunction> out;
  out.reserve(raw.size());
  for (const auto& [name, f] : raw) {
    const auto sups = measured_sup_norms(f, dense);
    const double m = std::max({sups[0], sups[1], sups[2]});
    out.push_back(f.scaled(1.0 / m, name).with_norm_class(NormClass::c2b_unit));
  }
  return out;
}

bool is_symmetric(const SmoothTestFunction& f) {
  for (double x : probe_grid()) {
    if (std::abs(f(x) - f(-x)) > 1e-12 * std::max(1.0, std::abs(f(x)))) return false;
  }
  return true;
}

const std::vector<double>& default_lambda_grid() {
  static const std::vector<double> grid{4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0};
  return grid;
}

}  // namespace steinlab::stein
