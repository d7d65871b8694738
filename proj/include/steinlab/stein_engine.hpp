#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "steinlab/poisson_dirichlet.hpp"
#include "steinlab/rate_fit.hpp"
#include "steinlab/test_function.hpp"

// Gaussian approximation of the rescaled Poisson law Z_hat = (Z - lambda)/sqrt(lambda)
// through the Stein-Dirichlet representation, with explicit error budgets.
namespace steinlab::stein {

// T(n) = (n - lambda) / sqrt(lambda).
double rescale(long n, double lambda);

// Growth bound in n for x -> envelope(x) * (1 + |x|)^extra_power composed
// with T, where envelope bounds F and its declared derivatives.
poisson::GrowthBound composed_growth(const GrowthEnvelope& envelope, double lambda, double extra_power = 0.0);

struct ErrorBudget {
  double truncation = 0.0;
  double quadrature = 0.0;
  double total() const { return truncation + quadrature; }
};

struct SteinError {
  double value = 0.0;  // E[F(Z_hat)] - E_P[F]
  double poisson_mean = 0.0;
  double gauss_mean = 0.0;
  ErrorBudget budget;
  int quadrature_order = 0;
};

SteinError stein_error_detail(const SmoothTestFunction& f, double lambda, double tol = 1e-13);
double stein_error(const SmoothTestFunction& f, double lambda);

// sqrt(pi)/(4 sqrt 2) / sqrt(lambda), for F with sup|F''| <= 1.
double c2b_bound(double lambda);

// Lip(1) envelope (2 pi)^{-1/2} times lambda^{-1} or lambda^{-1/2}. The
// measured W1 distance decides which of the two decays actually holds.
enum class LipReading { inverse_lambda, inverse_sqrt_lambda };
double lip_bound(double lambda, LipReading reading = LipReading::inverse_lambda);

// Time rule for int_0^inf ... dt after s = e^{-t}: composite Gauss-Legendre
// on (0, 1). The error estimate compares against half the panels.
struct TimeQuadrature {
  int panels = 128;
  int points_per_panel = 4;
  int hermite_order = 128;
};

struct GapEvaluation {
  double value = 0.0;
  ErrorBudget budget;
};

// E_Q[int_0^inf (L P_t F)(Z_hat) dt] with L = x d - d^2.
GapEvaluation stein_dirichlet_gap_detail(const SmoothTestFunction& f, double lambda,
                                         const TimeQuadrature& tq = {});
double stein_dirichlet_gap(const SmoothTestFunction& f, double lambda, const TimeQuadrature& tq = {});

// Throws ToleranceExceeded when the two evaluation routes differ by more than
// their combined budgets plus `slack`. Returns the absolute discrepancy.
double cross_validate(const SmoothTestFunction& f, double lambda, const TimeQuadrature& tq = {},
                      double slack = 1e-7);

// E_P[F H_3] / (6 sqrt(lambda)).
double edgeworth_first_order(const SmoothTestFunction& f, double lambda);

// Fixed-time gap E[Z_hat psi(Z_hat) - psi'(Z_hat)] with psi = (P_t F)' and
// its split into (2 sqrt(lambda))^{-1} E[(P_t F)'''(Z_hat)] plus a remainder.
struct IntermediateGap {
  double lhs = 0.0;
  double main_term = 0.0;
  double remainder = 0.0;
  // lambda^{-1} e^{-4t} (1 - e^{-2t})^{-1/2} sup|F'''| / 6.
  double remainder_bound = 0.0;
};
IntermediateGap edgeworth_intermediate_gap(const SmoothTestFunction& f, double lambda, double t,
                                           double sup_third_derivative);
double intermediate_remainder_bound(double lambda, double t, double sup_third_derivative);

// sqrt(lambda) E[G(Z_hat + 1/sqrt(lambda)) - G(Z_hat)] - E[Z_hat G(Z_hat)].
double chen_identity_residual(const SmoothTestFunction& g, double lambda);

struct SteinBoundReport {
  std::string function;
  double lambda = 0.0;
  double observed_gap = 0.0;
  double upper_bound = 0.0;
  double edgeworth_term = 0.0;
  double residual = 0.0;
  double truncation_bound = 0.0;
  double quadrature_error = 0.0;
  int quadrature_order = 0;

  double budget() const { return truncation_bound + quadrature_error; }
  bool within_bound() const { return std::abs(observed_gap) <= upper_bound + budget(); }
};

SteinBoundReport make_report(const SmoothTestFunction& f, double lambda);

// Nine unit-ball members: c x^3/(1+x^2), sin(ax) for a in {0.5, 1, 2},
// arctan, tanh and Gaussian bumps centred at -1, 0, 1. Each is divided by
// max(sup|F|, sup|F'|, sup|F''|) measured on a dense grid of [-6, 6].
std::vector<SmoothTestFunction> regression_family();

// Members whose Gaussian H_3 projection vanishes (even functions).
bool is_symmetric(const SmoothTestFunction& f);

const std::vector<double>& default_lambda_grid();

}  // namespace steinlab::stein
