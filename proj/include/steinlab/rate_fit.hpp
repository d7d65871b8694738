#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace steinlab {

// log|error| = intercept + exponent * log(lambda), fitted by least squares.
struct RateFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double max_abs_residual = 0.0;
  std::vector<double> lambdas;
  // Standard error of the exponent, only for weighted fits.
  std::optional<double> exponent_stderr;
};

// Needs at least 3 pairs with strictly increasing lambda and positive errors
// (InvalidArgument otherwise; a zero error usually means a symmetric F).
RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs);

// Weighted fit for noisy errors: each point is weighted by (error/stderr)^2,
// the inverse variance of log(error) to first order.
RateFit fit_rate_weighted(const std::vector<std::pair<double, double>>& pairs, const std::vector<double>& stderrs);

}  // namespace steinlab
