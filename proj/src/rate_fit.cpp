#include "steinlab/rate_fit.hpp"

#include <algorithm>
#include <cmath>

#include "steinlab/errors.hpp"

namespace steinlab {

namespace {

void validate(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw InvalidArgument("fit_rate: at least 3 (lambda, error) pairs are required");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!(pairs[i].first > 0.0)) throw InvalidArgument("fit_rate: lambda must be positive");
    if (!(pairs[i].second > 0.0) || !std::isfinite(pairs[i].second)) {
      throw InvalidArgument("fit_rate: errors must be positive and finite (a zero gap cannot be fitted)");
    }
    if (i > 0 && !(pairs[i].first > pairs[i - 1].first)) {
      throw InvalidArgument("fit_rate: lambda values must be strictly increasing");
    }
  }
}

RateFit weighted_least_squares(const std::vector<std::pair<double, double>>& pairs, const std::vector<double>& w) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double x = std::log(pairs[i].first);
    const double y = std::log(pairs[i].second);
    sw += w[i];
    sx += w[i] * x;
    sy += w[i] * y;
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double dx = std::log(pairs[i].first) - mx;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (std::log(pairs[i].second) - my);
  }
  RateFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  for (const auto& [lambda, error] : pairs) {
    fit.lambdas.push_back(lambda);
    const double r = std::log(error) - (fit.intercept + fit.exponent * std::log(lambda));
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
  }
  fit.exponent_stderr = 1.0 / std::sqrt(sxx);
  return fit;
}

}  // namespace

RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs) {
  validate(pairs);
  RateFit fit = weighted_least_squares(pairs, std::vector<double>(pairs.size(), 1.0));
  fit.exponent_stderr.reset();
  return fit;
}

RateFit fit_rate_weighted(const std::vector<std::pair<double, double>>& pairs, const std::vector<double>& stderrs) {
  validate(pairs);
  if (stderrs.size() != pairs.size()) throw InvalidArgument("fit_rate_weighted: one stderr per pair is required");
  std::vector<double> w(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!(stderrs[i] > 0.0)) throw InvalidArgument("fit_rate_weighted: stderrs must be positive");
    const double rel = stderrs[i] / pairs[i].second;
    w[i] = 1.0 / (rel * rel);
  }
  return weighted_least_squares(pairs, w);
}

}  // namespace steinlab
