#include "steinlab/poisson_dirichlet.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "steinlab/errors.hpp"
#include "steinlab/numeric.hpp"

namespace steinlab::poisson {

namespace {

// lgamma(n+1) - (n+1/2) ln n + n - ln(2 pi)/2.
double stirling_error(double n) {
  if (n <= 15.0) {
    return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  const double n2 = n * n;
  return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * n2)) / n2) / n2) / n;
}

// x ln(x/m) + m - x without cancellation when x is close to m.
double deviance_term(double x, double m) {
  if (std::abs(x - m) < 0.1 * (x + m)) {
    double v = (x - m) / (x + m);
    double s = (x - m) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / m) + m - x;
}

}  // namespace

double GrowthBound::at(long n) const { return scale * std::pow(1.0 + static_cast<double>(n), power); }

DiscreteFunction::DiscreteFunction(Evaluator f, std::optional<GrowthBound> growth, std::string name)
    : f_(std::move(f)), growth_(growth), name_(std::move(name)) {
  if (growth_ && (growth_->scale < 0.0 || growth_->power < 0.0)) {
    throw InvalidArgument("DiscreteFunction: growth bound must be nonnegative");
  }
}

void DiscreteFunction::check_growth(long last) const {
  if (!growth_) throw ContractError("'" + name_ + "' has no declared growth bound");
  for (long n = 0; n <= last; ++n) {
    const double v = std::abs(f_(n));
    if (!(v <= growth_->at(n) * (1.0 + 1e-12))) {
      throw ContractError("'" + name_ + "' violates its growth bound at n = " + std::to_string(n));
    }
  }
}

PoissonLaw::PoissonLaw(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidLaw("PoissonLaw: lambda must be positive");
}

double PoissonLaw::log_pmf(long n) const {
  if (n < 0) return -std::numeric_limits<double>::infinity();
  if (n == 0) return -lambda_;
  const double x = static_cast<double>(n);
  return -0.5 * std::log(2.0 * std::numbers::pi * x) - stirling_error(x) - deviance_term(x, lambda_);
}

double PoissonLaw::pmf(long n) const { return std::exp(log_pmf(n)); }

SeriesWindow truncation_window(const PoissonLaw& law, const GrowthBound& growth, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("truncation_window: tol must be positive");
  const double lambda = law.lambda();
  const long mode = static_cast<long>(std::floor(lambda));
  const double half = 0.5 * tol;

  long upper = mode + 1;
  double upper_bound = 0.0;
  for (;; ++upper) {
    const double n1 = upper + 1.0;
    const double q = lambda / n1 * std::pow((upper + 2.0) / n1, growth.power);
    if (q < 1.0) {
      upper_bound = growth.at(upper) * law.pmf(upper) / (1.0 - q);
      if (upper_bound < half) break;
    }
    if (upper > mode + 100000000L) throw RangeError("truncation_window: upper tail did not converge");
  }

  long lower = mode - 1;
  double lower_bound = 0.0;
  for (; lower >= 0; --lower) {
    lower_bound = growth.at(lower) * law.pmf(lower) / (1.0 - lower / lambda);
    if (lower_bound < half) break;
  }
  if (lower < 0) lower_bound = 0.0;
  return {lower + 1, upper - 1, upper_bound + lower_bound};
}

SeriesResult poisson_expectation(const DiscreteFunction& f, const PoissonLaw& law, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("poisson_expectation: tol must be positive");
  if (!f.growth()) {
    throw ContractError("poisson_expectation: '" + f.name() + "' needs a declared growth bound");
  }
  const SeriesWindow w = truncation_window(law, *f.growth(), tol);
  CompensatedSum value;
  CompensatedSum mass;
  for (long n = w.first; n <= w.last; ++n) {
    const double p = law.pmf(n);
    value += f(n) * p;
    mass += p;
  }
  return {value.value(), w.tail_bound, w.first, w.last, mass.value()};
}

DiscreteFunction discrete_gradient(const DiscreteFunction& f) {
  std::optional<GrowthBound> g;
  if (f.growth()) g = GrowthBound{f.growth()->scale * (1.0 + std::pow(2.0, f.growth()->power)), f.growth()->power};
  return DiscreteFunction([f](long n) { return f(n + 1) - f(n); }, g, "D" + f.name());
}

DiscreteFunction discrete_adjoint(const DiscreteFunction& g, const PoissonLaw& law) {
  const double lambda = law.lambda();
  std::optional<GrowthBound> bound;
  if (g.growth()) bound = GrowthBound{g.growth()->scale * (1.0 + 1.0 / lambda), g.growth()->power + 1.0};
  return DiscreteFunction(
      [g, lambda](long n) {
        const double shifted = n > 0 ? (static_cast<double>(n) / lambda) * g(n - 1) : 0.0;
        return shifted - g(n);
      },
      bound, "D*" + g.name());
}

DiscreteFunction mm_infinity_generator(const DiscreteFunction& f, double lambda) {
  if (!(lambda > 0.0)) throw InvalidLaw("mm_infinity_generator: lambda must be positive");
  std::optional<GrowthBound> bound;
  if (f.growth()) {
    bound = GrowthBound{f.growth()->scale * (lambda * (1.0 + std::pow(2.0, f.growth()->power)) + 2.0),
                        f.growth()->power + 1.0};
  }
  return DiscreteFunction(
      [f, lambda](long n) {
        const double fn = f(n);
        const double down = n > 0 ? static_cast<double>(n) * (f(n - 1) - fn) : 0.0;
        return lambda * (f(n + 1) - fn) + down;
      },
      bound, "L" + f.name());
}

double ibp_residual(const DiscreteFunction& f, const DiscreteFunction& g, const PoissonLaw& law, double tol) {
  f.check_growth();
  g.check_growth();
  const DiscreteFunction df = discrete_gradient(f);
  const DiscreteFunction dsg = discrete_adjoint(g, law);
  const GrowthBound lhs_bound{df.growth()->scale * g.growth()->scale, df.growth()->power + g.growth()->power};
  const GrowthBound rhs_bound{f.growth()->scale * dsg.growth()->scale, f.growth()->power + dsg.growth()->power};
  const DiscreteFunction lhs([&](long n) { return df(n) * g(n); }, lhs_bound, "DF.G");
  const DiscreteFunction rhs([&](long n) { return f(n) * dsg(n); }, rhs_bound, "F.D*G");
  return std::abs(poisson_expectation(lhs, law, tol).value - poisson_expectation(rhs, law, tol).value);
}

}  // namespace steinlab::poisson
