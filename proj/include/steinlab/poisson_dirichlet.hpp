#pragma once

#include <functional>
#include <optional>
#include <string>

// Poisson Dirichlet-Malliavin structure on the nonnegative integers: the
// M/M/infinity generator, the forward-difference gradient and its adjoint in
// L^2(Poisson(lambda)), and certified truncated-series expectations.
namespace steinlab::poisson {

// |F(n)| <= scale * (1 + n)^power.
struct GrowthBound {
  double scale = 1.0;
  double power = 0.0;
  double at(long n) const;
};

class DiscreteFunction {
 public:
  using Evaluator = std::function<double(long)>;

  DiscreteFunction(Evaluator f, std::optional<GrowthBound> growth = std::nullopt, std::string name = "F");

  double operator()(long n) const { return f_(n); }
  const std::optional<GrowthBound>& growth() const { return growth_; }
  const std::string& name() const { return name_; }

  // Throws ContractError when the declared bound fails somewhere on [0, last].
  void check_growth(long last = 200) const;

 private:
  Evaluator f_;
  std::optional<GrowthBound> growth_;
  std::string name_;
};

class PoissonLaw {
 public:
  explicit PoissonLaw(double lambda);
  double lambda() const { return lambda_; }
  double log_pmf(long n) const;
  double pmf(long n) const;

 private:
  double lambda_;
};

struct SeriesResult {
  double value = 0.0;
  // Certified bound on the discarded tails (growth envelope times pmf tail).
  double truncation_bound = 0.0;
  long first = 0;
  long last = 0;  // inclusive
  // Computed mass of the summed window.
  double mass = 0.0;
};

// Window [first, last] such that both discarded tails, weighted by `growth`,
// are below tol/2 each.
struct SeriesWindow {
  long first = 0;
  long last = 0;
  double tail_bound = 0.0;
};
SeriesWindow truncation_window(const PoissonLaw& law, const GrowthBound& growth, double tol);

// sum_n F(n) e^{-lambda} lambda^n / n!, truncated with a certified tail bound.
// Requires a declared growth bound (InvalidArgument for tol <= 0,
// ContractError when the bound is missing).
SeriesResult poisson_expectation(const DiscreteFunction& f, const PoissonLaw& law, double tol = 1e-12);

// n -> F(n+1) - F(n).
DiscreteFunction discrete_gradient(const DiscreteFunction& f);

// n -> (n/lambda) G(n-1) - G(n), with 0.G(-1) = 0.
DiscreteFunction discrete_adjoint(const DiscreteFunction& g, const PoissonLaw& law);

// n -> lambda (F(n+1) - F(n)) + n (F(n-1) - F(n)), with 0.F(-1) = 0.
DiscreteFunction mm_infinity_generator(const DiscreteFunction& f, double lambda);

// |E[DF G] - E[F D*G]| under Poisson(lambda). Growth bounds are validated on
// [0, 200] first.
double ibp_residual(const DiscreteFunction& f, const DiscreteFunction& g, const PoissonLaw& law,
                    double tol = 1e-14);

}  // namespace steinlab::poisson
