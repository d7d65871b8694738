#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "steinlab/test_function.hpp"

// Probability metrics between laws on the real line: f-divergences
// (Kullback-Leibler, Hellinger, total variation), the Wasserstein-1 distance
// and Kantorovitch-Rubinstein dual lower bounds over test-function families.
namespace steinlab::metrics {

struct Gaussian {
  double mean = 0.0;
  double variance = 1.0;
};
struct Poisson {
  double lambda = 1.0;
};
struct Pmf {
  std::vector<long> support;
  std::vector<double> probabilities;
};
struct Empirical {
  std::vector<double> samples;
};
// Law of (Z - lambda)/sqrt(lambda) for Z ~ Poisson(lambda).
struct RescaledPoisson {
  double lambda = 1.0;
};

class ProbabilityLaw1D {
 public:
  using Kind = std::variant<Gaussian, Poisson, Pmf, Empirical, RescaledPoisson>;

  static ProbabilityLaw1D gaussian(double mean, double variance);
  static ProbabilityLaw1D poisson(double lambda);
  static ProbabilityLaw1D pmf(std::vector<long> support, std::vector<double> probabilities);
  static ProbabilityLaw1D bernoulli(double p);
  static ProbabilityLaw1D point_mass(long at);
  static ProbabilityLaw1D empirical(std::vector<double> samples);
  static ProbabilityLaw1D rescaled_poisson(double lambda);

  const Kind& kind() const { return kind_; }
  bool is_discrete() const { return !std::holds_alternative<Gaussian>(kind_); }
  std::string describe() const;

 private:
  explicit ProbabilityLaw1D(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

// Sorted atoms of a discrete law. Infinite supports are cut where the
// discarded mass on both sides is below 1e-14 (recorded in tail_mass).
struct Atoms {
  std::vector<double> points;
  std::vector<double> masses;
  double tail_mass = 0.0;
};
Atoms atoms_of(const ProbabilityLaw1D& law);

class ConvexGenerator {
 public:
  // Checks f(1) = 0 within 1e-12 and midpoint convexity on a probe grid;
  // throws InvalidArgument otherwise. `slope_at_infinity` is lim f(t)/t as
  // t -> inf (+inf allowed); when omitted it is estimated from f on
  // t in {1e6, 1e12, 1e24}.
  ConvexGenerator(std::function<double(double)> f, std::string label,
                  std::optional<double> slope_at_infinity = std::nullopt);
  double operator()(double t) const { return f_(t); }
  const std::string& label() const { return label_; }
  double slope_at_infinity() const { return slope_; }

  static ConvexGenerator kullback_leibler();  // t ln t
  static ConvexGenerator total_variation();   // |t - 1|
  static ConvexGenerator hellinger();         // (sqrt t - 1)^2

 private:
  std::function<double(double)> f_;
  std::string label_;
  double slope_ = 0.0;
};

// D_f(Q || P) = int f(dQ/dP) dP. Mass of Q where P vanishes is charged at
// slope_at_infinity, so the result is +infinity exactly when Q is not
// absolutely continuous with respect to P and f grows faster than linearly. Discrete pairs are summed over the union of
// supports; Gaussian pairs are integrated by adaptive Gauss-Kronrod.
double f_divergence(const ConvexGenerator& f, const ProbabilityLaw1D& q, const ProbabilityLaw1D& p);

// Discrete pairs: (1/2) sum |p_k - q_k|. Gaussian pairs: supremum over
// half-lines (-inf, x] of |P - Q|, located on a grid and polished by Brent.
double total_variation(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q);

// sup_x |F_P(x) - F_Q(x)| for Gaussian pairs (what total_variation reports
// for them).
double kolmogorov_gaussian(const Gaussian& p, const Gaussian& q);

// Raw divergence with f = (sqrt t - 1)^2, in [0, 2].
double hellinger_divergence(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q);
// sqrt of the above, in [0, sqrt 2].
double hellinger(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q);

// int |F_P - F_Q| dx. Discrete pairs and Gaussian-vs-discrete pairs are
// integrated exactly piecewise; Gaussian pairs use 2^13 trapezoid panels on
// the union of [mu - 12 sigma, mu + 12 sigma], Richardson-refined once.
double wasserstein1_1d(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q);

// E_law[F]. Gaussian laws by adaptive Gauss-Hermite, Poisson-type laws by
// certified truncated series, finite laws exactly.
double expectation(const ProbabilityLaw1D& law, const SmoothTestFunction& f);

// max over the family of |E_P F - E_Q F|, a lower bound on the distance
// induced by the class the family is drawn from. Every member is checked
// against its declared norm class on the probe grid.
double kr_dual_lower_bound(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q,
                           const std::vector<SmoothTestFunction>& family);

}  // namespace steinlab::metrics
