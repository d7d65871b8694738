#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace steinlab {

// Neumaier-compensated accumulator. Used for every long series in the
// library (Poisson sums reach a few thousand terms at lambda = 1e4).
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// Nodes and weights of a rule on an interval.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1] (Newton on the Legendre recurrence).
QuadratureRule gauss_legendre(int points);

// Composite Gauss-Legendre on [a, b] with `panels` equal panels.
QuadratureRule composite_gauss_legendre(double a, double b, int panels, int points_per_panel);

// Chebyshev points of the first kind mapped to [a, b], increasing.
std::vector<double> chebyshev_points(int count, double a, double b);

std::vector<double> linspace(double a, double b, int count);

// splitmix64 finalizer; the per-task seed derivation is seed ^ mix(task).
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t task);

// E|Y|^p for Y standard normal, any real p >= 0.
double gaussian_abs_moment(double p);

// Shortest round-trip decimal representation.
std::string format_double(double x);

}  // namespace steinlab
