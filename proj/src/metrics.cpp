#include "steinlab/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "steinlab/errors.hpp"
#include "steinlab/hermite_gauss.hpp"
#include "steinlab/numeric.hpp"
#include "steinlab/poisson_dirichlet.hpp"

namespace steinlab::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailMass = 1e-14;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double gaussian_log_density(const Gaussian& g, double x) {
  const double d = x - g.mean;
  return -0.5 * d * d / g.variance - 0.5 * std::log(2.0 * std::numbers::pi * g.variance);
}

// Probability of the single point x under a discrete law.
double mass_at(const ProbabilityLaw1D::Kind& kind, double x, const Atoms& atoms) {
  if (const auto* po = std::get_if<Poisson>(&kind)) {
    if (x < 0.0 || x != std::floor(x)) return 0.0;
    return poisson::PoissonLaw(po->lambda).pmf(static_cast<long>(x));
  }
  if (const auto* rp = std::get_if<RescaledPoisson>(&kind)) {
    const double n = rp->lambda + std::sqrt(rp->lambda) * x;
    const double rn = std::round(n);
    if (rn < 0.0 || std::abs(n - rn) > 1e-9 * std::max(1.0, rn)) return 0.0;
    return poisson::PoissonLaw(rp->lambda).pmf(static_cast<long>(rn));
  }
  const auto it = std::lower_bound(atoms.points.begin(), atoms.points.end(), x);
  if (it == atoms.points.end() || *it != x) return 0.0;
  return atoms.masses[static_cast<std::size_t>(it - atoms.points.begin())];
}

std::vector<double> union_points(const Atoms& a, const Atoms& b) {
  std::vector<double> out;
  out.reserve(a.points.size() + b.points.size());
  std::merge(a.points.begin(), a.points.end(), b.points.begin(), b.points.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct DiscretePair {
  std::vector<double> points;
  std::vector<double> p;
  std::vector<double> q;
};

DiscretePair align(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q) {
  const Atoms ap = atoms_of(p);
  const Atoms aq = atoms_of(q);
  DiscretePair out;
  out.points = union_points(ap, aq);
  out.p.reserve(out.points.size());
  out.q.reserve(out.points.size());
  for (double x : out.points) {
    out.p.push_back(mass_at(p.kind(), x, ap));
    out.q.push_back(mass_at(q.kind(), x, aq));
  }
  return out;
}

void require_same_family(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q, const char* op) {
  if (p.is_discrete() != q.is_discrete()) {
    throw UnsupportedPair(std::string(op) + ": mixed discrete/continuous pair " + p.describe() + " vs " +
                          q.describe());
  }
}

// int_a^b |Phi((u - mu)/sigma) - c| du, exact.
double abs_cdf_gap_integral(double a, double b, double mu, double sigma, double c) {
  if (b <= a) return 0.0;
  // Antiderivatives of Phi and of 1 - Phi (the latter integrated to +inf).
  auto lower_area = [&](double x) {
    const double z = (x - mu) / sigma;
    return (x - mu) * normal_cdf(z) + sigma * normal_pdf(z);
  };
  auto upper_area = [&](double x) {
    const double z = (x - mu) / sigma;
    return sigma * normal_pdf(z) - (x - mu) * normal_cdf(-z);
  };
  auto signed_integral = [&](double lo, double hi) {
    if (std::isinf(lo) && lo < 0.0) return lower_area(hi) - c * (hi - lo);
    if (0.5 * (lo + hi) <= mu) return lower_area(hi) - lower_area(lo) - c * (hi - lo);
    return (1.0 - c) * (hi - lo) - (upper_area(lo) - upper_area(hi));
  };
  if (c <= 0.0) {
    if (std::isinf(a)) return lower_area(b);
    return lower_area(b) - lower_area(a);
  }
  if (c >= 1.0) {
    if (std::isinf(b)) return upper_area(a);
    return upper_area(a) - upper_area(b);
  }
  const double root = mu + sigma * boost::math::quantile(boost::math::normal(), c);
  if (root <= a || root >= b) return std::abs(signed_integral(a, b));
  return std::abs(signed_integral(a, root)) + std::abs(signed_integral(root, b));
}

double w1_gaussian_discrete(const Gaussian& g, const Atoms& atoms) {
  const double sigma = std::sqrt(g.variance);
  CompensatedSum total;
  const auto& x = atoms.points;
  total += abs_cdf_gap_integral(-kInf, x.front(), g.mean, sigma, 0.0);
  double cumulative = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    cumulative += atoms.masses[k];
    total += abs_cdf_gap_integral(x[k], x[k + 1], g.mean, sigma, cumulative);
  }
  // The truncated tail mass sits beyond the last atom.
  total += abs_cdf_gap_integral(x.back(), kInf, g.mean, sigma, 1.0);
  return total.value();
}

double trapezoid(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  CompensatedSum acc;
  acc += 0.5 * (f(a) + f(b));
  for (int i = 1; i < panels; ++i) acc += f(a + i * h);
  return acc.value() * h;
}

double w1_gaussian_pair(const Gaussian& p, const Gaussian& q) {
  const double sp = std::sqrt(p.variance);
  const double sq = std::sqrt(q.variance);
  const double lo = std::min(p.mean - 12.0 * sp, q.mean - 12.0 * sq);
  const double hi = std::max(p.mean + 12.0 * sp, q.mean + 12.0 * sq);
  auto gap = [&](double x) { return std::abs(normal_cdf((x - p.mean) / sp) - normal_cdf((x - q.mean) / sq)); };
  constexpr int kPanels = 1 << 13;
  auto refined = [&](double a, double b) {
    const double fine = trapezoid(gap, a, b, kPanels);
    const double coarse = trapezoid(gap, a, b, kPanels / 2);
    return (4.0 * fine - coarse) / 3.0;
  };
  // The CDFs cross at most once; splitting there keeps each piece smooth.
  if (sp != sq) {
    const double cross = (p.mean * sq - q.mean * sp) / (sq - sp);
    if (cross > lo && cross < hi) return refined(lo, cross) + refined(cross, hi);
  }
  return refined(lo, hi);
}

}  // namespace

ProbabilityLaw1D ProbabilityLaw1D::gaussian(double mean, double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
    throw InvalidLaw("gaussian: variance must be positive and finite");
  }
  return ProbabilityLaw1D(Gaussian{mean, variance});
}

ProbabilityLaw1D ProbabilityLaw1D::poisson(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidLaw("poisson: lambda must be positive");
  return ProbabilityLaw1D(Poisson{lambda});
}

ProbabilityLaw1D ProbabilityLaw1D::pmf(std::vector<long> support, std::vector<double> probabilities) {
  if (support.empty() || support.size() != probabilities.size()) {
    throw InvalidLaw("pmf: support and probabilities must be nonempty and of equal length");
  }
  CompensatedSum total;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw InvalidLaw("pmf: negative probability mass");
    total += p;
  }
  if (std::abs(total.value() - 1.0) > 1e-12) throw InvalidLaw("pmf: probabilities must sum to one");
  return ProbabilityLaw1D(Pmf{std::move(support), std::move(probabilities)});
}

ProbabilityLaw1D ProbabilityLaw1D::bernoulli(double p) { return pmf({0, 1}, {1.0 - p, p}); }

ProbabilityLaw1D ProbabilityLaw1D::point_mass(long at) { return pmf({at}, {1.0}); }

ProbabilityLaw1D ProbabilityLaw1D::empirical(std::vector<double> samples) {
  if (samples.empty()) throw InvalidLaw("empirical: at least one sample required");
  for (double s : samples) {
    if (!std::isfinite(s)) throw InvalidLaw("empirical: samples must be finite");
  }
  return ProbabilityLaw1D(Empirical{std::move(samples)});
}

ProbabilityLaw1D ProbabilityLaw1D::rescaled_poisson(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidLaw("rescaled_poisson: lambda must be positive");
  return ProbabilityLaw1D(RescaledPoisson{lambda});
}

std::string ProbabilityLaw1D::describe() const {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return "gaussian(" + format_double(k.mean) + "," + format_double(k.variance) + ")";
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return "poisson(" + format_double(k.lambda) + ")";
        } else if constexpr (std::is_same_v<T, Pmf>) {
          return "pmf[" + std::to_string(k.support.size()) + "]";
        } else if constexpr (std::is_same_v<T, Empirical>) {
          return "empirical[" + std::to_string(k.samples.size()) + "]";
        } else {
          return "rescaled_poisson(" + format_double(k.lambda) + ")";
        }
      },
      kind_);
}

Atoms atoms_of(const ProbabilityLaw1D& law) {
  Atoms out;
  const auto& kind = law.kind();
  if (std::holds_alternative<Gaussian>(kind)) throw UnsupportedPair("atoms_of: Gaussian law has no atoms");
  if (const auto* pm = std::get_if<Pmf>(&kind)) {
    std::map<long, double> merged;
    for (std::size_t i = 0; i < pm->support.size(); ++i) merged[pm->support[i]] += pm->probabilities[i];
    for (const auto& [x, m] : merged) {
      out.points.push_back(static_cast<double>(x));
      out.masses.push_back(m);
    }
    return out;
  }
  if (const auto* em = std::get_if<Empirical>(&kind)) {
    std::vector<double> s = em->samples;
    std::sort(s.begin(), s.end());
    const double w = 1.0 / static_cast<double>(s.size());
    for (double x : s) {
      if (!out.points.empty() && out.points.back() == x) {
        out.masses.back() += w;
      } else {
        out.points.push_back(x);
        out.masses.push_back(w);
      }
    }
    return out;
  }
  double lambda = 0.0;
  bool rescaled = false;
  if (const auto* po = std::get_if<Poisson>(&kind)) {
    lambda = po->lambda;
  } else {
    lambda = std::get<RescaledPoisson>(kind).lambda;
    rescaled = true;
  }
  const poisson::PoissonLaw pl(lambda);
  const auto window = poisson::truncation_window(pl, {1.0, 0.0}, kTailMass);
  const double root = std::sqrt(lambda);
  for (long n = window.first; n <= window.last; ++n) {
    out.points.push_back(rescaled ? (static_cast<double>(n) - lambda) / root : static_cast<double>(n));
    out.masses.push_back(pl.pmf(n));
  }
  out.tail_mass = window.tail_bound;
  return out;
}

ConvexGenerator::ConvexGenerator(std::function<double(double)> f, std::string label,
                                 std::optional<double> slope_at_infinity)
    : f_(std::move(f)), label_(std::move(label)) {
  if (std::abs(f_(1.0)) > 1e-12) throw InvalidArgument("ConvexGenerator '" + label_ + "': f(1) != 0");
  const std::vector<double> probe = linspace(0.0, 8.0, 65);
  for (std::size_t i = 0; i + 2 < probe.size(); ++i) {
    const double a = probe[i];
    const double b = probe[i + 2];
    const double mid = f_(0.5 * (a + b));
    if (mid > 0.5 * (f_(a) + f_(b)) + 1e-12) {
      throw InvalidArgument("ConvexGenerator '" + label_ + "': midpoint convexity fails near t = " +
                            format_double(0.5 * (a + b)));
    }
  }
  if (slope_at_infinity) {
    slope_ = *slope_at_infinity;
  } else {
    // f(t)/t is eventually monotone for convex f. A limit shows up as the
    // later increment being much smaller than the earlier one; logarithmic
    // or faster growth keeps the increments comparable.
    auto g = [&](double t) { return f_(t) / t; };
    const double g6 = g(1e6), g12 = g(1e12), g24 = g(1e24);
    const bool unbounded = !std::isfinite(g24) || (g24 - g12 > 0.5 * (g12 - g6) && g24 - g12 > 1e-3);
    slope_ = unbounded ? kInf : g24;
  }
}

ConvexGenerator ConvexGenerator::kullback_leibler() {
  return ConvexGenerator([](double t) { return t > 0.0 ? t * std::log(t) : 0.0; }, "t ln t", kInf);
}

ConvexGenerator ConvexGenerator::total_variation() {
  return ConvexGenerator([](double t) { return std::abs(t - 1.0); }, "|t-1|", 1.0);
}

ConvexGenerator ConvexGenerator::hellinger() {
  return ConvexGenerator(
      [](double t) {
        const double r = std::sqrt(t) - 1.0;
        return r * r;
      },
      "(sqrt t - 1)^2", 1.0);
}

double f_divergence(const ConvexGenerator& f, const ProbabilityLaw1D& q, const ProbabilityLaw1D& p) {
  require_same_family(p, q, "f_divergence");
  if (!p.is_discrete()) {
    const Gaussian gp = std::get<Gaussian>(p.kind());
    const Gaussian gq = std::get<Gaussian>(q.kind());
    constexpr double kMaxLogRatio = 700.0;
    auto integrand = [&](double x) {
      const double lq = gaussian_log_density(gq, x);
      const double lp = gaussian_log_density(gp, x);
      const double lr = lq - lp;
      if (lr > kMaxLogRatio) {
        // p f(q/p) = q f(t)/t; f(t)/t has a finite limit for convex f.
        const double big = std::exp(kMaxLogRatio);
        return std::exp(lq) * f(big) / big;
      }
      return std::exp(lp) * f(std::exp(lr));
    };
    const double sp = std::sqrt(gp.variance);
    const double sq = std::sqrt(gq.variance);
    std::vector<double> cuts{std::min(gp.mean - 40.0 * sp, gq.mean - 40.0 * sq), std::min(gp.mean, gq.mean),
                             std::max(gp.mean, gq.mean), std::max(gp.mean + 40.0 * sp, gq.mean + 40.0 * sq)};
    CompensatedSum total;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i + 1] <= cuts[i]) continue;
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, cuts[i], cuts[i + 1], 20,
                                                                             1e-14);
    }
    return total.value();
  }
  const DiscretePair d = align(p, q);
  CompensatedSum total;
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    if (d.p[i] > 0.0) {
      total += d.p[i] * f(d.q[i] / d.p[i]);
    } else if (d.q[i] > 0.0) {
      if (std::isinf(f.slope_at_infinity())) return kInf;
      total += d.q[i] * f.slope_at_infinity();
    }
  }
  return total.value();
}

double kolmogorov_gaussian(const Gaussian& p, const Gaussian& q) {
  const double sp = std::sqrt(p.variance);
  const double sq = std::sqrt(q.variance);
  auto gap = [&](double x) { return std::abs(normal_cdf((x - p.mean) / sp) - normal_cdf((x - q.mean) / sq)); };
  const double lo = std::min(p.mean - 12.0 * sp, q.mean - 12.0 * sq);
  const double hi = std::max(p.mean + 12.0 * sp, q.mean + 12.0 * sq);
  constexpr int kGrid = 4096;
  const double h = (hi - lo) / kGrid;
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double v = gap(lo + i * h);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + std::max(best - 1, 0) * h;
  const double b = lo + std::min(best + 1, kGrid) * h;
  const auto [x, neg] = boost::math::tools::brent_find_minima([&](double x) { return -gap(x); }, a, b, 52);
  return std::max(best_val, -neg);
}

double total_variation(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q) {
  require_same_family(p, q, "total_variation");
  if (!p.is_discrete()) return kolmogorov_gaussian(std::get<Gaussian>(p.kind()), std::get<Gaussian>(q.kind()));
  const DiscretePair d = align(p, q);
  CompensatedSum total;
  for (std::size_t i = 0; i < d.points.size(); ++i) total += std::abs(d.p[i] - d.q[i]);
  return std::min(1.0, 0.5 * total.value());
}

double hellinger_divergence(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q) {
  return f_divergence(ConvexGenerator::hellinger(), q, p);
}

double hellinger(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q) {
  return std::sqrt(std::max(0.0, hellinger_divergence(p, q)));
}

double wasserstein1_1d(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q) {
  const bool dp = p.is_discrete();
  const bool dq = q.is_discrete();
  if (!dp && !dq) return w1_gaussian_pair(std::get<Gaussian>(p.kind()), std::get<Gaussian>(q.kind()));
  if (!dp) return w1_gaussian_discrete(std::get<Gaussian>(p.kind()), atoms_of(q));
  if (!dq) return w1_gaussian_discrete(std::get<Gaussian>(q.kind()), atoms_of(p));
  const Atoms ap = atoms_of(p);
  const Atoms aq = atoms_of(q);
  const std::vector<double> pts = union_points(ap, aq);
  CompensatedSum total;
  double cp = 0.0;
  double cq = 0.0;
  std::size_t ip = 0;
  std::size_t iq = 0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    while (ip < ap.points.size() && ap.points[ip] <= pts[k]) cp += ap.masses[ip++];
    while (iq < aq.points.size() && aq.points[iq] <= pts[k]) cq += aq.masses[iq++];
    total += std::abs(cp - cq) * (pts[k + 1] - pts[k]);
  }
  return total.value();
}

double expectation(const ProbabilityLaw1D& law, const SmoothTestFunction& f) {
  const auto& kind = law.kind();
  if (const auto* g = std::get_if<Gaussian>(&kind)) {
    const double s = std::sqrt(g->variance);
    return gauss::gauss_expectation_adaptive([&](double y) { return f(g->mean + s * y); }).value;
  }
  if (const auto* po = std::get_if<Poisson>(&kind)) {
    const poisson::DiscreteFunction df([&](long n) { return f(static_cast<double>(n)); },
                                       poisson::GrowthBound{f.envelope().scale, f.envelope().power}, f.name());
    return poisson::poisson_expectation(df, poisson::PoissonLaw(po->lambda), 1e-14).value;
  }
  if (const auto* rp = std::get_if<RescaledPoisson>(&kind)) {
    const double root = std::sqrt(rp->lambda);
    const double lambda = rp->lambda;
    const poisson::GrowthBound growth{f.envelope().scale * std::pow(1.0 + root, f.envelope().power),
                                      f.envelope().power};
    const poisson::DiscreteFunction df([&](long n) { return f((static_cast<double>(n) - lambda) / root); }, growth,
                                       f.name());
    return poisson::poisson_expectation(df, poisson::PoissonLaw(lambda), 1e-14).value;
  }
  const Atoms atoms = atoms_of(law);
  CompensatedSum total;
  for (std::size_t i = 0; i < atoms.points.size(); ++i) total += atoms.masses[i] * f(atoms.points[i]);
  return total.value();
}

double kr_dual_lower_bound(const ProbabilityLaw1D& p, const ProbabilityLaw1D& q,
                           const std::vector<SmoothTestFunction>& family) {
  if (family.empty()) throw InvalidArgument("kr_dual_lower_bound: empty test-function family");
  double best = 0.0;
  for (const auto& f : family) {
    check_norm_class(f);
    best = std::max(best, std::abs(expectation(p, f) - expectation(q, f)));
  }
  return best;
}

}  // namespace steinlab::metrics
