// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "steinlab/besov.hpp"
#include "steinlab/cli.hpp"
#include "steinlab/hermite_gauss.hpp"
#include "steinlab/metrics.hpp"
#include "steinlab/numeric.hpp"
#include "steinlab/poisson_dirichlet.hpp"
#include "steinlab/rate_fit.hpp"
#include "steinlab/stein_engine.hpp"

using namespace steinlab;
namespace fn = steinlab::functions;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] criterion %2d: %s | %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

const std::vector<double> kBoundLambdas{1.0, 4.0, 25.0, 100.0, 1e4};

Outcome criterion1() {
  const double expected = std::sqrt(std::numbers::pi) / (4.0 * std::numbers::sqrt2);
  const double got = stein::c2b_bound(1.0);
  const double factors = 0.5 * gauss::ou_kernel_time_integral(gauss::TimeKernel::mixed3()) * gaussian_abs_moment(1.0);
  const double literal = 0.5 * (std::numbers::pi / 4.0) * std::sqrt(2.0 / std::numbers::pi);
  const double e1 = std::abs(got - expected) / expected;
  const double e2 = std::max(std::abs(factors - got), std::abs(literal - got));
  return {e1 < 1e-12 && e2 < 1e-12,
          "bound(1) = " + format_double(got) + ", rel err " + num(e1) + ", three-factor diff " + num(e2)};
}

Outcome criterion2() {
  int ok = 0, cells = 0;
  double worst_ratio = 0.0;
  std::string worst;
  for (const auto& f : stein::regression_family()) {
    for (double lambda : kBoundLambdas) {
      const auto r = stein::make_report(f, lambda);
      ++cells;
      if (r.within_bound()) ++ok;
      const double ratio = std::abs(r.observed_gap) / r.upper_bound;
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst = f.name() + " at lambda " + num(lambda);
      }
    }
  }
  return {ok == cells && cells == 45,
          std::to_string(ok) + "/" + std::to_string(cells) + " cells within bound; largest |gap|/bound " +
              num(worst_ratio) + " (" + worst + ")"};
}

Outcome criterion3() {
  double worst = 0.0;
  std::string where;
  std::vector<std::future<std::pair<double, std::string>>> jobs;
  for (const auto& f : stein::regression_family()) {
    for (double lambda : {4.0, 25.0, 100.0}) {
      jobs.push_back(std::async(std::launch::async, [f, lambda] {
        const double d = std::abs(stein::stein_dirichlet_gap(f, lambda) - stein::stein_error(f, lambda));
        return std::make_pair(d, f.name() + " at lambda " + num(lambda));
      }));
    }
  }
  for (auto& j : jobs) {
    const auto [d, w] = j.get();
    if (d > worst) {
      worst = d;
      where = w;
    }
  }
  return {worst < 1e-6 && jobs.size() == 27, "max |gap - stein_error| = " + num(worst) + " (" + where + ")"};
}

Outcome criterion4() {
  double worst_identity = 0.0, worst_oracle = 0.0, worst_residual = 0.0;
  for (double lambda : {4.0, 16.0, 64.0, 256.0}) {
    const double e = stein::stein_error(fn::monomial(3), lambda);
    const double ref = oracle::poisson_sum([&](long n) { return std::pow((n - lambda) / std::sqrt(lambda), 3); }, lambda);
    worst_identity = std::max(worst_identity, std::abs(e - 1.0 / std::sqrt(lambda)));
    worst_oracle = std::max(worst_oracle, std::abs(e - ref));
    worst_residual = std::max(worst_residual, std::abs(e - stein::edgeworth_first_order(fn::monomial(3), lambda)));
  }
  return {worst_identity < 1e-9 && worst_oracle < 1e-9 && worst_residual < 1e-9,
          "max |err - lambda^-1/2| " + num(worst_identity) + ", vs summation oracle " + num(worst_oracle) +
              ", Edgeworth residual " + num(worst_residual)};
}

Outcome criterion5() {
  bool pass = true;
  std::ostringstream rates, residuals;
  for (const auto& f : stein::regression_family()) {
    std::vector<std::pair<double, double>> gap_pairs, res_pairs;
    for (double lambda : stein::default_lambda_grid()) gap_pairs.emplace_back(lambda, std::abs(stein::stein_error(f, lambda)));
    for (double lambda : {1e2, 1e3, 1e4}) {
      res_pairs.emplace_back(lambda, std::abs(stein::stein_error(f, lambda) - stein::edgeworth_first_order(f, lambda)));
    }
    if (!stein::is_symmetric(f)) {
      const double e = fit_rate(gap_pairs).exponent;
      rates << f.name() << "=" << num(e) << " ";
      pass = pass && std::abs(e + 0.5) <= 0.05;
    }
    const double r = fit_rate(res_pairs).exponent;
    residuals << f.name() << "=" << num(r) << " ";
    pass = pass && r <= -0.95;
  }
  return {pass, "gap exponents: " + rates.str() + "| residual exponents: " + residuals.str()};
}

Outcome criterion6() {
  const double mixed = gauss::ou_kernel_time_integral(gauss::TimeKernel::mixed3());
  bool divergent = true;
  for (int k = 2; k <= 6; ++k) divergent = divergent && std::isinf(gauss::ou_kernel_time_integral(gauss::TimeKernel::pure(k)));
  const double k1 = gauss::ou_kernel_time_integral(gauss::TimeKernel::pure(1));
  return {std::abs(mixed - std::numbers::pi / 4.0) < 1e-10 && divergent && std::isfinite(k1),
          "mixed3 = " + format_double(mixed) + " (err " + num(std::abs(mixed - std::numbers::pi / 4.0)) +
              "), pure(1) = " + num(k1) + ", pure(2..6) divergent: " + (divergent ? "yes" : "no")};
}

Outcome criterion7() {
  const auto& rule = gauss::GaussHermiteRule::standard(128);
  double gauss_ibp = 0.0;
  const std::vector<SmoothTestFunction> fs{fn::sine(1.0), fn::hyperbolic_tangent(), fn::monomial(3), fn::gaussian_bump(0.5)};
  const std::vector<SmoothTestFunction> gs{fn::monomial(2), fn::cosine(1.0), fn::arctangent(), fn::constant(1.0)};
  for (const auto& f : fs) {
    for (const auto& g : gs) {
      const double lhs = gauss::gauss_expectation_adaptive([&](double y) { return f.derivative(1, y) * g(y); }).value;
      const double rhs = gauss::gauss_expectation_adaptive([&](double y) { return f(y) * gauss::gaussian_adjoint(g, y); }).value;
      gauss_ibp = std::max(gauss_ibp, std::abs(lhs - rhs));
    }
  }

  double poisson_ibp = 0.0;
  using poisson::DiscreteFunction;
  using poisson::GrowthBound;
  const std::vector<DiscreteFunction> dfs{
      DiscreteFunction([](long n) { return 1.0 * n; }, GrowthBound{1.0, 1.0}),
      DiscreteFunction([](long n) { return 1.0 * n * n; }, GrowthBound{1.0, 2.0}),
      DiscreteFunction([](long n) { return std::sin(0.5 * n); }, GrowthBound{1.0, 0.0}),
      DiscreteFunction([](long) { return 1.0; }, GrowthBound{1.0, 0.0})};
  for (double lambda : {0.5, 2.0, 10.0}) {
    for (const auto& f : dfs) {
      for (const auto& g : dfs) poisson_ibp = std::max(poisson_ibp, poisson::ibp_residual(f, g, poisson::PoissonLaw(lambda)));
    }
  }

  double semigroup = 0.0, eigen = 0.0, commutation = 0.0;
  const std::vector<double> xs{-2.5, -1.0, 0.0, 0.6, 2.0};
  for (const auto& f : {fn::sine(1.0), fn::hyperbolic_tangent(), fn::gaussian_bump(-0.5)}) {
    for (double x : xs) {
      const double composed = gauss::mehler_apply(
          [&](double y) { return gauss::mehler_apply(f, 0.4, y, rule); }, 0.9, x, rule);
      semigroup = std::max(semigroup, std::abs(composed - gauss::mehler_apply(f, 1.3, x, rule)));
    }
  }
  for (int n = 0; n <= 6; ++n) {
    const auto h = fn::hermite_function(n);
    for (double t : {0.1, 1.0, 5.0}) {
      for (double x : xs) eigen = std::max(eigen, std::abs(gauss::mehler_apply(h, t, x, rule) - std::exp(-n * t) * h(x)));
    }
  }
  for (const auto& f : {fn::sine(1.0), fn::arctangent(), fn::monomial(3)}) {
    const auto df = f.derivative_function(1);
    for (double t : {0.1, 1.0, 5.0}) {
      for (double x : xs) {
        commutation = std::max(commutation, std::abs(gauss::semigroup_derivative(f, t, x, 1, rule) -
                                                     std::exp(-t) * gauss::mehler_apply(df, t, x, rule)));
      }
    }
  }
  return {gauss_ibp < 1e-10 && poisson_ibp < 1e-10 && semigroup < 1e-9 && eigen < 1e-9 && commutation < 1e-9,
          "Gaussian IBP " + num(gauss_ibp) + ", Poisson IBP " + num(poisson_ibp) + ", semigroup law " +
              num(semigroup) + ", Hermite eigen " + num(eigen) + ", commutation " + num(commutation)};
}

metrics::ProbabilityLaw1D random_pmf(std::mt19937_64& rng, long offset) {
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int k = size(rng);
  std::vector<long> support;
  std::vector<double> p;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    support.push_back(offset + i);
    p.push_back(u(rng) + 1e-3);
    total += p.back();
  }
  for (double& x : p) x /= total;
  return metrics::ProbabilityLaw1D::pmf(support, p);
}

Outcome criterion8() {
  using namespace metrics;
  std::mt19937_64 rng(8);
  const auto kl = ConvexGenerator::kullback_leibler();
  int pinsker_fail = 0;
  double worst_slack = -INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_pmf(rng, 0);
    const auto q = random_pmf(rng, 0);
    const double slack = total_variation(p, q) - std::sqrt(f_divergence(kl, p, q) / 2.0);
    worst_slack = std::max(worst_slack, slack);
    if (slack > 1e-12) ++pinsker_fail;
  }
  double asym = 0.0, self = 0.0, triangle = -INFINITY;
  for (int i = 0; i < 300; ++i) {
    const auto a = random_pmf(rng, static_cast<long>(rng() % 6));
    const auto b = random_pmf(rng, static_cast<long>(rng() % 6));
    const auto c = random_pmf(rng, static_cast<long>(rng() % 6));
    asym = std::max({asym, std::abs(total_variation(a, b) - total_variation(b, a)),
                     std::abs(hellinger(a, b) - hellinger(b, a)), std::abs(wasserstein1_1d(a, b) - wasserstein1_1d(b, a))});
    self = std::max({self, total_variation(a, a), hellinger(a, a), wasserstein1_1d(a, a)});
    triangle = std::max(triangle, wasserstein1_1d(a, c) - wasserstein1_1d(a, b) - wasserstein1_1d(b, c));
  }
  return {pinsker_fail == 0 && asym < 1e-10 && self < 1e-10 && triangle < 1e-8,
          "Pinsker failures " + std::to_string(pinsker_fail) + "/1000 (max TV - sqrt(KL/2) = " + num(worst_slack) +
              "), asymmetry " + num(asym) + ", identity " + num(self) + ", triangle excess " + num(triangle)};
}

Outcome criterion9() {
  using namespace besov;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  double inverse = 0.0;
  for (int n : {64, 256, 1024}) {
    Eigen::VectorXd g(n);
    for (auto& v : g) v = nd(rng);
    for (double a : {0.1, 0.25, 0.4, 0.49}) {
      inverse = std::max(inverse, (frac_derivative_left(a, frac_integral_left(a, g)) - g).cwiseAbs().maxCoeff());
    }
  }
  std::vector<double> errs;
  bool halves = true;
  for (int n : {64, 128, 256, 512, 1024}) {
    const GridConfig cfg{n, 0.4};
    const Eigen::VectorXd x = cfg.midpoints();
    const Eigen::VectorXd c = frac_integral_left(0.3, frac_integral_left(0.4, Eigen::VectorXd::Ones(n)));
    const Eigen::VectorXd exact = x.array().pow(0.7) / std::tgamma(1.7);
    errs.push_back(std::sqrt((c - exact).squaredNorm() / n));
    if (errs.size() > 1) halves = halves && errs.back() <= 0.55 * errs[errs.size() - 2];
  }
  std::string ratio_text;
  for (std::size_t i = 1; i < errs.size(); ++i) ratio_text += num(errs[i - 1] / errs[i]) + " ";
  const double probe = frac_integral_left_at(0.5, Eigen::VectorXd::Ones(256), 1.0);
  const double probe_err = std::abs(probe - 2.0 / std::sqrt(std::numbers::pi));
  // Power functions under the derivative: x^0.4/Gamma(1.4) must give 1, and
  // 2 x^1.4/Gamma(2.4) must give 2x with an error that shrinks like 1/n.
  double d_const = 0.0, d_prev = INFINITY, d_last = 0.0;
  bool d_order = true;
  for (int n : {128, 256, 512, 1024}) {
    const GridConfig cfg{n, 0.4};
    const Eigen::VectorXd x = cfg.midpoints();
    const Eigen::VectorXd f0 = x.array().pow(0.4) / std::tgamma(1.4);
    d_const = std::max(d_const, std::sqrt((frac_derivative_left(0.4, f0).array() - 1.0).square().sum() / n));
    const Eigen::VectorXd f1 = 2.0 * x.array().pow(1.4) / std::tgamma(2.4);
    d_last = std::sqrt((frac_derivative_left(0.4, f1) - 2.0 * x).squaredNorm() / n);
    d_order = d_order && d_last <= 0.6 * d_prev;
    d_prev = d_last;
  }
  return {inverse < 1e-10 && halves && probe_err < 1.0 / 256 && d_const < 1.0 / 1024 && d_order,
          "inverse pair " + num(inverse) + ", composition error ratios per doubling " + ratio_text +
              ", probe " + format_double(probe) + " (err " + num(probe_err) + "), derivative of power images: constant " +
              num(d_const) + ", linear at n=1024 " + num(d_last)};
}

Outcome criterion10() {
  using namespace besov;
  const GridConfig cfg{256, 0.4};
  const auto v = v_beta_operator(cfg);
  const Eigen::VectorXd x = cfg.midpoints();
  std::vector<BesovVector> etas{{Eigen::VectorXd::Ones(cfg.n)},
                                {(std::numbers::sqrt2 * (std::numbers::pi * x.array()).cos()).matrix()},
                                {(std::sqrt(3.0) * x.array()).matrix()}};
  const long samples = 100000;
  const long chunk = 6250;
  std::vector<std::future<std::vector<std::array<double, 3>>>> jobs;
  for (long start = 0; start < samples; start += chunk) {
    jobs.push_back(std::async(std::launch::async, [&, start] {
      std::vector<std::array<double, 3>> out;
      for (long s = start; s < std::min(samples, start + chunk); ++s) {
        const auto b = sample_brownian_path(cfg, derive_seed(10, static_cast<std::uint64_t>(s)));
        out.push_back({besov_inner(etas[0], b), besov_inner(etas[1], b), besov_inner(etas[2], b)});
      }
      return out;
    }));
  }
  std::array<std::vector<double>, 3> values;
  for (auto& j : jobs) {
    for (const auto& row : j.get()) {
      for (int k = 0; k < 3; ++k) values[k].push_back(row[k]);
    }
  }
  bool pass = true;
  std::string text;
  for (int k = 0; k < 3; ++k) {
    const auto m = oracle::sample_moments(values[k]);
    const double q = v_beta_quadratic_form(v, etas[k]);
    // Standard error of a sample variance, using the sample fourth moment.
    double m4 = 0.0;
    for (double y : values[k]) m4 += std::pow(y - m.mean, 4);
    m4 /= static_cast<double>(values[k].size());
    const double se = std::sqrt((m4 - m.variance * m.variance) / static_cast<double>(values[k].size()));
    const double z = (m.variance - q) / se;
    pass = pass && std::abs(z) <= 3.0;
    text += "eta" + std::to_string(k) + ": var " + num(m.variance) + " vs form " + num(q) + " (z " + num(z) + ") ";
  }
  return {pass, text};
}

Outcome criterion11() {
  using namespace besov;
  const GridConfig cfg{256, 0.4};
  const auto result = functional_rate_experiment(default_functional_family(cfg), {1e2, 1e3, 1e4}, 100000, 11, cfg);
  if (!result.fit) return {false, "no fit: " + result.diagnostic};
  const double e = result.fit->exponent;
  const bool covers = result.band_low <= -0.5 && -0.5 <= result.band_high;
  std::string gaps;
  for (const auto& m : result.maxima) gaps += num(m.lambda) + ":" + num(std::abs(m.gap)) + "+-" + num(m.std_error) + " ";
  return {e >= -0.7 && e <= -0.3 && covers,
          "exponent " + num(e) + ", 95% band [" + num(result.band_low) + ", " + num(result.band_high) + "], max gaps " + gaps};
}

Outcome criterion12() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "steinlab-acceptance";
  fs::remove_all(base);
  std::vector<std::string> csvs;
  for (const char* run_dir : {"first", "second"}) {
    const std::string out = (base / run_dir).string();
    const auto config = cli::parse_config({"full-report", "--seed", "12", "--out", out});
    const auto record = cli::run(config);
    const auto paths = cli::write_outputs(config, record);
    std::ifstream in(paths[1], std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    csvs.push_back(ss.str());
  }
  const bool same = csvs[0] == csvs[1] && !csvs[0].empty();
  return {same, std::to_string(csvs[0].size()) + " bytes per CSV, identical: " + (same ? "yes" : "no")};
}

}  // namespace

int main() {
  report(1, "c2b bound constant", criterion1);
  report(2, "c2b bound on 45 cells", criterion2);
  report(3, "Stein-Dirichlet cross-validation", criterion3);
  report(4, "exact cubic identity", criterion4);
  report(5, "rate exponents", criterion5);
  report(6, "kernel time integrals", criterion6);
  report(7, "Dirichlet-structure identities", criterion7);
  report(8, "Pinsker and metric axioms", criterion8);
  report(9, "fractional calculus", criterion9);
  report(10, "V_beta covariance", criterion10);
  report(11, "functional rate", criterion11);
  report(12, "determinism", criterion12);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
