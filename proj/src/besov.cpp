#include "steinlab/besov.hpp"

#include <algorithm>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <future>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "steinlab/errors.hpp"
#include "steinlab/hermite_gauss.hpp"
#include "steinlab/numeric.hpp"

namespace steinlab::besov {

namespace {

void require_alpha(double alpha, double upper, const char* op) {
  if (!(alpha > 0.0) || alpha > upper) {
    throw DomainError(std::string(op) + ": alpha = " + format_double(alpha) + " outside (0, " + format_double(upper) +
                      "]");
  }
}

void require_size(Eigen::Index n, const char* op) {
  if (n < 1) throw InvalidArgument(std::string(op) + ": empty grid function");
}

Eigen::MatrixXd reversal_conjugate(const Eigen::MatrixXd& a) { return a.colwise().reverse().rowwise().reverse(); }

std::shared_ptr<const FractionalOperator> build_left(int n, double alpha) {
  auto op = std::make_shared<FractionalOperator>();
  op->kind = OperatorKind::left_integral;
  op->alpha = alpha;
  const double h = 1.0 / n;
  const double norm = std::tgamma(alpha + 1.0);
  // Toeplitz: the weight depends only on i - j.
  std::vector<double> band(n);
  band[0] = std::pow(0.5 * h, alpha) / norm;
  for (int d = 1; d < n; ++d) band[d] = (std::pow((d + 0.5) * h, alpha) - std::pow((d - 0.5) * h, alpha)) / norm;
  op->matrix = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) op->matrix(i, j) = band[i - j];
  }
  const Eigen::MatrixXd inverse =
      op->matrix.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  op->condition_estimate = op->matrix.cwiseAbs().colwise().sum().maxCoeff() *
                           inverse.cwiseAbs().colwise().sum().maxCoeff();
  return op;
}

template <typename Builder>
std::shared_ptr<const FractionalOperator> cached(std::map<std::pair<int, double>, std::shared_ptr<const FractionalOperator>>& cache,
                                                 int n, double alpha, Builder build) {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, alpha}];
  if (!slot) slot = build(n, alpha);
  return slot;
}

// Lengths of [0, x_0], (x_0, x_1], ..., (x_{n-2}, x_{n-1}].
std::vector<double> count_intervals(int n) {
  std::vector<double> len(n, 1.0 / n);
  len[0] = 0.5 / n;
  return len;
}

// Weights W with <eta, omega>_{beta,2} = sum_k W_k (increment of omega over
// interval k), for omega sampled at the midpoints.
Eigen::VectorXd increment_weights(const BesovVector& eta, const GridConfig& cfg) {
  const auto a = left_integral_operator(cfg.n, cfg.beta);
  // <eta, omega> = h eta_dot^T A^{-1} omega = w^T omega.
  const Eigen::VectorXd w =
      cfg.h() * a->matrix.transpose().triangularView<Eigen::Upper>().solve(eta.derivative_samples);
  Eigen::VectorXd suffix(cfg.n);
  double acc = 0.0;
  for (int k = cfg.n - 1; k >= 0; --k) {
    acc += w[k];
    suffix[k] = acc;
  }
  return suffix;
}

}  // namespace

void GridConfig::validate() const {
  if (n < 64 || (n & (n - 1)) != 0) throw InvalidArgument("GridConfig: n must be a power of two >= 64");
  if (!(beta > 0.0 && beta < 0.5)) throw InvalidArgument("GridConfig: beta must lie in (0, 1/2)");
}

Eigen::VectorXd GridConfig::midpoints() const {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = (i + 0.5) / n;
  return x;
}

CountingPath::CountingPath(std::vector<double> atoms) : atoms_(std::move(atoms)) {
  for (double a : atoms_) {
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("CountingPath: atoms must lie in [0, 1]");
  }
  std::sort(atoms_.begin(), atoms_.end());
}

long CountingPath::count(double t) const {
  return static_cast<long>(std::upper_bound(atoms_.begin(), atoms_.end(), t) - atoms_.begin());
}

std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::left_integral: return "left_integral";
    case OperatorKind::right_integral: return "right_integral";
    case OperatorKind::left_derivative: return "left_derivative";
    case OperatorKind::v_beta: return "v_beta";
  }
  return "unknown";
}

std::shared_ptr<const FractionalOperator> left_integral_operator(int n, double alpha) {
  require_alpha(alpha, 1.0, "left_integral_operator");
  require_size(n, "left_integral_operator");
  static std::map<std::pair<int, double>, std::shared_ptr<const FractionalOperator>> cache;
  return cached(cache, n, alpha, build_left);
}

std::shared_ptr<const FractionalOperator> right_integral_operator(int n, double alpha) {
  require_alpha(alpha, 1.0, "right_integral_operator");
  require_size(n, "right_integral_operator");
  static std::map<std::pair<int, double>, std::shared_ptr<const FractionalOperator>> cache;
  return cached(cache, n, alpha, [](int m, double a) {
    const auto left = left_integral_operator(m, a);
    auto op = std::make_shared<FractionalOperator>(*left);
    op->kind = OperatorKind::right_integral;
    op->matrix = reversal_conjugate(left->matrix);
    return std::shared_ptr<const FractionalOperator>(op);
  });
}

Eigen::VectorXd frac_integral_left(double alpha, const Eigen::VectorXd& g) {
  require_alpha(alpha, 1.0, "frac_integral_left");
  require_size(g.size(), "frac_integral_left");
  const auto op = left_integral_operator(static_cast<int>(g.size()), alpha);
  return op->matrix.triangularView<Eigen::Lower>() * g;
}

Eigen::VectorXd frac_integral_right(double alpha, const Eigen::VectorXd& g) {
  require_alpha(alpha, 1.0, "frac_integral_right");
  require_size(g.size(), "frac_integral_right");
  const auto op = right_integral_operator(static_cast<int>(g.size()), alpha);
  return op->matrix.triangularView<Eigen::Upper>() * g;
}

double frac_integral_left_at(double alpha, const Eigen::VectorXd& g, double x) {
  require_alpha(alpha, 1.0, "frac_integral_left_at");
  require_size(g.size(), "frac_integral_left_at");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("frac_integral_left_at: x must lie in [0, 1]");
  const Eigen::Index n = g.size();
  const double h = 1.0 / static_cast<double>(n);
  CompensatedSum acc;
  for (Eigen::Index j = 0; j < n && j * h < x; ++j) {
    const double lo = j * h;
    const double hi = std::min((j + 1) * h, x);
    acc += g[j] * (std::pow(x - lo, alpha) - std::pow(x - hi, alpha));
  }
  return acc.value() / std::tgamma(alpha + 1.0);
}

Eigen::VectorXd frac_derivative_left(double alpha, const Eigen::VectorXd& f) {
  require_alpha(alpha, 0.5, "frac_derivative_left");
  require_size(f.size(), "frac_derivative_left");
  const auto op = left_integral_operator(static_cast<int>(f.size()), alpha);
  if (!(op->condition_estimate <= kConditionLimit)) {
    throw ConditioningError("frac_derivative_left: left-integral matrix is ill-conditioned", op->condition_estimate);
  }
  return op->matrix.triangularView<Eigen::Lower>().solve(f);
}

FractionalOperator v_beta_operator(const GridConfig& cfg) {
  cfg.validate();
  const auto a_beta = left_integral_operator(cfg.n, cfg.beta);
  if (!(a_beta->condition_estimate <= kConditionLimit)) {
    throw ConditioningError("v_beta_operator: I^beta is ill-conditioned", a_beta->condition_estimate);
  }
  const auto a_rest = left_integral_operator(cfg.n, 1.0 - cfg.beta);
  const auto r_rest = right_integral_operator(cfg.n, 1.0 - cfg.beta);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(cfg.n, cfg.n);
  const Eigen::MatrixXd a_beta_inv = a_beta->matrix.triangularView<Eigen::Lower>().solve(identity);

  // The four factors in their written order, acting on grid functions f.
  const Eigen::MatrixXd v_f = a_beta->matrix * a_rest->matrix * r_rest->matrix * a_beta_inv;
  // Same operator on density coordinates: f_dot -> (V f)_dot.
  const Eigen::MatrixXd m = a_beta_inv * v_f * a_beta->matrix;

  FractionalOperator out;
  out.kind = OperatorKind::v_beta;
  out.alpha = cfg.beta;
  out.condition_estimate = a_beta->condition_estimate;
  out.asymmetry = (m - m.transpose()).cwiseAbs().maxCoeff() / m.cwiseAbs().maxCoeff();
  out.matrix = 0.5 * (m + m.transpose());
  return out;
}

double v_beta_quadratic_form(const FractionalOperator& v, const BesovVector& eta) {
  if (v.matrix.rows() != eta.size()) throw InvalidArgument("v_beta_quadratic_form: grid mismatch");
  const double h = 1.0 / eta.size();
  return h * eta.derivative_samples.dot(v.matrix * eta.derivative_samples);
}

double besov_inner(const BesovVector& f, const BesovVector& g) {
  if (f.size() != g.size() || f.size() == 0) throw InvalidArgument("besov_inner: grid mismatch");
  return f.derivative_samples.dot(g.derivative_samples) / f.size();
}

Eigen::VectorXd path_on_grid(const CountingPath& path, double lambda, int n) {
  if (!(lambda > 0.0)) throw InvalidLaw("path_on_grid: lambda must be positive");
  require_size(n, "path_on_grid");
  const double root = std::sqrt(lambda);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) / n;
    out[i] = (static_cast<double>(path.count(x)) - lambda * x) / root;
  }
  return out;
}

BesovVector donsker_map(const CountingPath& path, double lambda, const GridConfig& cfg) {
  cfg.validate();
  return {frac_derivative_left(cfg.beta, path_on_grid(path, lambda, cfg.n))};
}

CountingPath sample_poisson_path(double lambda, std::uint64_t seed) {
  if (!(lambda > 0.0)) throw InvalidLaw("sample_poisson_path: lambda must be positive");
  std::mt19937_64 engine(seed);
  const long count = boost::random::poisson_distribution<long, double>(lambda)(engine);
  boost::random::uniform_01<double> unit;
  std::vector<double> atoms(static_cast<std::size_t>(count));
  for (double& a : atoms) a = unit(engine);
  return CountingPath(std::move(atoms));
}

Eigen::VectorXd sample_brownian_grid(int n, std::uint64_t seed) {
  require_size(n, "sample_brownian_grid");
  std::mt19937_64 engine(seed);
  boost::random::normal_distribution<double> normal;
  const auto len = count_intervals(n);
  Eigen::VectorXd b(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += std::sqrt(len[i]) * normal(engine);
    b[i] = acc;
  }
  return b;
}

BesovVector sample_brownian_path(const GridConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  return {frac_derivative_left(cfg.beta, sample_brownian_grid(cfg.n, seed))};
}

std::vector<PathFunctional> default_functional_family(const GridConfig& cfg) {
  cfg.validate();
  const Eigen::VectorXd x = cfg.midpoints();
  const std::vector<std::pair<std::string, Eigen::VectorXd>> directions = {
      {"one", Eigen::VectorXd::Ones(cfg.n)},
      {"cos", std::numbers::sqrt2 * (std::numbers::pi * x.array()).cos().matrix()},
      {"lin", std::sqrt(3.0) * x},
  };
  const std::vector<SmoothTestFunction> phis = {functions::sine(1.0).with_norm_class(NormClass::c2b_unit),
                                                functions::hyperbolic_tangent().with_norm_class(NormClass::c2b_unit)};
  std::vector<PathFunctional> out;
  for (const auto& phi : phis) {
    for (const auto& [name, eta] : directions) {
      out.push_back({phi.name() + "<" + name + ">", BesovVector{eta}, phi});
    }
  }
  return out;
}

namespace {

constexpr long kChunk = 4096;

// Draws samples [first, first + count) of chunk `chunk`: increments of N over
// the count intervals, combined into <eta_j, T(N)> for every direction j.
void draw_chunk(const std::vector<Eigen::VectorXd>& weights, double lambda, int n, long count, std::uint64_t seed,
                std::vector<std::vector<double>>& out) {
  std::mt19937_64 engine(seed);
  const auto len = count_intervals(n);
  boost::random::poisson_distribution<int, double> half(lambda * len[0]);
  boost::random::poisson_distribution<int, double> full(lambda * len[1]);
  const double root = std::sqrt(lambda);
  std::vector<double> centred(static_cast<std::size_t>(n));
  out.assign(weights.size(), std::vector<double>(static_cast<std::size_t>(count)));
  for (long s = 0; s < count; ++s) {
    centred[0] = (half(engine) - lambda * len[0]) / root;
    for (int k = 1; k < n; ++k) centred[k] = (full(engine) - lambda * len[k]) / root;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += weights[j][k] * centred[k];
      out[j][static_cast<std::size_t>(s)] = acc;
    }
  }
}

// Values of <eta_j, T(N)> for all directions, in a fixed chunk order.
std::vector<std::vector<double>> draw_values(const std::vector<Eigen::VectorXd>& weights, double lambda, int n,
                                             long samples, std::uint64_t seed) {
  const long chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::vector<std::vector<double>>> parts(static_cast<std::size_t>(chunks));
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  for (long start = 0; start < chunks; start += workers) {
    std::vector<std::future<void>> jobs;
    for (long c = start; c < std::min(chunks, start + static_cast<long>(workers)); ++c) {
      const long count = std::min(kChunk, samples - c * kChunk);
      jobs.push_back(std::async(std::launch::async, [&, c, count] {
        draw_chunk(weights, lambda, n, count, derive_seed(seed, static_cast<std::uint64_t>(c)),
                   parts[static_cast<std::size_t>(c)]);
      }));
    }
    for (auto& j : jobs) j.get();
  }
  std::vector<std::vector<double>> values(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    values[j].reserve(static_cast<std::size_t>(samples));
    for (const auto& part : parts) values[j].insert(values[j].end(), part[j].begin(), part[j].end());
  }
  return values;
}

struct ControlVariateMean {
  double mean = 0.0;
  double std_error = 0.0;
};

// Intercept of the regression of y on (1, X, X^2 - k2, X^3 - k3); the
// regressors other than the constant have exact mean zero.
ControlVariateMean control_variate_mean(const std::vector<double>& x, const std::vector<double>& y, double k2,
                                        double k3) {
  const std::size_t m = x.size();
  Eigen::Matrix4d gram = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  double yy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = x[i];
    const Eigen::Vector4d z(1.0, v, v * v - k2, v * v * v - k3);
    gram.noalias() += z * z.transpose();
    rhs += y[i] * z;
    yy += y[i] * y[i];
  }
  const Eigen::Matrix4d inv = gram.inverse();
  const Eigen::Vector4d coef = inv * rhs;
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = x[i];
    const Eigen::Vector4d z(1.0, v, v * v - k2, v * v * v - k3);
    const double r = y[i] - coef.dot(z);
    rss += r * r;
  }
  const double s2 = rss / static_cast<double>(m - 4);
  return {coef[0], std::sqrt(std::max(0.0, s2 * inv(0, 0)))};
}

}  // namespace

std::vector<double> sample_functional_values(const BesovVector& eta, double lambda, const GridConfig& cfg,
                                             long samples, std::uint64_t seed) {
  cfg.validate();
  if (!(lambda > 0.0)) throw InvalidLaw("sample_functional_values: lambda must be positive");
  if (eta.size() != cfg.n) throw InvalidArgument("sample_functional_values: grid mismatch");
  if (samples < 1) throw InvalidArgument("sample_functional_values: samples must be positive");
  return draw_values({increment_weights(eta, cfg)}, lambda, cfg.n, samples, seed)[0];
}

FunctionalRateResult functional_rate_experiment(const std::vector<PathFunctional>& family,
                                                const std::vector<double>& lambdas, long samples_per_lambda,
                                                std::uint64_t seed, const GridConfig& cfg) {
  cfg.validate();
  if (family.empty()) throw InvalidArgument("functional_rate_experiment: empty family");
  if (samples_per_lambda < 16) throw InvalidArgument("functional_rate_experiment: too few samples");
  for (const auto& f : family) {
    if (f.eta.size() != cfg.n) throw InvalidArgument("functional_rate_experiment: grid mismatch for " + f.name);
    check_norm_class(f.phi);
  }
  const auto len = count_intervals(cfg.n);
  std::vector<Eigen::VectorXd> weights;
  std::vector<double> sigma2;
  std::vector<double> third;  // sum W^3 len, so k3 = third / sqrt(lambda)
  for (const auto& f : family) {
    const Eigen::VectorXd w = increment_weights(f.eta, cfg);
    double s2 = 0.0;
    double s3 = 0.0;
    for (int k = 0; k < cfg.n; ++k) {
      s2 += w[k] * w[k] * len[k];
      s3 += w[k] * w[k] * w[k] * len[k];
    }
    weights.push_back(w);
    sigma2.push_back(s2);
    third.push_back(s3);
  }

  FunctionalRateResult result;
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> errors;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    const double lambda = lambdas[li];
    if (!(lambda > 0.0)) throw InvalidLaw("functional_rate_experiment: lambda must be positive");
    const auto values = draw_values(weights, lambda, cfg.n, samples_per_lambda, derive_seed(seed, 1000003ull * li));
    FunctionalGapEstimate best;
    best.gap = -1.0;
    for (std::size_t j = 0; j < family.size(); ++j) {
      const auto& f = family[j];
      const auto& x = values[j];
      std::vector<double> y(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = f.phi(x[i]);
      const auto cv = control_variate_mean(x, y, sigma2[j], third[j] / std::sqrt(lambda));
      const double sigma = std::sqrt(sigma2[j]);
      const double gauss_mean =
          gauss::gauss_expectation_adaptive([&](double u) { return f.phi(sigma * u); }, gauss::kDefaultRuleOrder, 1e-14)
              .value;
      FunctionalGapEstimate cell{f.name, lambda, cv.mean - gauss_mean, cv.std_error, cv.mean, gauss_mean};
      result.cells.push_back(cell);
      if (std::abs(cell.gap) > best.gap) {
        best = cell;
        best.gap = std::abs(cell.gap);
      }
    }
    result.maxima.push_back(best);
    if (!(best.gap > 0.0) || best.std_error > 0.5 * best.gap) {
      result.inconclusive = true;
      result.diagnostic += "lambda = " + format_double(lambda) + ": standard error " + format_double(best.std_error) +
                           " exceeds half the gap " + format_double(best.gap) + "; increase the sample count. ";
    }
    pairs.emplace_back(lambda, best.gap);
    errors.push_back(best.std_error);
  }
  if (result.inconclusive || pairs.size() < 3) {
    if (pairs.size() < 3) result.diagnostic += "at least 3 lambda values are needed for a fit.";
    result.inconclusive = true;
    return result;
  }
  result.fit = fit_rate_weighted(pairs, errors);
  const double se = *result.fit->exponent_stderr;
  result.band_low = result.fit->exponent - 1.96 * se;
  result.band_high = result.fit->exponent + 1.96 * se;
  return result;
}

}  // namespace steinlab::besov
