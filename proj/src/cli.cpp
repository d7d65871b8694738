#include "steinlab/cli.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "steinlab/besov.hpp"
#include "steinlab/errors.hpp"
#include "steinlab/hermite_gauss.hpp"
#include "steinlab/metrics.hpp"
#include "steinlab/numeric.hpp"
#include "steinlab/poisson_dirichlet.hpp"
#include "steinlab/rate_fit.hpp"
#include "steinlab/stein_engine.hpp"

namespace steinlab::cli {

using json = nlohmann::ordered_json;

namespace {

struct HelpRequested {
  std::string text;
};

const std::vector<double> kSteinGrid{4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0};
const std::vector<double> kBesovGrid{100.0, 1000.0, 10000.0};
const std::vector<double> kEdgeworthFitGrid{100.0, 1000.0, 10000.0};
constexpr double kCrossValidationLimit = 256.0;
constexpr double kIdentityTol = 1e-9;
constexpr double kIbpTol = 1e-10;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw UsageError("empty item in list '" + s + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double parse_real(const std::string& token, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw UsageError(what + ": cannot parse '" + token + "' as a number");
  }
  if (used != token.size() || !std::isfinite(v)) throw UsageError(what + ": cannot parse '" + token + "' as a number");
  return v;
}

std::vector<double> parse_lambdas(const std::vector<std::string>& tokens) {
  std::vector<double> out;
  for (const auto& t : tokens) out.push_back(parse_real(t, "--lambda"));
  return out;
}

// Registered one-dimensional test functions, by CLI name.
std::map<std::string, SmoothTestFunction> function_registry() {
  std::map<std::string, SmoothTestFunction> reg;
  for (const auto& f : stein::regression_family()) reg.emplace(f.name(), f);
  reg.emplace("cubic", functions::polynomial({0.0, 0.0, 0.0, 1.0}, "cubic"));
  reg.emplace("identity", functions::polynomial({0.0, 1.0}, "identity"));
  reg.emplace("square", functions::polynomial({0.0, 0.0, 1.0}, "square"));
  return reg;
}

std::vector<SmoothTestFunction> selected_functions(const RunConfig& cfg) {
  if (cfg.family.empty()) return stein::regression_family();
  const auto reg = function_registry();
  std::vector<SmoothTestFunction> out;
  for (const auto& name : cfg.family) out.push_back(reg.at(name));
  return out;
}

const std::vector<double>& grid_or(const RunConfig& cfg, const std::vector<double>& fallback) {
  return cfg.lambdas.empty() ? fallback : cfg.lambdas;
}

bool in_unit_ball(const SmoothTestFunction& f) { return f.norm_class() == NormClass::c2b_unit; }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json fit_json(const RateFit& fit) {
  json j;
  j["exponent"] = fit.exponent;
  j["intercept"] = fit.intercept;
  j["max_abs_residual"] = fit.max_abs_residual;
  j["lambdas"] = fit.lambdas;
  j["exponent_stderr"] = opt(fit.exponent_stderr);
  return j;
}

void validate(RunConfig& c) {
  const auto& cmds = commands();
  if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end()) {
    throw UsageError("unknown command '" + c.command + "'");
  }
  if (!(c.beta > 0.0 && c.beta < 0.5)) {
    throw UsageError("--beta " + format_double(c.beta) + ": beta must satisfy 0 < beta < 1/2");
  }
  if (c.grid < 64 || (c.grid & (c.grid - 1)) != 0) {
    throw UsageError("--grid " + std::to_string(c.grid) + ": grid size must be a power of two >= 64");
  }
  if (c.samples < 16) throw UsageError("--samples " + std::to_string(c.samples) + ": at least 16 samples required");
  for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
    if (!(c.lambdas[i] > 0.0)) throw UsageError("--lambda " + format_double(c.lambdas[i]) + ": must be positive");
    if (i > 0 && !(c.lambdas[i] > c.lambdas[i - 1])) {
      throw UsageError("--lambda: values must be strictly increasing (" + format_double(c.lambdas[i]) + ")");
    }
  }
  if (c.tol && !(*c.tol > 0.0)) throw UsageError("--tol: tolerance must be positive");
  const auto reg = function_registry();
  for (const auto& name : c.family) {
    if (!reg.contains(name)) throw UsageError("--family: unknown function '" + name + "'");
  }
  if (c.out_dir.empty()) throw UsageError("--out: empty output directory");
}

// ---- sections -------------------------------------------------------------

struct Section {
  std::string name;
  json data;
  std::vector<Row> rows;
};

Section gaussian_checks() {
  Section s{"gaussian-checks", json::object(), {}};
  const auto& gh = gauss::GaussHermiteRule::standard(128);
  const std::vector<SmoothTestFunction> battery = {functions::sine(1.0), functions::hyperbolic_tangent(),
                                                   functions::gaussian_bump(0.5), functions::monomial(3),
                                                   functions::hermite_function(2)};
  const std::vector<double> xs = linspace(-3.0, 3.0, 13);

  double ibp = 0.0;
  for (const auto& f : battery) {
    for (const auto& g : battery) {
      const double lhs = gauss::gauss_expectation_adaptive([&](double y) { return f.derivative(1, y) * g(y); }).value;
      const double rhs =
          gauss::gauss_expectation_adaptive([&](double y) { return f(y) * gauss::gaussian_adjoint(g, y); }).value;
      ibp = std::max(ibp, std::abs(lhs - rhs));
    }
  }
  s.rows.push_back({s.name, "ibp", {}, ibp, kIbpTol, {}, {}, {}, {}, ibp < kIbpTol, true});

  const auto sine = functions::sine(1.0);
  double semigroup = 0.0;
  for (double x : xs) {
    const double composed = gauss::mehler_apply(
        [&](double y) { return gauss::mehler_apply(sine, 0.7, y, gh); }, 0.3, x, gh);
    semigroup = std::max(semigroup, std::abs(composed - gauss::mehler_apply(sine, 1.0, x, gh)));
  }
  s.rows.push_back({s.name, "mehler_semigroup", {}, semigroup, kIdentityTol, {}, {}, {}, {}, semigroup < kIdentityTol,
                    true});

  double eigen = 0.0;
  for (int n = 0; n <= 6; ++n) {
    const auto h = functions::hermite_function(n);
    for (double t : {0.1, 1.0, 5.0}) {
      for (double x : xs) {
        eigen = std::max(eigen, std::abs(gauss::mehler_apply(h, t, x, gh) - std::exp(-n * t) * h(x)));
      }
    }
  }
  s.rows.push_back({s.name, "hermite_eigen", {}, eigen, kIdentityTol, {}, {}, {}, {}, eigen < kIdentityTol, true});

  double commutation = 0.0;
  for (const auto& f : battery) {
    const auto df = f.derivative_function(1);
    for (double t : {0.1, 1.0, 5.0}) {
      for (double x : xs) {
        const double lhs = gauss::semigroup_derivative(f, t, x, 1, gh);
        commutation = std::max(commutation, std::abs(lhs - std::exp(-t) * gauss::mehler_apply(df, t, x, gh)));
      }
    }
  }
  s.rows.push_back(
      {s.name, "commutation", {}, commutation, kIdentityTol, {}, {}, {}, {}, commutation < kIdentityTol, true});

  const double mixed3 = gauss::ou_kernel_time_integral(gauss::TimeKernel::mixed3());
  const double kernel_err = std::abs(mixed3 - std::numbers::pi / 4.0);
  s.rows.push_back({s.name, "kernel_mixed3", {}, kernel_err, 1e-10, {}, {}, {}, {}, kernel_err < 1e-10, true});
  json kernels;
  for (int k = 1; k <= 4; ++k) {
    const double v = gauss::ou_kernel_time_integral(gauss::TimeKernel::pure(k));
    kernels["pure" + std::to_string(k)] = std::isinf(v) ? json("divergent") : json(v);
  }
  kernels["mixed3"] = mixed3;
  s.data["time_kernels"] = kernels;
  return s;
}

Section poisson_checks(const RunConfig& cfg) {
  Section s{"poisson-checks", json::object(), {}};
  auto bounded = [](double (*fn)(double), const char* name) {
    return poisson::DiscreteFunction([fn](long n) { return fn(0.1 * static_cast<double>(n)); },
                                     poisson::GrowthBound{1.0, 0.0}, name);
  };
  const std::vector<poisson::DiscreteFunction> battery = {
      bounded([](double x) { return std::sin(x); }, "sin(n/10)"),
      bounded([](double x) { return std::tanh(x - 1.0); }, "tanh(n/10-1)"),
      bounded([](double x) { return std::cos(3.0 * x); }, "cos(3n/10)"),
      poisson::DiscreteFunction([](long n) { return static_cast<double>(n); }, poisson::GrowthBound{1.0, 1.0}, "n"),
  };
  for (double lambda : grid_or(cfg, kSteinGrid)) {
    const poisson::PoissonLaw law(lambda);
    double ibp = 0.0;
    for (const auto& f : battery) {
      for (const auto& g : battery) ibp = std::max(ibp, poisson::ibp_residual(f, g, law));
    }
    // Tolerance relative to the size of the terms, which grow like lambda.
    const double tol = kIbpTol * std::max(1.0, lambda);
    s.rows.push_back({s.name, "ibp", lambda, ibp, tol, {}, {}, {}, {}, ibp < tol, true});

    double stationarity = 0.0;
    for (const auto& f : battery) {
      const auto lf = poisson::mm_infinity_generator(f, lambda);
      stationarity = std::max(stationarity, std::abs(poisson::poisson_expectation(lf, law, 1e-14).value));
    }
    s.rows.push_back({s.name, "stationarity", lambda, stationarity, tol, {}, {}, {}, {}, stationarity < tol, true});

    const double chen = std::abs(stein::chen_identity_residual(functions::sine(1.0), lambda));
    s.rows.push_back({s.name, "chen_identity", lambda, chen, kIbpTol, {}, {}, {}, {}, chen < kIbpTol, true});
  }
  return s;
}

Section metrics_section(const RunConfig& cfg) {
  Section s{"metrics", json::object(), {}};
  const auto family = stein::regression_family();
  const auto gaussian = metrics::ProbabilityLaw1D::gaussian(0.0, 1.0);
  json lip = json::array();
  std::vector<std::pair<double, double>> w1_pairs;
  for (double lambda : grid_or(cfg, kSteinGrid)) {
    const auto zhat = metrics::ProbabilityLaw1D::rescaled_poisson(lambda);
    const double kr = metrics::kr_dual_lower_bound(zhat, gaussian, family);
    const double c2b = stein::c2b_bound(lambda);
    s.rows.push_back({s.name, "kr_c2b_family", lambda, kr, c2b, {}, {}, {}, 1e-12, kr <= c2b + 1e-12, true});

    const double w1 = metrics::wasserstein1_1d(zhat, gaussian);
    const double inv_lambda = stein::lip_bound(lambda, stein::LipReading::inverse_lambda);
    const double inv_sqrt = stein::lip_bound(lambda, stein::LipReading::inverse_sqrt_lambda);
    s.rows.push_back({s.name, "w1", lambda, w1, inv_sqrt, {}, {}, {}, 1e-12, w1 <= inv_sqrt + 1e-12, false});
    lip.push_back({{"lambda", lambda},
                   {"w1", w1},
                   {"inverse_lambda_bound", inv_lambda},
                   {"inverse_lambda_holds", w1 <= inv_lambda},
                   {"inverse_sqrt_lambda_bound", inv_sqrt},
                   {"inverse_sqrt_lambda_holds", w1 <= inv_sqrt}});
    w1_pairs.emplace_back(lambda, w1);
  }
  s.data["lip_envelope"] = lip;
  if (w1_pairs.size() >= 3) s.data["w1_rate"] = fit_json(fit_rate(w1_pairs));
  return s;
}

Section stein_section(const RunConfig& cfg, std::vector<std::string>& violations) {
  Section s{"stein", json::object(), {}};
  const double slack = cfg.tol.value_or(1e-7);
  json cross = json::array();
  for (const auto& f : selected_functions(cfg)) {
    for (double lambda : grid_or(cfg, kSteinGrid)) {
      const auto r = stein::make_report(f, lambda);
      const bool pass = r.within_bound();
      s.rows.push_back({s.name, f.name(), lambda, r.observed_gap, r.upper_bound, r.edgeworth_term, r.residual,
                        {}, r.budget(), pass, in_unit_ball(f)});
      if (lambda <= kCrossValidationLimit && f.max_order() >= 2) {
        json entry{{"function", f.name()}, {"lambda", lambda}};
        try {
          entry["discrepancy"] = stein::cross_validate(f, lambda, {}, slack);
          entry["agrees"] = true;
        } catch (const ToleranceExceeded& e) {
          entry["discrepancy"] = e.discrepancy();
          entry["agrees"] = false;
          violations.push_back(e.what());
        }
        cross.push_back(entry);
      }
    }
  }
  s.data["cross_validation"] = cross;
  s.data["bound_constant"] = stein::c2b_bound(1.0);
  return s;
}

Section edgeworth_section(const RunConfig& cfg) {
  Section s{"edgeworth", json::object(), {}};
  json fits = json::object();
  for (const auto& f : selected_functions(cfg)) {
    std::vector<std::pair<double, double>> residuals;
    for (double lambda : grid_or(cfg, kEdgeworthFitGrid)) {
      const auto r = stein::make_report(f, lambda);
      s.rows.push_back({s.name, f.name(), lambda, r.observed_gap, r.upper_bound, r.edgeworth_term, r.residual,
                        {}, r.budget(), true, false});
      if (std::abs(r.residual) > 1e-12) residuals.emplace_back(lambda, std::abs(r.residual));
    }
    if (residuals.size() >= 3) {
      fits[f.name()] = fit_json(fit_rate(residuals));
    } else {
      fits[f.name()] = "residual below 1e-12 (exact first-order correction)";
    }
    if (f.max_order() >= 3) {
      double sup3 = 0.0;
      for (double x : linspace(-10.0, 10.0, 8001)) sup3 = std::max(sup3, std::abs(f.derivative(3, x)));
      const double lambda = grid_or(cfg, kEdgeworthFitGrid).front();
      const auto ig = stein::edgeworth_intermediate_gap(f, lambda, 1.0, sup3);
      s.rows.push_back({"edgeworth-intermediate", f.name(), lambda, std::abs(ig.remainder), ig.remainder_bound, {},
                        {}, {}, {}, std::abs(ig.remainder) <= ig.remainder_bound, in_unit_ball(f)});
    }
  }
  s.data["residual_fits"] = fits;
  return s;
}

Section rate_section(const RunConfig& cfg) {
  Section s{"rate", json::object(), {}};
  json fits = json::object();
  for (const auto& f : selected_functions(cfg)) {
    std::vector<std::pair<double, double>> pairs;
    for (double lambda : grid_or(cfg, kSteinGrid)) {
      const auto e = stein::stein_error_detail(f, lambda);
      s.rows.push_back(
          {s.name, f.name(), lambda, e.value, {}, {}, {}, {}, e.budget.total(), true, false});
      pairs.emplace_back(lambda, std::abs(e.value));
    }
    json entry;
    entry["symmetric"] = stein::is_symmetric(f);
    try {
      entry["fit"] = fit_json(fit_rate(pairs));
    } catch (const InvalidArgument& e) {
      entry["fit"] = nullptr;
      entry["reason"] = e.what();
    }
    fits[f.name()] = entry;
  }
  s.data["gap_fits"] = fits;
  return s;
}

Section besov_section(const RunConfig& cfg) {
  Section s{"besov", json::object(), {}};
  const besov::GridConfig grid{cfg.grid, cfg.beta};
  const auto v = besov::v_beta_operator(grid);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v.matrix, Eigen::EigenvaluesOnly);
  const double min_ratio = eig.eigenvalues().minCoeff() / eig.eigenvalues().maxCoeff();
  s.rows.push_back({s.name, "v_beta_asymmetry", {}, v.asymmetry, 1e-2, {}, {}, {}, {}, v.asymmetry < 1e-2, true});
  s.rows.push_back({s.name, "v_beta_min_eigen_ratio", {}, min_ratio, -1e-8, {}, {}, {}, {}, min_ratio >= -1e-8, true});

  const Eigen::VectorXd x = grid.midpoints();
  double inverse_pair = 0.0;
  for (double alpha : {0.1, 0.25, 0.4, 0.49}) {
    const Eigen::VectorXd g = (2.0 * x.array()).cos().matrix() + x;
    const Eigen::VectorXd back = besov::frac_derivative_left(alpha, besov::frac_integral_left(alpha, g));
    inverse_pair = std::max(inverse_pair, (back - g).cwiseAbs().maxCoeff());
  }
  s.rows.push_back({s.name, "inverse_pair", {}, inverse_pair, 1e-10, {}, {}, {}, {}, inverse_pair < 1e-10, true});

  const auto family = besov::default_functional_family(grid);
  const auto result =
      besov::functional_rate_experiment(family, grid_or(cfg, kBesovGrid), cfg.samples, cfg.seed, grid);
  for (const auto& c : result.cells) {
    s.rows.push_back({s.name, c.functional, c.lambda, c.gap, {}, {}, {}, c.std_error, {}, true, false});
  }
  json quad = json::array();
  for (const auto& f : family) quad.push_back({{"functional", f.name}, {"sigma2", besov::v_beta_quadratic_form(v, f.eta)}});
  s.data["direction_variances"] = quad;
  s.data["v_beta_condition_estimate"] = v.condition_estimate;
  s.data["inconclusive"] = result.inconclusive;
  s.data["diagnostic"] = result.diagnostic;
  if (result.fit) {
    const bool in_range = result.fit->exponent >= -0.7 && result.fit->exponent <= -0.3;
    const bool covers = result.band_low <= -0.5 && -0.5 <= result.band_high;
    s.data["fit"] = fit_json(*result.fit);
    s.data["band"] = {result.band_low, result.band_high};
    s.rows.push_back({"besov-rate", "family-max", {}, result.fit->exponent, -0.5, {}, {},
                      *result.fit->exponent_stderr, {}, in_range && covers, false});
  } else {
    s.data["fit"] = nullptr;
  }
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> list{"metrics", "gaussian-checks", "poisson-checks", "stein",
                                             "edgeworth", "rate",          "besov",          "full-report"};
  return list;
}

json RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["lambda"] = lambdas;
  j["beta"] = beta;
  j["grid"] = grid;
  j["samples"] = samples;
  j["seed"] = seed;
  j["tol"] = opt(tol);
  j["out"] = out_dir;
  j["family"] = family;
  j["config"] = config_path;
  return j;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Numerical Stein-method laboratory: Poisson to Gaussian approximation", "steinlab"};
  std::string command;
  std::string lambda_csv, family_csv, out_dir, config_path;
  double beta = 0.0, tol = 0.0;
  int grid = 0;
  long samples = 0;
  std::uint64_t seed = 0;
  app.add_option("command", command, "one of: metrics, gaussian-checks, poisson-checks, stein, edgeworth, rate, "
                                     "besov, full-report (default full-report)");
  auto* o_lambda = app.add_option("--lambda", lambda_csv, "comma-separated, strictly increasing intensities");
  auto* o_beta = app.add_option("--beta", beta, "Besov-Liouville exponent, 0 < beta < 1/2");
  auto* o_grid = app.add_option("--grid", grid, "grid points on [0,1], power of two >= 64");
  auto* o_samples = app.add_option("--samples", samples, "Monte Carlo samples per lambda");
  auto* o_seed = app.add_option("--seed", seed, "64-bit seed");
  auto* o_out = app.add_option("--out", out_dir, "output directory");
  auto* o_tol = app.add_option("--tol", tol, "slack for the Stein-Dirichlet cross-validation");
  app.add_option("--config", config_path, "JSON file with default values for the flags");
  auto* o_family = app.add_option("--family,--function", family_csv, "comma-separated test-function names");

  std::vector<const char*> argv{"steinlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunConfig c;
  c.config_path = config_path;
  std::set<std::string> file_keys;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("--config: cannot open '" + config_path + "'");
    nlohmann::json file;
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("--config '" + config_path + "': malformed JSON (" + e.what() + ")");
    }
    if (!file.is_object()) throw UsageError("--config '" + config_path + "': top level must be an object");
    try {
      for (const auto& [key, value] : file.items()) {
        file_keys.insert(key);
        if (key == "command") {
          c.command = value.get<std::string>();
        } else if (key == "lambda") {
          c.lambdas = value.is_string() ? parse_lambdas(split_csv(value.get<std::string>()))
                                        : value.get<std::vector<double>>();
        } else if (key == "beta") {
          c.beta = value.get<double>();
        } else if (key == "grid") {
          c.grid = value.get<int>();
        } else if (key == "samples") {
          c.samples = value.get<long>();
        } else if (key == "seed") {
          c.seed = value.get<std::uint64_t>();
        } else if (key == "out") {
          c.out_dir = value.get<std::string>();
        } else if (key == "tol") {
          c.tol = value.get<double>();
        } else if (key == "family") {
          c.family = value.is_string() ? split_csv(value.get<std::string>())
                                       : value.get<std::vector<std::string>>();
        } else {
          throw UsageError("--config '" + config_path + "': unknown key '" + key + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("--config '" + config_path + "': wrong value type (" + e.what() + ")");
    }
  }

  auto note = [&](const std::string& flag, const json& file_value, const json& flag_value) {
    if (file_keys.contains(flag) && file_value != flag_value) {
      c.notes.push_back("--" + flag + " overrides the config file value " + file_value.dump());
    }
  };
  if (!command.empty()) {
    note("command", c.command, command);
    c.command = command;
  }
  if (*o_lambda) {
    const auto v = parse_lambdas(split_csv(lambda_csv));
    note("lambda", c.lambdas, v);
    c.lambdas = v;
  }
  if (*o_beta) {
    note("beta", c.beta, beta);
    c.beta = beta;
  }
  if (*o_grid) {
    note("grid", c.grid, grid);
    c.grid = grid;
  }
  if (*o_samples) {
    note("samples", c.samples, samples);
    c.samples = samples;
  }
  if (*o_seed) {
    note("seed", c.seed, seed);
    c.seed = seed;
  }
  if (*o_out) {
    note("out", c.out_dir, out_dir);
    c.out_dir = out_dir;
  }
  if (*o_tol) {
    note("tol", opt(c.tol), tol);
    c.tol = tol;
  }
  if (*o_family) {
    const auto v = split_csv(family_csv);
    note("family", c.family, v);
    c.family = v;
  }
  validate(c);
  return c;
}

RunRecord run(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord record;
  std::vector<Section> sections;
  const std::string& cmd = config.command;
  const bool all = cmd == "full-report";
  if (all || cmd == "gaussian-checks") sections.push_back(gaussian_checks());
  if (all || cmd == "poisson-checks") sections.push_back(poisson_checks(config));
  if (all || cmd == "metrics") sections.push_back(metrics_section(config));
  if (all || cmd == "stein") sections.push_back(stein_section(config, record.violations));
  if (all || cmd == "edgeworth") sections.push_back(edgeworth_section(config));
  if (all || cmd == "rate") sections.push_back(rate_section(config));
  if (all || cmd == "besov") sections.push_back(besov_section(config));

  json sections_json = json::object();
  double worst_budget = 0.0;
  for (auto& s : sections) {
    for (const auto& r : s.rows) {
      if (r.invariant && !r.pass) {
        record.violations.push_back(r.section + "/" + r.function +
                                    (r.lambda ? " at lambda = " + format_double(*r.lambda) : std::string()) +
                                    ": gap " + csv_number(r.gap) + " exceeds bound " + csv_number(r.bound));
      }
      if (r.budget) worst_budget = std::max(worst_budget, *r.budget);
      record.rows.push_back(r);
    }
    sections_json[s.name] = s.data;
  }

  json& j = record.json;
  j["artifact"] = "steinlab";
  j["version"] = kVersion;
  j["config"] = config.to_json();
  j["notes"] = config.notes;
  j["sections"] = sections_json;
  json rows = json::array();
  for (const auto& r : record.rows) {
    rows.push_back({{"section", r.section},
                    {"function", r.function},
                    {"lambda", opt(r.lambda)},
                    {"gap", opt(r.gap)},
                    {"bound", opt(r.bound)},
                    {"edgeworth", opt(r.edgeworth)},
                    {"residual", opt(r.residual)},
                    {"stderr", opt(r.std_error)},
                    {"budget", opt(r.budget)},
                    {"pass", r.pass},
                    {"invariant", r.invariant}});
  }
  j["rows"] = rows;
  j["error_budget_summary"] = {{"max_row_budget", worst_budget}};
  j["violations"] = record.violations;
  j["status"] = record.violations.empty() ? "ok" : "invariant-violation";
  j["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

std::string to_csv(const std::vector<Row>& rows) {
  std::string out = "section,function,lambda,gap,bound,edgeworth,residual,stderr,budget,pass\r\n";
  for (const auto& r : rows) {
    out += csv_field(r.section) + ',' + csv_field(r.function) + ',' + csv_number(r.lambda) + ',' +
           csv_number(r.gap) + ',' + csv_number(r.bound) + ',' + csv_number(r.edgeworth) + ',' +
           csv_number(r.residual) + ',' + csv_number(r.std_error) + ',' + csv_number(r.budget) + ',' +
           (r.pass ? "true" : "false") + "\r\n";
  }
  return out;
}

std::vector<std::string> write_outputs(const RunConfig& config, const RunRecord& record) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw UsageError("--out '" + config.out_dir + "': cannot create directory (" + ec.message() + ")");
  const std::string stem = config.command + "-" + std::to_string(config.seed);
  const fs::path json_path = fs::path(config.out_dir) / (stem + ".json");
  const fs::path csv_path = fs::path(config.out_dir) / (stem + ".csv");
  std::ofstream js(json_path, std::ios::binary);
  std::ofstream cs(csv_path, std::ios::binary);
  if (!js || !cs) throw UsageError("--out '" + config.out_dir + "': directory is not writable");
  js << record.json.dump(2) << '\n';
  cs << to_csv(record.rows);
  return {json_path.string(), csv_path.string()};
}

int main_entry(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig config;
  try {
    config = parse_config(args);
  } catch (const HelpRequested& h) {
    std::cout << h.text;
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }
  try {
    const RunRecord record = run(config);
    const auto paths = write_outputs(config, record);
    std::cout << config.command << ": " << record.rows.size() << " rows, " << record.violations.size()
              << " invariant violations\n";
    for (const auto& v : record.violations) std::cout << "  violation: " << v << '\n';
    for (const auto& p : paths) std::cout << "  wrote " << p << '\n';
    return record.exit_code();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace steinlab::cli
