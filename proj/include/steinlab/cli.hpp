#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

// Experiment orchestration behind the `steinlab` executable.
namespace steinlab::cli {

inline constexpr const char* kVersion = "1.0.0";

const std::vector<std::string>& commands();

struct RunConfig {
  std::string command = "full-report";
  // Empty means the per-section default grid.
  std::vector<double> lambdas;
  double beta = 0.4;
  int grid = 256;
  long samples = 100000;
  std::uint64_t seed = 1;
  std::optional<double> tol;
  std::string out_dir = "steinlab-out";
  // Empty means every registered function.
  std::vector<std::string> family;
  std::string config_path;
  // Flag-vs-file conflicts, recorded into the run record.
  std::vector<std::string> notes;

  nlohmann::ordered_json to_json() const;
};

// Flags override config-file keys, which override defaults. Throws
// UsageError naming the offending token or constraint.
RunConfig parse_config(const std::vector<std::string>& args);

// One CSV row. Empty optionals become empty cells.
struct Row {
  std::string section;
  std::string function;
  std::optional<double> lambda;
  std::optional<double> gap;
  std::optional<double> bound;
  std::optional<double> edgeworth;
  std::optional<double> residual;
  std::optional<double> std_error;
  std::optional<double> budget;
  bool pass = true;
  // Only invariant rows turn a failed pass into a violation (exit 3).
  bool invariant = true;
};

struct RunRecord {
  nlohmann::ordered_json json;
  std::vector<Row> rows;
  std::vector<std::string> violations;
  int exit_code() const { return violations.empty() ? 0 : 3; }
};

RunRecord run(const RunConfig& config);

std::string to_csv(const std::vector<Row>& rows);

// Writes <out>/<command>-<seed>.json and .csv; returns the two paths.
std::vector<std::string> write_outputs(const RunConfig& config, const RunRecord& record);

// Full executable behaviour: parse, run, write, report. Returns the exit code
// (0 success, 2 usage error, 3 invariant violation, 1 other failure).
int main_entry(int argc, const char* const* argv);

}  // namespace steinlab::cli
