#pragma once

// Scenario configs resolved into measures, bodies, functions and runnable
// checks; a worker pool runs the checks and the results go to JSON and CSV.

#include "dilatio/config.hpp"
#include "dilatio/verifiers.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dilatio {

using CheckTask = std::function<std::vector<CheckResult>(const EstimationBudget&)>;

struct CheckSpec {
  std::string id;
  std::string kind;
  CheckTask run;
};

struct ScenarioConfig {
  ConfigTree tree;
  EstimationBudget budget;
  std::string out_dir = ".";
  std::map<std::string, Measure> measures;
  std::map<std::string, Body> bodies;
  std::map<std::string, QcFunction> functions;
  std::vector<CheckSpec> checks;

  const CheckSpec* find_check(const std::string& id) const;
};

/// Check kinds accepted in `check` blocks.
const std::vector<std::string>& check_kinds();

/// Resolves every reference and validates every check; throws ConfigError.
ScenarioConfig load_scenario(const ConfigTree& tree);

/// FNV-1a hash of the check id xor the global seed.
std::uint64_t check_seed(const std::string& id, std::uint64_t global_seed);

struct RunOptions {
  /// Config check ids to run; empty runs all.
  std::vector<std::string> only;
  /// Worker count; 0 means DILATIO_THREADS or the hardware concurrency.
  unsigned threads = 0;
};

/// DILATIO_THREADS if set, else the hardware concurrency (at least 1).
unsigned default_thread_count();

/// Results sorted by id. Errors raised by a check are rethrown as ConfigError
/// at the check's block.
std::vector<CheckResult> run_checks(const ScenarioConfig& scenario, const RunOptions& options = {});

/// 0 with no fails, 1 with a fail, 2 when only inconclusive results remain.
int exit_code(const std::vector<CheckResult>& results);

std::string report_json(const std::vector<CheckResult>& results, const EstimationBudget& budget);
/// id,lhs,rhs,stderr,status,seed with 17 significant digits.
std::string report_csv(const std::vector<CheckResult>& results);

struct SweepRequest {
  /// "key" (unique across checks) or "check-id.key".
  std::string parameter;
  std::vector<double> grid;
};

/// Parses "param=a,b,c"; throws ConfigError on a malformed request.
SweepRequest parse_sweep(const std::string& text);

/// Reruns the named check for each grid value; CSV columns value,lhs,rhs,margin,stderr,id
/// with one row per result of the check.
std::string run_sweep(const ConfigTree& tree, const SweepRequest& request, std::optional<std::uint64_t> seed,
                      std::optional<std::uint64_t> samples, unsigned threads = 0);

}  // namespace dilatio
