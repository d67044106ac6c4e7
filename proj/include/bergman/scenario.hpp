#pragma once

#include "bergman/measure.hpp"
#include "bergman/orthopoly.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bergman {

struct Diagnostic {
  std::string op;
  std::string id;  // defaults to op; prefixes emitted quantities
  nlohmann::json params;
};

/// A check on one emitted quantity. Exactly one form is used:
/// |value - target| <= tolerance, value <= max, or value >= min.
struct Expectation {
  std::string quantity;
  std::optional<double> target;
  double tolerance = 0.0;
  std::optional<double> max;
  std::optional<double> min;
};

struct PartSpec {
  std::string kind;     // "area" | "boundary"
  std::string density;  // "const:c" | "dP:c"
  double scale = 1.0;
};

struct Scenario {
  std::string name;
  std::string description;
  std::vector<cplx> polynomial;
  double level = 1.0;
  std::vector<PartSpec> parts;
  std::vector<Atom> atoms;
  QuadratureConfig quadrature;
  bool auto_target_degree = true;  // target_degree follows 2N + 4 unless given
  int degree = 0;  // N
  std::uint64_t seed = 0;
  std::vector<Diagnostic> diagnostics;
  std::vector<Expectation> expectations;
  nlohmann::json source;  // the parsed document, echoed into reports
};

/// Parses and validates scenario JSON. Errors carry line/column context for
/// syntax problems and name the offending field otherwise.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

struct RunOptions {
  std::optional<int> depth;
  std::optional<int> degree;
  bool write_files = true;
  bool keep_state = false;  // retain measure and basis in the report
};

/// Pipeline objects of a finished run.
struct ScenarioState {
  PolynomialSpec poly;
  double level = 1.0;
  DiscretizedMeasure measure;
  Orthogonalization orth;
};

struct ExpectationResult {
  Expectation expectation;
  std::optional<double> measured;
  bool passed = false;
  std::string message;
};

struct RunReport {
  nlohmann::json json;  // the full report as written to report.json
  std::vector<ExpectationResult> expectations;
  std::vector<std::string> errors;
  std::shared_ptr<const ScenarioState> state;  // set when keep_state and the pipeline succeeded
  double seconds = 0.0;

  bool passed() const;
  /// Emitted value "<id>.<field>" (bools as 0/1); empty when absent.
  std::optional<double> quantity(const std::string& name) const;
};

/// Runs measure -> basis -> diagnostics. Module errors are captured into
/// the report rather than thrown; only scenario loading errors propagate.
RunReport run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir, const RunOptions& opts = {});
RunReport run_scenario(const std::filesystem::path& path, const std::filesystem::path& out_dir,
                       const RunOptions& opts = {});

/// Directory holding the shipped scenarios (env BERGMAN_SCENARIOS overrides).
std::filesystem::path scenario_directory();

struct ScenarioEntry {
  std::string name;
  std::string description;
  std::filesystem::path path;
};
std::vector<ScenarioEntry> list_scenarios();

/// Known diagnostic names, in documentation order.
const std::vector<std::string>& diagnostic_names();

/// Statement of what a diagnostic measures; throws InputError on an unknown name.
std::string describe(const std::string& op);

/// Applies BERGMAN_THREADS, when set, to the parallel kernels.
void configure_threads_from_env();

} // namespace bergman
