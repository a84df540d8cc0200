#pragma once
//
// Config-driven experiment runner and report emitter.
//
// Config schema (YAML):
//
//   seed: 7                       # optional, default 0
//   output_dir: out               # optional, default "out"
//   system: {kind: shift, window: [-6, 6]}  |  {kind: baker, m: 2}
//   profile: {family: gumbel, a: 1} | {family: logistic}
//          | {family: custom, table: [[s, lambda], ...]}
//   experiments:
//     - type: lyapunov            # one of kExperimentTypes
//       max_t: 5                  # type-specific keys, see README
//       gate: true                # optional; positivity defaults to false
//       system: {...}             # optional per-experiment override
//       profile: {...}            # optional per-experiment override
//
// Unknown keys, out-of-range values and missing sections are collected with
// their line numbers and reported together.
//

#include "lambdalab/cascade.hpp"
#include "lambdalab/errors.hpp"
#include "lambdalab/lambda.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lambdalab {

inline constexpr const char* kToolVersion = "0.1.0";

inline const std::vector<std::string> kExperimentTypes = {
    "covariance", "admissibility", "lyapunov", "positivity", "tower",
    "classify",   "kothe",         "theorem",  "normalization"};

struct SystemSpec {
    CascadeKind kind = CascadeKind::shift;
    AgeWindow window{-6, 6};
    int m = 0;  // baker only

    CascadeSystem build() const;
    nlohmann::json to_json() const;
};

struct ExperimentSpec {
    std::string type;
    SystemSpec system;
    LambdaProfile profile = LambdaProfile::gumbel(1.0);
    nlohmann::json params;  // type-specific, defaults filled in
    bool gated = true;
    int line = 0;

    nlohmann::json to_json() const;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    SystemSpec system;
    LambdaProfile profile = LambdaProfile::gumbel(1.0);
    std::vector<ExperimentSpec> experiments;

    nlohmann::json to_json() const;
};

struct ConfigIssue {
    int line = 0;  // 1-based; 0 when unknown
    std::string message;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

// Throws ConfigError with every issue found.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Built-in configuration behind the `demo` subcommand.
const std::string& demo_config_text();

struct ExperimentRecord {
    std::size_t index = 0;
    std::string type;
    std::string anchor;
    bool gated = true;
    std::string status;  // "pass", "fail" or "error"
    std::string error;
    nlohmann::json result;
};

// One CSV per trace-like experiment.
struct TraceTable {
    std::string file_name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct ReportBundle {
    nlohmann::json manifest;
    std::vector<ExperimentRecord> records;
    std::vector<TraceTable> traces;

    bool gated_pass() const;
    nlohmann::json to_json() const;
};

// Experiments run concurrently, each with its own generator derived from the
// seed and the experiment's position; the bundle is merged in config order.
ReportBundle run_experiment(const ExperimentConfig& config);
ExperimentRecord run_single(const ExperimentSpec& spec, std::size_t index, std::uint64_t seed,
                            std::vector<TraceTable>& traces);

enum class ReportFormat { json, csv, both };
ReportFormat report_format_from_string(const std::string& text);

// Writes manifest.json (always), report.json (json/both) and the trace CSVs
// (csv/both). Returns the paths written. Error when the directory is unwritable.
std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, const std::filesystem::path& dir,
                                               ReportFormat format);

std::string to_csv(const TraceTable& table);
// 0 iff every gated experiment passed.
int exit_status(const ReportBundle& bundle);

}  // namespace lambdalab
