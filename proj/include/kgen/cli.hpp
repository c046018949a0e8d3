#pragma once

// Pipeline commands behind the command-line tool: simulate, fit, analyze, verify, report.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace kgen {

inline constexpr const char* kToolVersion = "1.0.0";

/// Exit codes: analysis findings (instability, violations) are data and exit 0.
enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,  // I/O, parse and validation failures
  kExitUsage = 2,       // command-line grammar
  kExitInternal = 3,    // broken internal invariant
};

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<double> gamma;
  std::optional<double> gamma_d;
  std::optional<double> rank_tol;
  std::optional<int> grid_points;
};

struct SimulateOptions : CommonOptions {
  std::optional<std::string> env;
  std::optional<int> runs;
  std::optional<int> horizon;
  std::optional<std::string> policy;
};

struct FitOptions : CommonOptions {
  std::filesystem::path input;
};

struct AnalyzeOptions : CommonOptions {
  std::filesystem::path model;
  std::optional<double> lipschitz;
  std::optional<std::string> label;
};

struct VerifyOptions : SimulateOptions {
  std::filesystem::path model;
  std::optional<std::string> label;
  /// Per-step deviation table; defaults to <out stem>.deviations.csv.
  std::optional<std::filesystem::path> table;
};

struct ReportOptions {
  std::vector<std::filesystem::path> inputs;
  /// Delimiter-separated table; the JSON twin goes next to it with a .json extension.
  std::optional<std::filesystem::path> out;
};

/// Each command writes its outputs plus <out>.manifest.json and returns an exit code.
/// Errors are reported on `err`; progress and warnings on `log`.
int cmd_simulate(const SimulateOptions& options, std::ostream& log, std::ostream& err);
int cmd_fit(const FitOptions& options, std::ostream& log, std::ostream& err);
int cmd_analyze(const AnalyzeOptions& options, std::ostream& log, std::ostream& err);
int cmd_verify(const VerifyOptions& options, std::ostream& log, std::ostream& err);
int cmd_report(const ReportOptions& options, std::ostream& log, std::ostream& err);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct ManifestFile {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::string tool_version = kToolVersion;
  std::vector<ManifestFile> inputs;
  std::vector<ManifestFile> outputs;
  std::string started_at;
  std::string finished_at;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

/// Text listing every configuration key, its meaning and default.
std::string config_help();

}  // namespace kgen
