#pragma once

// Flat `section.key = value` configuration files.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgen/bounds.hpp"
#include "kgen/env.hpp"

namespace kgen {

struct ConfigKeyDoc {
  const char* key;
  const char* meaning;
  const char* default_value;
};

/// Every recognised key with a one-line description.
const std::vector<ConfigKeyDoc>& config_key_docs();

class Config {
 public:
  /// Lines are `key = value`; `#` starts a comment; values may be double-quoted.
  /// Unknown keys and repeated keys are rejected with the offending line.
  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key, double fallback) const;
  std::optional<double> get_optional_real(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  /// Rows separated by ';', entries by ','.
  Eigen::MatrixXd get_matrix(const std::string& key, const Eigen::MatrixXd& fallback) const;
  /// Comma-separated entries.
  Eigen::VectorXd get_vector(const std::string& key, const Eigen::VectorXd& fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  const std::string* find(const std::string& key) const;
  [[noreturn]] void bad_value(const std::string& key, const char* expected) const;

  std::string source_;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
};

struct SimSettings {
  std::string env = "linear";  // linear | uav
  int runs = 1;
  int horizon = 100;
  std::uint64_t seed = 0;
  PolicyKind policy = PolicyKind::centroid_greedy;
};

struct AnalysisSettings {
  double gamma = 0.1;
  double gamma_d = 0.9;
  double rank_tol = kDefaultRankTol;
  int grid_points = kDefaultGridPoints;
  double refinement_tol = kDefaultRefinementTol;
  std::optional<double> lipschitz;
  std::size_t lipschitz_pairs = 200000;
};

SimSettings sim_settings(const Config& config);
AnalysisSettings analysis_settings(const Config& config);
UavEnvConfig uav_config(const Config& config);
/// horizon and seed come from the simulation settings.
LinearSurrogateConfig linear_config(const Config& config);
/// gamma defaults to analysis.gamma; horizon and dim are filled by the caller.
DisturbanceSpec disturbance_spec(const Config& config);

}  // namespace kgen
