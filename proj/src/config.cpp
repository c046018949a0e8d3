#include "kgen/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <string_view>

#include "kgen/error.hpp"

namespace kgen {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return !text.empty() && ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_row(std::string_view text, std::vector<double>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(',', start);
    double v = 0.0;
    if (!parse_double(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start), v)) {
      return false;
    }
    out.push_back(v);
    if (pos == std::string_view::npos) return true;
    start = pos + 1;
  }
}

const std::vector<ConfigKeyDoc> kKeys = {
    {"sim.env", "environment: linear | uav", "linear"},
    {"sim.runs", "number of rollouts R", "1"},
    {"sim.horizon", "steps per rollout K", "100"},
    {"sim.seed", "master seed; run r uses seed + r", "0"},
    {"sim.policy", "uav policy: centroid_greedy | lagged_centroid", "centroid_greedy"},

    {"linear.A", "transition matrix, rows ';' entries ','", "0.5"},
    {"linear.F", "policy matrix (m x n)", "1"},
    {"linear.x0", "initial state mean", "1 (per component)"},
    {"linear.x0_std", "initial state std per component", "0"},
    {"linear.noise_std", "process noise std per component", "0"},
    {"linear.reward_state_weight", "r = -ws·||x'|| - wa·||u||: ws", "1"},
    {"linear.reward_action_weight", "r = -ws·||x'|| - wa·||u||: wa", "0.1"},

    {"env.area_x", "service area width, m", "100"},
    {"env.area_y", "service area height, m", "100"},
    {"env.J", "number of ground users", "20"},
    {"env.H", "UAV altitude, m", "30"},
    {"env.kappa", "step length, s", "0.1"},
    {"env.V_max", "UAV max speed, m/s", "30"},
    {"env.coverage", "UAV coverage radius D_max, m", "50"},
    {"env.v_bar", "mean GU speed, m/s", "3"},
    {"env.nu_std", "GU speed noise std, m/s", "0.65"},
    {"env.epsilon", "probability of keeping the GU heading", "0.65"},
    {"env.h1", "GU speed memory", "0.5"},
    {"env.h2", "GU heading drift gain", "1"},
    {"env.phi_bar", "GU heading drift, rad", "0"},
    {"env.bandwidth", "total bandwidth, Hz", "4e8"},
    {"env.P_watt", "transmit power, W", "0.2512"},
    {"env.frequency", "carrier frequency, Hz", "3e10"},
    {"env.N0_dBm", "noise power, dBm", "-85"},
    {"env.N0_watt", "noise power, W (overrides env.N0_dBm)", "3.162e-12"},
    {"env.R_min", "minimum rate, b/s", "1.5e8"},
    {"env.absorption", "molecular absorption coefficient, 1/m", "2.3e-5"},
    {"env.G_uav", "UAV antenna gain", "1"},
    {"env.G_gu", "GU antenna gain", "1"},
    {"env.a", "coverage vs fairness weight", "0.5"},
    {"env.beta", "speed-violation weight (negative penalises)", "-1"},
    {"env.fairness", "fairness form: as_written | standard", "as_written"},
    {"env.layout_seed", "seed of the initial GU layout", "sim.seed"},
    {"env.frame", "state coordinates: centered | corner", "centered"},

    {"analysis.gamma", "disturbance level γ", "0.1"},
    {"analysis.gamma_d", "discount factor γ_d", "0.9"},
    {"analysis.rank_tol", "relative SVD truncation threshold", "1e-10"},
    {"analysis.grid_points", "H∞ frequency grid size on [0, π]", "4096"},
    {"analysis.refinement_tol", "H∞ peak refinement tolerance, rad", "1e-10"},
    {"analysis.lipschitz", "analytic reward Lipschitz constant L", "linear: from reward weights; uav: estimated"},
    {"analysis.lipschitz_pairs", "sample pairs for the L estimate", "200000"},

    {"disturbance.kind", "impulse | constant_direction | scaled_gaussian_projected | single_tone", "impulse"},
    {"disturbance.gamma", "disturbance level γ", "analysis.gamma"},
    {"disturbance.seed", "seed of random disturbance kinds", "0"},
    {"disturbance.direction", "direction vector (n entries)", "e1"},
    {"disturbance.frequency", "tone frequency, rad/step", "0"},
    {"disturbance.impulse_step", "impulse time index", "0"},
    {"disturbance.grid_points", "admissibility DFT grid size", "smallest 2·3·5-smooth >= 8K"},
};

bool known_key(const std::string& key) {
  for (const auto& k : kKeys) {
    if (key == k.key) return true;
  }
  return false;
}

}  // namespace

const std::vector<ConfigKeyDoc>& config_key_docs() { return kKeys; }

Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  c.source_ = source;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    // Strip comments outside of quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source + ": expected 'key = value'", line_no);
    const std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ParseError(source + ": empty key", line_no);
    if (!known_key(key)) throw ParseError(source + ": unknown key '" + key + "'", line_no);
    if (c.values_.count(key)) throw ParseError(source + ": duplicate key '" + key + "'", line_no);
    c.values_[key] = std::string(value);
    c.lines_[key] = line_no;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  return parse(in, path.string());
}

void Config::set(const std::string& key, std::string value) {
  if (!known_key(key)) throw ParameterError("unknown config key '" + key + "'");
  values_[key] = std::move(value);
  lines_.erase(key);
}

const std::string* Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void Config::bad_value(const std::string& key, const char* expected) const {
  const auto it = lines_.find(key);
  const std::string where = source_.empty() ? "" : source_ + ": ";
  throw ParseError(where + "key '" + key + "' expects " + expected + ", got '" + values_.at(key) + "'",
                   it == lines_.end() ? 0 : it->second);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

double Config::get_real(const std::string& key, double fallback) const {
  const auto v = get_optional_real(key);
  return v ? *v : fallback;
}

std::optional<double> Config::get_optional_real(const std::string& key) const {
  const auto* v = find(key);
  if (!v) return std::nullopt;
  double out = 0.0;
  if (!parse_double(*v, out)) bad_value(key, "a finite number");
  return out;
}

long Config::get_int(const std::string& key, long fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (v->empty() || ec != std::errc{} || ptr != v->data() + v->size()) bad_value(key, "an integer");
  return out;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (v->empty() || ec != std::errc{} || ptr != v->data() + v->size()) bad_value(key, "a non-negative integer");
  return out;
}

Eigen::MatrixXd Config::get_matrix(const std::string& key, const Eigen::MatrixXd& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<std::vector<double>> rows;
  std::string_view text = *v;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(';', start);
    std::vector<double> row;
    if (!parse_row(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start), row)) {
      bad_value(key, "a matrix like \"a,b;c,d\"");
    }
    if (!rows.empty() && row.size() != rows.front().size()) bad_value(key, "rows of equal length");
    rows.push_back(std::move(row));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

Eigen::VectorXd Config::get_vector(const std::string& key, const Eigen::VectorXd& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<double> row;
  if (!parse_row(*v, row)) bad_value(key, "a comma-separated vector");
  return Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
}

SimSettings sim_settings(const Config& c) {
  SimSettings s;
  s.env = c.get_string("sim.env", s.env);
  if (s.env != "linear" && s.env != "uav") throw ParameterError("sim.env must be 'linear' or 'uav'");
  const long runs = c.get_int("sim.runs", s.runs);
  const long horizon = c.get_int("sim.horizon", s.horizon);
  if (runs < 1 || runs > 1'000'000) throw ParameterError("sim.runs must lie in [1, 1e6]");
  if (horizon < 1 || horizon > 100'000'000) throw ParameterError("sim.horizon must lie in [1, 1e8]");
  s.runs = static_cast<int>(runs);
  s.horizon = static_cast<int>(horizon);
  s.seed = c.get_u64("sim.seed", s.seed);
  s.policy = parse_policy_kind(c.get_string("sim.policy", to_string(s.policy)));
  return s;
}

AnalysisSettings analysis_settings(const Config& c) {
  AnalysisSettings a;
  a.gamma = c.get_real("analysis.gamma", a.gamma);
  a.gamma_d = c.get_real("analysis.gamma_d", a.gamma_d);
  a.rank_tol = c.get_real("analysis.rank_tol", a.rank_tol);
  const long grid = c.get_int("analysis.grid_points", a.grid_points);
  if (grid < 16 || grid > 100'000'000) throw ParameterError("analysis.grid_points must lie in [16, 1e8]");
  a.grid_points = static_cast<int>(grid);
  a.refinement_tol = c.get_real("analysis.refinement_tol", a.refinement_tol);
  a.lipschitz = c.get_optional_real("analysis.lipschitz");
  a.lipschitz_pairs = c.get_u64("analysis.lipschitz_pairs", a.lipschitz_pairs);
  if (a.gamma < 0.0) throw ParameterError("analysis.gamma must be >= 0");
  if (a.gamma_d < 0.0 || a.gamma_d >= 1.0) throw ParameterError("analysis.gamma_d must lie in [0, 1)");
  if (!(a.rank_tol > 0.0 && a.rank_tol < 1.0)) throw ParameterError("analysis.rank_tol must lie in (0, 1)");
  if (!(a.refinement_tol > 0.0)) throw ParameterError("analysis.refinement_tol must be > 0");
  if (a.lipschitz && *a.lipschitz < 0.0) throw ParameterError("analysis.lipschitz must be >= 0");
  return a;
}

UavEnvConfig uav_config(const Config& c) {
  UavEnvConfig e;
  e.area_x = c.get_real("env.area_x", e.area_x);
  e.area_y = c.get_real("env.area_y", e.area_y);
  const long j = c.get_int("env.J", e.gu_count);
  if (j < 1 || j > 100'000) throw ParameterError("env.J must lie in [1, 100000]");
  e.gu_count = static_cast<int>(j);
  e.altitude = c.get_real("env.H", e.altitude);
  e.step_seconds = c.get_real("env.kappa", e.step_seconds);
  e.max_speed = c.get_real("env.V_max", e.max_speed);
  e.coverage_radius = c.get_real("env.coverage", e.coverage_radius);
  e.gu_mean_speed = c.get_real("env.v_bar", e.gu_mean_speed);
  e.gu_speed_std = c.get_real("env.nu_std", e.gu_speed_std);
  e.heading_keep_prob = c.get_real("env.epsilon", e.heading_keep_prob);
  e.speed_memory = c.get_real("env.h1", e.speed_memory);
  e.heading_gain = c.get_real("env.h2", e.heading_gain);
  e.heading_drift = c.get_real("env.phi_bar", e.heading_drift);
  e.bandwidth = c.get_real("env.bandwidth", e.bandwidth);
  e.power = c.get_real("env.P_watt", e.power);
  e.carrier = c.get_real("env.frequency", e.carrier);
  if (const auto dbm = c.get_optional_real("env.N0_dBm")) e.noise_power = std::pow(10.0, (*dbm - 30.0) / 10.0);
  e.noise_power = c.get_real("env.N0_watt", e.noise_power);
  e.rate_min = c.get_real("env.R_min", e.rate_min);
  e.absorption = c.get_real("env.absorption", e.absorption);
  e.gain_uav = c.get_real("env.G_uav", e.gain_uav);
  e.gain_gu = c.get_real("env.G_gu", e.gain_gu);
  e.reward_weight = c.get_real("env.a", e.reward_weight);
  e.speed_penalty = c.get_real("env.beta", e.speed_penalty);
  e.fairness = parse_fairness_mode(c.get_string("env.fairness", to_string(e.fairness)));
  if (c.has("env.layout_seed")) e.layout_seed = c.get_u64("env.layout_seed", 0);
  const auto frame = c.get_string("env.frame", "centered");
  if (frame != "centered" && frame != "corner") throw ParameterError("env.frame must be 'centered' or 'corner'");
  e.centered_frame = frame == "centered";
  e.validate();
  return e;
}

LinearSurrogateConfig linear_config(const Config& c) {
  LinearSurrogateConfig l;
  l.a = c.get_matrix("linear.A", Eigen::MatrixXd::Constant(1, 1, 0.5));
  l.f = c.get_matrix("linear.F", Eigen::MatrixXd::Identity(1, l.a.rows()));
  l.x0_mean = c.get_vector("linear.x0", Eigen::VectorXd::Ones(l.a.rows()));
  l.x0_std = c.get_real("linear.x0_std", 0.0);
  l.noise_std = c.get_real("linear.noise_std", 0.0);
  l.reward_state_weight = c.get_real("linear.reward_state_weight", l.reward_state_weight);
  l.reward_action_weight = c.get_real("linear.reward_action_weight", l.reward_action_weight);
  const auto sim = sim_settings(c);
  l.horizon = sim.horizon;
  l.seed = sim.seed;
  l.validate();
  return l;
}

DisturbanceSpec disturbance_spec(const Config& c) {
  DisturbanceSpec d;
  d.kind = parse_disturbance_kind(c.get_string("disturbance.kind", "impulse"));
  d.gamma = c.get_real("disturbance.gamma", analysis_settings(c).gamma);
  d.seed = c.get_u64("disturbance.seed", 0);
  d.direction = c.get_vector("disturbance.direction", Eigen::VectorXd());
  d.frequency = c.get_real("disturbance.frequency", 0.0);
  const long step = c.get_int("disturbance.impulse_step", 0);
  if (step < 0 || step > 100'000'000) throw ParameterError("disturbance.impulse_step must be >= 0");
  d.impulse_step = static_cast<int>(step);
  const long grid = c.get_int("disturbance.grid_points", 0);
  if (grid < 0 || grid > 1'000'000'000) throw ParameterError("disturbance.grid_points must be >= 0");
  d.grid_points = static_cast<int>(grid);
  if (d.gamma < 0.0) throw ParameterError("disturbance.gamma must be >= 0");
  return d;
}

}  // namespace kgen
