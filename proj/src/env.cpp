#include "kgen/env.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "kgen/error.hpp"

namespace kgen {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double phi) {
  phi = std::fmod(phi, kTwoPi);
  return phi < 0.0 ? phi + kTwoPi : phi;
}

// Reflects p into [0, hi]; returns true if an odd number of bounces occurred.
bool reflect(double& p, double hi) {
  bool flipped = false;
  while (p < 0.0 || p > hi) {
    p = p < 0.0 ? -p : 2.0 * hi - p;
    flipped = !flipped;
  }
  return flipped;
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be positive");
}

void check_disturbance(const std::optional<Eigen::MatrixXd>& w, Eigen::Index n, int horizon) {
  if (!w) return;
  if (w->rows() != n || w->cols() != horizon) {
    throw DimensionError("disturbance is " + std::to_string(w->rows()) + "x" + std::to_string(w->cols()) +
                         ", expected " + std::to_string(n) + "x" + std::to_string(horizon));
  }
  if (!w->allFinite()) throw DataError("disturbance contains non-finite entries");
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear surrogate
// ---------------------------------------------------------------------------

void LinearSurrogateConfig::validate() const {
  if (a.rows() == 0 || a.rows() != a.cols()) throw DimensionError("linear.A must be a non-empty square matrix");
  if (f.rows() == 0 || f.cols() != a.rows()) throw DimensionError("linear.F must have n columns");
  if (x0_mean.size() != a.rows()) throw DimensionError("linear.x0 must have n entries");
  if (!a.allFinite() || !f.allFinite() || !x0_mean.allFinite()) throw DataError("linear config has non-finite entries");
  if (!(noise_std >= 0.0) || !(x0_std >= 0.0)) throw ParameterError("noise standard deviations must be >= 0");
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
}

Trajectory linear_rollout(const LinearSurrogateConfig& config, const std::optional<Eigen::MatrixXd>& disturbance) {
  config.validate();
  const Eigen::Index n = config.state_dim();
  check_disturbance(disturbance, n, config.horizon);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal;
  auto draw = [&](double scale) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal(rng);
    return v;
  };

  Trajectory t;
  t.seed = config.seed;
  t.states.resize(n, config.horizon + 1);
  t.actions.resize(config.action_dim(), config.horizon);
  t.rewards.resize(config.horizon);
  t.states.col(0) = config.x0_mean + draw(config.x0_std);
  for (int k = 0; k < config.horizon; ++k) {
    const Eigen::VectorXd x = t.states.col(k);
    t.actions.col(k) = config.f * x;
    Eigen::VectorXd next = config.a * x + draw(config.noise_std);
    if (disturbance) next += disturbance->col(k);
    t.states.col(k + 1) = next;
    t.rewards(k) = -config.reward_state_weight * next.norm() - config.reward_action_weight * t.actions.col(k).norm();
  }
  return t;
}

TrajectoryEnsemble linear_ensemble(LinearSurrogateConfig config, int runs, std::uint64_t master_seed,
                                   const std::optional<Eigen::MatrixXd>& disturbance) {
  if (runs < 1) throw ParameterError("runs must be >= 1");
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    config.seed = master_seed + static_cast<std::uint64_t>(r);
    Trajectory t = linear_rollout(config, disturbance);
    t.run_id = r;
    out.push_back(std::move(t));
  }
  return TrajectoryEnsemble(std::move(out));
}

// ---------------------------------------------------------------------------
// UAV environment
// ---------------------------------------------------------------------------

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "centroid_greedy") return PolicyKind::centroid_greedy;
  if (name == "lagged_centroid") return PolicyKind::lagged_centroid;
  throw ParameterError("unknown policy '" + name + "'");
}

std::string to_string(PolicyKind kind) {
  return kind == PolicyKind::centroid_greedy ? "centroid_greedy" : "lagged_centroid";
}

FairnessMode parse_fairness_mode(const std::string& name) {
  if (name == "as_written") return FairnessMode::as_written;
  if (name == "standard") return FairnessMode::standard;
  throw ParameterError("unknown fairness mode '" + name + "'");
}

std::string to_string(FairnessMode mode) { return mode == FairnessMode::as_written ? "as_written" : "standard"; }

void UavEnvConfig::validate() const {
  require_positive(area_x, "env.area_x");
  require_positive(area_y, "env.area_y");
  if (gu_count < 1) throw ParameterError("env.J must be >= 1");
  require_positive(altitude, "env.H");
  require_positive(step_seconds, "env.kappa");
  require_positive(max_speed, "env.V_max");
  require_positive(coverage_radius, "env.coverage");
  require_positive(bandwidth, "env.bandwidth");
  require_positive(power, "env.P_watt");
  require_positive(carrier, "env.frequency");
  require_positive(noise_power, "env.N0_watt");
  require_positive(rate_min, "env.R_min");
  require_positive(gain_uav, "env.G_uav");
  require_positive(gain_gu, "env.G_gu");
  if (!(gu_mean_speed >= 0.0) || !(gu_speed_std >= 0.0)) throw ParameterError("GU speed parameters must be >= 0");
  if (!(absorption >= 0.0)) throw ParameterError("env.absorption must be >= 0");
  if (!(heading_keep_prob >= 0.0 && heading_keep_prob <= 1.0)) throw ParameterError("env.epsilon must lie in [0, 1]");
  if (!(speed_memory >= 0.0 && speed_memory <= 1.0)) throw ParameterError("env.h1 must lie in [0, 1]");
  if (!(reward_weight >= 0.0 && reward_weight <= 1.0)) throw ParameterError("env.a must lie in [0, 1]");
  if (!std::isfinite(speed_penalty) || !std::isfinite(heading_gain) || !std::isfinite(heading_drift)) {
    throw ParameterError("env.beta, env.h2 and env.phi_bar must be finite");
  }
}

Eigen::VectorXd UavState::to_vector(const Eigen::Vector2d& origin) const {
  Eigen::VectorXd x(2 * static_cast<Eigen::Index>(gus.size()) + 2);
  for (std::size_t j = 0; j < gus.size(); ++j) {
    x.segment<2>(2 * static_cast<Eigen::Index>(j)) = gus[j].position - origin;
  }
  x.tail<2>() = uav - origin;
  return x;
}

GuState step_gu_motion(const GuState& gu, const UavEnvConfig& config, std::mt19937_64& rng) {
  // Every draw happens on every step so streams stay aligned across runs.
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  const double nu = config.gu_speed_std * normal(rng);
  const double keep = unit(rng);
  const double fresh = kTwoPi * unit(rng);

  GuState out = gu;
  const double h1 = config.speed_memory;
  out.speed = std::max(0.0, h1 * gu.speed + (1.0 - h1) * config.gu_mean_speed + nu);
  out.heading = keep < config.heading_keep_prob ? wrap_angle(gu.heading + config.heading_gain * config.heading_drift)
                                                : fresh;
  const double travel = config.step_seconds * out.speed;
  out.position.x() += travel * std::cos(out.heading);
  out.position.y() += travel * std::sin(out.heading);
  if (reflect(out.position.x(), config.area_x)) out.heading = wrap_angle(std::numbers::pi - out.heading);
  if (reflect(out.position.y(), config.area_y)) out.heading = wrap_angle(-out.heading);
  return out;
}

double path_loss(double distance, const UavEnvConfig& config) {
  if (!(distance > 0.0)) throw ParameterError("path loss is singular at distance 0");
  const double spreading = kSpeedOfLight * std::sqrt(config.gain_uav * config.gain_gu) /
                           (4.0 * std::numbers::pi * config.carrier * distance);
  return spreading * std::exp(-0.5 * config.absorption * distance);
}

double downlink_rate(double bandwidth, double gain, const UavEnvConfig& config) {
  if (!(bandwidth > 0.0)) throw ParameterError("bandwidth must be positive");
  return bandwidth * std::log2(1.0 + config.power * gain * gain / config.noise_power);
}

double link_distance(const UavState& state, std::size_t j, const UavEnvConfig& config) {
  const double horizontal = (state.gus[j].position - state.uav).norm();
  return std::hypot(horizontal, config.altitude);
}

std::vector<int> serve_set(const UavState& state, const UavEnvConfig& config) {
  const std::size_t j_count = state.gus.size();
  std::vector<int> served(j_count, 0);
  std::vector<std::size_t> candidates;
  std::vector<double> gain(j_count, 0.0);
  for (std::size_t j = 0; j < j_count; ++j) {
    const double d = link_distance(state, j, config);
    if (d <= config.coverage_radius) {
      candidates.push_back(j);
      gain[j] = path_loss(d, config);
    }
  }
  while (!candidates.empty()) {
    const double share = config.bandwidth / static_cast<double>(candidates.size());
    auto weakest = candidates.begin();
    for (auto it = candidates.begin(); it != candidates.end(); ++it) {
      if (gain[*it] < gain[*weakest]) weakest = it;
    }
    if (downlink_rate(share, gain[*weakest], config) >= config.rate_min) break;
    candidates.erase(weakest);
  }
  for (std::size_t j : candidates) served[j] = 1;
  return served;
}

double fairness_index(const std::vector<int>& served, FairnessMode mode) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s : served) {
    sum += s;
    sum_sq += static_cast<double>(s) * s;
  }
  if (sum == 0.0) return 0.0;
  const double j = static_cast<double>(served.size());
  const double denom = mode == FairnessMode::as_written ? j * j * sum_sq : j * sum_sq;
  return sum * sum / denom;
}

double uav_reward(const std::vector<int>& served, double fairness, int speed_violation, const UavEnvConfig& config) {
  const double covered = std::accumulate(served.begin(), served.end(), 0.0);
  const double j = served.empty() ? 1.0 : static_cast<double>(served.size());
  const double a = config.reward_weight;
  return a * covered / j + (1.0 - a) * fairness + config.speed_penalty * speed_violation;
}

Eigen::Vector2d unserved_centroid(const UavState& state, const UavEnvConfig& config) {
  const auto served = serve_set(state, config);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  int count = 0;
  for (std::size_t j = 0; j < served.size(); ++j) {
    if (!served[j]) {
      sum += state.gus[j].position;
      ++count;
    }
  }
  return count ? Eigen::Vector2d(sum / count) : state.uav;
}

Eigen::Vector2d ScriptedPolicy::operator()(const UavState& state) {
  Eigen::Vector2d target = unserved_centroid(state, *config_);
  if (kind_ == PolicyKind::lagged_centroid) {
    smoothed_ = smoothed_ ? Eigen::Vector2d(kLagSmoothing * *smoothed_ + (1.0 - kLagSmoothing) * target) : target;
    target = *smoothed_;
  }
  const Eigen::Vector2d step = target - state.uav;
  const double len = step.norm();
  const double cap = config_->max_step();
  return len > cap ? Eigen::Vector2d(state.uav + step * (cap / len)) : target;
}

UavState initial_uav_state(const UavEnvConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit;
  UavState s;
  s.uav = Eigen::Vector2d(0.5 * config.area_x, 0.5 * config.area_y);
  s.gus.resize(static_cast<std::size_t>(config.gu_count));
  for (auto& gu : s.gus) {
    gu.position = Eigen::Vector2d(config.area_x * unit(rng), config.area_y * unit(rng));
    gu.speed = config.gu_mean_speed;
    gu.heading = kTwoPi * unit(rng);
  }
  return s;
}

UavRollout uav_rollout(const UavEnvConfig& config, PolicyKind policy, int horizon, std::uint64_t seed,
                       const std::optional<Eigen::MatrixXd>& disturbance) {
  config.validate();
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
  const Eigen::Index n = config.state_dim();
  check_disturbance(disturbance, n, horizon);

  std::mt19937_64 rng(seed);
  UavState state;
  if (config.layout_seed) {
    std::mt19937_64 layout_rng(*config.layout_seed);
    state = initial_uav_state(config, layout_rng);
  } else {
    state = initial_uav_state(config, rng);
  }
  ScriptedPolicy pi(policy, config);

  UavRollout out;
  Trajectory& t = out.trajectory;
  t.seed = seed;
  t.states.resize(n, horizon + 1);
  t.actions.resize(2, horizon);
  t.rewards.resize(horizon);
  out.realized_disturbance = Eigen::MatrixXd::Zero(n, horizon);
  const Eigen::Vector2d origin = config.frame_origin();
  t.states.col(0) = state.to_vector(origin);

  const double cap = config.max_step() + 1e-9;
  for (int k = 0; k < horizon; ++k) {
    const Eigen::Vector2d waypoint = pi(state);
    t.actions.col(k) = waypoint - origin;
    const int violation = (waypoint - state.uav).norm() > cap ? 1 : 0;
    out.speed_violations += violation;

    state.uav = waypoint;
    for (auto& gu : state.gus) gu = step_gu_motion(gu, config, rng);
    ++state.step;

    if (disturbance) {
      const Eigen::VectorXd before = state.to_vector();
      for (std::size_t j = 0; j <= state.gus.size(); ++j) {
        Eigen::Vector2d& p = j < state.gus.size() ? state.gus[j].position : state.uav;
        p += disturbance->col(k).segment<2>(2 * static_cast<Eigen::Index>(j));
        p.x() = std::clamp(p.x(), 0.0, config.area_x);
        p.y() = std::clamp(p.y(), 0.0, config.area_y);
      }
      out.realized_disturbance.col(k) = state.to_vector() - before;
    }

    const auto served = serve_set(state, config);
    t.rewards(k) = uav_reward(served, fairness_index(served, config.fairness), violation, config);
    t.states.col(k + 1) = state.to_vector(origin);
  }
  return out;
}

TrajectoryEnsemble uav_ensemble(const UavEnvConfig& config, PolicyKind policy, int horizon, int runs,
                                std::uint64_t master_seed, const std::optional<Eigen::MatrixXd>& disturbance) {
  if (runs < 1) throw ParameterError("runs must be >= 1");
  UavEnvConfig shared = config;
  if (!shared.layout_seed) shared.layout_seed = master_seed;
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    Trajectory t = uav_rollout(shared, policy, horizon, master_seed + static_cast<std::uint64_t>(r), disturbance)
                       .trajectory;
    t.run_id = r;
    out.push_back(std::move(t));
  }
  return TrajectoryEnsemble(std::move(out));
}

}  // namespace kgen
