#pragma once

// Trajectory generators: an exact linear closed loop and a UAV mmWave coverage scenario.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kgen/trajectory.hpp"

namespace kgen {

// ---------------------------------------------------------------------------
// Linear surrogate: x_{k+1} = A x_k + η_k + w_k, u_k = F x_k
// ---------------------------------------------------------------------------

struct LinearSurrogateConfig {
  Eigen::MatrixXd a;
  Eigen::MatrixXd f;
  double noise_std = 0.0;
  Eigen::VectorXd x0_mean;
  /// Per-component std of the initial state around x0_mean.
  double x0_std = 0.0;
  int horizon = 1;
  std::uint64_t seed = 0;
  /// r_k = -state_weight·||x_{k+1}|| - action_weight·||u_k||
  double reward_state_weight = 1.0;
  double reward_action_weight = 0.1;

  Eigen::Index state_dim() const { return a.rows(); }
  Eigen::Index action_dim() const { return f.rows(); }
  double reward_lipschitz() const { return std::max(std::abs(reward_state_weight), std::abs(reward_action_weight)); }
  void validate() const;
};

/// One rollout seeded by config.seed. Noise is drawn every step even when
/// noise_std = 0, so runs with the same seed share their random numbers.
Trajectory linear_rollout(const LinearSurrogateConfig& config,
                          const std::optional<Eigen::MatrixXd>& disturbance = std::nullopt);

/// R rollouts with seeds master_seed + r.
TrajectoryEnsemble linear_ensemble(LinearSurrogateConfig config, int runs, std::uint64_t master_seed,
                                   const std::optional<Eigen::MatrixXd>& disturbance = std::nullopt);

// ---------------------------------------------------------------------------
// UAV coverage environment
// ---------------------------------------------------------------------------

enum class FairnessMode { as_written, standard };
enum class PolicyKind { centroid_greedy, lagged_centroid };

PolicyKind parse_policy_kind(const std::string& name);
std::string to_string(PolicyKind kind);
FairnessMode parse_fairness_mode(const std::string& name);
std::string to_string(FairnessMode mode);

inline constexpr double kSpeedOfLight = 2.998e8;

struct UavEnvConfig {
  double area_x = 100.0;  // m
  double area_y = 100.0;  // m
  int gu_count = 20;      // J
  double altitude = 30.0;           // H, m
  double step_seconds = 0.1;        // κ
  double max_speed = 30.0;          // V_max, m/s
  double coverage_radius = 50.0;    // D_max, m
  double gu_mean_speed = 3.0;       // v̄, m/s
  double gu_speed_std = 0.65;       // ν std, m/s
  double heading_keep_prob = 0.65;  // ε
  double speed_memory = 0.5;        // h₁
  double heading_gain = 1.0;        // h₂
  double heading_drift = 0.0;       // φ̄, rad
  double bandwidth = 400e6;         // Hz
  double power = 0.2512;            // W
  double carrier = 30e9;            // Hz
  double noise_power = 3.162e-12;   // W (-85 dBm)
  double rate_min = 150e6;          // b/s
  double absorption = 2.3e-5;       // α(f), 1/m
  double gain_uav = 1.0;
  double gain_gu = 1.0;
  double reward_weight = 0.5;       // a
  double speed_penalty = -1.0;      // β
  FairnessMode fairness = FairnessMode::as_written;
  /// Seed of the initial GU layout. Unset: single rollouts draw it from their own
  /// seed and ensembles share one layout drawn from the master seed.
  std::optional<std::uint64_t> layout_seed;
  /// Report positions relative to the area center instead of the corner.
  bool centered_frame = true;

  Eigen::Vector2d frame_origin() const {
    return centered_frame ? Eigen::Vector2d(0.5 * area_x, 0.5 * area_y) : Eigen::Vector2d::Zero();
  }

  Eigen::Index state_dim() const { return 2 * static_cast<Eigen::Index>(gu_count) + 2; }
  double max_step() const { return step_seconds * max_speed; }
  void validate() const;
};

struct GuState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double speed = 0.0;
  double heading = 0.0;
};

struct UavState {
  Eigen::Vector2d uav = Eigen::Vector2d::Zero();
  std::vector<GuState> gus;
  long step = 0;

  Eigen::VectorXd to_vector(const Eigen::Vector2d& origin = Eigen::Vector2d::Zero()) const;
};

/// Speed: v' = max(0, h₁v + (1-h₁)v̄ + ν). Heading: kept (plus h₂φ̄) with
/// probability ε, otherwise uniform. Position advances κv' and reflects at walls.
GuState step_gu_motion(const GuState& gu, const UavEnvConfig& config, std::mt19937_64& rng);

/// c·sqrt(G_UAV·G_j)/(4πfd) · e^{-αd/2}
double path_loss(double distance, const UavEnvConfig& config);
/// bandwidth · log₂(1 + P|h|²/N₀)
double downlink_rate(double bandwidth, double gain, const UavEnvConfig& config);

/// 3-D UAV-GU distance.
double link_distance(const UavState& state, std::size_t j, const UavEnvConfig& config);

/// Candidates within D_max share the bandwidth equally; while some candidate
/// misses R_min the weakest one is dropped and the bandwidth re-split.
std::vector<int> serve_set(const UavState& state, const UavEnvConfig& config);

double fairness_index(const std::vector<int>& served, FairnessMode mode);

double uav_reward(const std::vector<int>& served, double fairness, int speed_violation, const UavEnvConfig& config);

/// Waypoint chooser; lagged_centroid keeps an exponentially smoothed target.
class ScriptedPolicy {
 public:
  ScriptedPolicy(PolicyKind kind, const UavEnvConfig& config) : kind_(kind), config_(&config) {}
  Eigen::Vector2d operator()(const UavState& state);

 private:
  PolicyKind kind_;
  const UavEnvConfig* config_;
  std::optional<Eigen::Vector2d> smoothed_;
};

inline constexpr double kLagSmoothing = 0.5;

/// Centroid of the GUs not in the serve set; the UAV position if all are served.
Eigen::Vector2d unserved_centroid(const UavState& state, const UavEnvConfig& config);

/// Initial state: GUs uniform in the area at speed v̄ with uniform headings; UAV at the center.
UavState initial_uav_state(const UavEnvConfig& config, std::mt19937_64& rng);

struct UavRollout {
  Trajectory trajectory;
  /// Disturbance actually applied after clamping, n x K.
  Eigen::MatrixXd realized_disturbance;
  /// Steps whose UAV displacement exceeded κ·V_max.
  int speed_violations = 0;
};

/// State = (GU₁ x,y, …, GU_J x,y, UAV x,y), action = next UAV waypoint. The
/// disturbance is added after each transition and clamped to the area.
UavRollout uav_rollout(const UavEnvConfig& config, PolicyKind policy, int horizon, std::uint64_t seed,
                       const std::optional<Eigen::MatrixXd>& disturbance = std::nullopt);

TrajectoryEnsemble uav_ensemble(const UavEnvConfig& config, PolicyKind policy, int horizon, int runs,
                                std::uint64_t master_seed,
                                const std::optional<Eigen::MatrixXd>& disturbance = std::nullopt);

}  // namespace kgen
