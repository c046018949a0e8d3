#pragma once

// Admissible disturbances, worst-case impact bounds and their empirical verification.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "kgen/dmd.hpp"
#include "kgen/hinf.hpp"
#include "kgen/trajectory.hpp"

namespace kgen {

// ---------------------------------------------------------------------------
// Disturbances
// ---------------------------------------------------------------------------

enum class DisturbanceKind { impulse, constant_direction, scaled_gaussian_projected, single_tone };

DisturbanceKind parse_disturbance_kind(const std::string& name);
std::string to_string(DisturbanceKind kind);

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::impulse;
  double gamma = 0.0;
  int horizon = 1;
  int dim = 1;
  std::uint64_t seed = 0;
  /// Unit direction of impulse/constant/tone kinds; empty means e₁.
  Eigen::VectorXd direction;
  int impulse_step = 0;
  /// Tone frequency in rad/sample.
  double frequency = 0.0;
  /// DFT grid for the spectral scaling; 0 selects default_admissibility_grid(horizon).
  int grid_points = 0;
};

/// Returns w_0..w_{K-1} as the columns of a dim x K matrix, scaled so that the
/// sup over a dense DFT grid of ||ŵ(ω)||₂ does not exceed gamma.
Eigen::MatrixXd generate_disturbance(const DisturbanceSpec& spec);

/// Smallest 2·3·5-smooth grid size >= 8K.
int default_admissibility_grid(int horizon);

struct Admissibility {
  bool admissible = false;
  double sup_value = 0.0;
  double omega_star = 0.0;
  double energy = 0.0;
  double max_step_norm = 0.0;
  /// Necessary conditions implied by the frequency-domain premise.
  bool energy_condition = true;
  bool step_condition = true;
  int grid_points = 0;
};

inline constexpr double kAdmissibilityRelTol = 1e-9;

/// sup over the P-point uniform grid on [0, 2π) of ||Σ_k w_k e^{-jωk}||₂, together
/// with the energy Σ_k ||w_k||₂². A failed necessary condition (energy <= γ²,
/// ||w_k|| <= γ) makes the sequence inadmissible regardless of the sweep.
Admissibility disturbance_admissible(const Eigen::MatrixXd& w, double gamma, int grid_points);

// ---------------------------------------------------------------------------
// Closed-form bounds
// ---------------------------------------------------------------------------

struct EnergyMaxBound {
  double energy = 0.0;
  double max = 0.0;
};

/// ((T·γ)², T·γ)
EnergyMaxBound theorem2_bounds(double t_hinf, double gamma);
/// ((Kf·T·γ)², Kf·T·γ)
EnergyMaxBound corollary1_bounds(double kf_hinf, double t_hinf, double gamma);

struct BoundInputs {
  double gamma = 0.0;
  double t_hinf = 0.0;
  double kf_hinf = 0.0;
  double lipschitz = 0.0;  // L
  double q = 0.0;          // expected in-run deviation under disturbance
  double c = 0.0;          // nominal deviation bound
  double gamma_d = 0.0;
  /// Number of steps; nullopt is the infinite horizon.
  std::optional<long> horizon;

  double m() const { return t_hinf * gamma; }
  double n() const { return kf_hinf * t_hinf * gamma; }
};

/// L(Q+M+N)(1 - γ_d^{K+1})/(1 - γ_d), or L(Q+M+N)/(1 - γ_d) for K = ∞.
double corollary2_bound(const BoundInputs& in);
/// (L(Q+M+N) + LC)/(1 - γ_d).
double corollary3_bound(const BoundInputs& in);

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

struct RewardSample {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  double r = 0.0;
};

/// (x_{k+1}, u_k, r_k) for every run and step.
std::vector<RewardSample> reward_samples(const TrajectoryEnsemble& ensemble);

/// max |r₁ - r₂| / (||x₁-x₂|| + ||u₁-u₂||) over sample pairs. A lower bound on
/// the true constant. When max_pairs > 0 and there are more pairs than that,
/// max_pairs pairs are drawn uniformly with the given seed.
double estimate_lipschitz(std::span<const RewardSample> samples, std::size_t max_pairs = 0,
                          std::uint64_t seed = 0);

/// Per step k: mean over runs of ||x_{k+1} - x̄_{k+1}|| + ||u_k - ū_k||.
std::vector<double> dispersion_profile(const TrajectoryEnsemble& ensemble, const MeanTrajectory& mean);
/// Max over k of the dispersion profile of the disturbed ensemble.
double estimate_q(const TrajectoryEnsemble& disturbed, const MeanTrajectory& disturbed_mean);
/// Same estimator on the nominal ensemble.
double estimate_c(const TrajectoryEnsemble& nominal, const MeanTrajectory& nominal_mean);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ModelNorms {
  HinfReport state;   // ||T_z||_H∞ of the resolvent of K̃ʰ
  HinfReport action;  // ||K̃ᶠ||, a constant transfer function
};

ModelNorms model_norms(const KoopmanModel& model, int grid_points = kDefaultGridPoints,
                       double refinement_tol = kDefaultRefinementTol);

struct RewardDescriptor {
  /// Known Lipschitz constant; when absent it is estimated from the rollouts.
  std::optional<double> analytic_lipschitz;
  std::size_t max_pairs = 200000;
  std::uint64_t seed = 0;
};

struct EmpiricalLhs {
  double state_energy = 0.0;
  double state_max = 0.0;
  double action_energy = 0.0;
  double action_max = 0.0;
  /// |Σ_k γ_d^k (r̄ʷ_k - r̄ⁿ_k)|
  double reward_gap = 0.0;
  double nominal_return = 0.0;
  double disturbed_return = 0.0;
  /// Undiscounted per-step averages of the mean rewards.
  double nominal_mean_reward = 0.0;
  double disturbed_mean_reward = 0.0;

  /// 100·(nominal - disturbed)/|nominal| on the undiscounted averages; positive is a loss.
  double reward_impact_pct() const {
    return nominal_mean_reward != 0.0 ? 100.0 * (nominal_mean_reward - disturbed_mean_reward) / std::abs(nominal_mean_reward)
                                      : 0.0;
  }
};

struct Violation {
  std::string bound;
  double measured = 0.0;
  double limit = 0.0;
};

struct DeviationRow {
  long k = 0;
  double state_dev = 0.0;
  std::optional<double> action_dev;
  std::optional<double> reward_nominal_mean;
  std::optional<double> reward_disturbed_mean;
};

struct BoundReport {
  std::string label;
  double gamma = 0.0;
  double gamma_d = 0.0;
  long horizon = 0;
  std::size_t runs = 0;
  ModelNorms norms;
  double m = 0.0;
  double n = 0.0;
  EnergyMaxBound state_bound;
  EnergyMaxBound action_bound;

  std::optional<double> lipschitz;
  std::string lipschitz_source;  // "analytic" or "estimated-L"
  std::optional<double> q;
  std::optional<double> c;
  std::optional<double> reward_impact_bound;
  std::optional<double> generalization_error_bound;

  std::optional<EmpiricalLhs> empirical;
  std::vector<Violation> violations;
  std::size_t checks = 0;
  std::vector<DeviationRow> deviations;

  double t_hinf() const { return norms.state.value; }
  double kf_hinf() const { return norms.action.value; }
  double violation_rate() const {
    return checks ? static_cast<double>(violations.size()) / static_cast<double>(checks) : 0.0;
  }
};

/// Model-only analysis: norms, M, N and the state/action bounds. Reward bounds stay
/// pending until verification data supplies L, Q and C (an analytic L alone is kept).
BoundReport analyze_model(const KoopmanModel& model, double gamma, double gamma_d,
                          std::optional<double> analytic_lipschitz = std::nullopt,
                          int grid_points = kDefaultGridPoints,
                          double refinement_tol = kDefaultRefinementTol);

inline constexpr double kViolationRelTol = 1e-9;

/// Empirical left-hand sides against every bound; exceedances are recorded.
BoundReport verify_bounds(const MeanTrajectory& nominal_mean, const MeanTrajectory& disturbed_mean,
                          const TrajectoryEnsemble& nominal, const TrajectoryEnsemble& disturbed,
                          const ModelNorms& norms, double gamma, double gamma_d,
                          const RewardDescriptor& reward);
BoundReport verify_bounds(const MeanTrajectory& nominal_mean, const MeanTrajectory& disturbed_mean,
                          const TrajectoryEnsemble& nominal, const TrajectoryEnsemble& disturbed,
                          const KoopmanModel& model, double gamma, double gamma_d,
                          const RewardDescriptor& reward);

void to_json(nlohmann::json& j, const BoundReport& report);
void from_json(const nlohmann::json& j, BoundReport& report);

/// k,state_dev,action_dev,reward_nominal_mean,reward_disturbed_mean
void write_deviation_table(std::ostream& out, const BoundReport& report);

}  // namespace kgen
