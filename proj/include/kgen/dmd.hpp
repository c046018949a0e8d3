#pragma once

// Finite-dimensional Koopman approximations fitted from snapshot data.

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "kgen/trajectory.hpp"

namespace kgen {

inline constexpr double kDefaultRankTol = 1e-10;

struct DmdResult {
  /// Fitted square operator K̃ on the snapshot space.
  Eigen::MatrixXd op;
  /// Nonzero eigenvalues, by descending modulus, then real part, then imaginary part.
  std::vector<std::complex<double>> eigenvalues;
  /// modes[i] is the mode for eigenvalues[i].
  std::vector<Eigen::VectorXcd> modes;
  /// Eigenvalues of the reduced matrix treated as zero (their modes are undefined).
  int zero_eigenvalues = 0;
  int rank = 0;
  /// All singular values of the left snapshot matrix, descending.
  Eigen::VectorXd singular_values;
  /// ||right - op * left||_F / ||right||_F (absolute misfit when right == 0).
  double residual = 0.0;
};

/// Six-step DMD on sequential snapshots: truncated SVD of X0, reduced matrix
/// Ã = U_rᵀ X1 V_r S_r⁻¹, its eigendecomposition, modes λ⁻¹ X1 V_r S_r⁻¹ ṽ and
/// the projected operator U_r Ã U_rᵀ. Singular values below rank_tol·σ₁ are dropped.
DmdResult dmd_standard(const SnapshotPair& pair, double rank_tol = kDefaultRankTol);

/// Exact DMD on arbitrary pairs (X, Y) with equal row counts. The operator is
/// Y V Σ⁻¹ Uᵀ, for which every returned (φ, λ) is an exact eigenpair.
DmdResult dmd_exact(const SnapshotPair& pair, double rank_tol = kDefaultRankTol);

/// Builds the shifted state snapshots of the mean trajectory and runs dmd_standard.
DmdResult fit_state_operator(const MeanTrajectory& mean, double rank_tol = kDefaultRankTol);

/// Least-squares action operator Ū · pinv(X̄) over all K column pairs, with the
/// pseudoinverse truncated at rank_tol·σ₁.
Eigen::MatrixXd fit_action_operator(const MeanTrajectory& mean, double rank_tol = kDefaultRankTol);

/// Truncated Moore-Penrose pseudoinverse.
Eigen::MatrixXd truncated_pinv(const Eigen::MatrixXd& a, double rank_tol);

struct FitMetadata {
  double rank_tol = kDefaultRankTol;
  Eigen::Index state_snapshots = 0;
  Eigen::Index action_snapshots = 0;
  std::size_t run_count = 0;
  /// ||Ū - K̃ᶠ X̄||_F / ||Ū||_F (absolute misfit when Ū == 0).
  double action_residual = 0.0;
};

struct KoopmanModel {
  Eigen::MatrixXd state_operator;   // n x n
  Eigen::MatrixXd action_operator;  // m x n
  DmdResult state_dmd;
  FitMetadata meta;

  Eigen::Index state_dim() const { return state_operator.rows(); }
  Eigen::Index action_dim() const { return action_operator.rows(); }
};

KoopmanModel fit_koopman_model(const MeanTrajectory& mean, double rank_tol = kDefaultRankTol);

/// Builds a model directly from known operators (oracle runs on exact surrogates).
KoopmanModel model_from_operators(Eigen::MatrixXd state_operator, Eigen::MatrixXd action_operator);

struct Prediction {
  Eigen::MatrixXd states;   // n x (steps+1)
  Eigen::MatrixXd actions;  // m x steps
};

/// x̂_{k+1} = K̃ʰ x̂_k, û_k = K̃ᶠ x̂_k starting from x0.
Prediction predict(const KoopmanModel& model, const Eigen::VectorXd& x0, int steps);

void to_json(nlohmann::json& j, const KoopmanModel& model);
void from_json(const nlohmann::json& j, KoopmanModel& model);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace kgen
