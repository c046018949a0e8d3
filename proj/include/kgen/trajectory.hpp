#pragma once

// Trajectory ensembles and the snapshot matrices built from their ensemble means.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kgen {

/// One rollout: K+1 states (columns of `states`), K actions and K rewards.
struct Trajectory {
  std::int64_t run_id = 0;
  Eigen::MatrixXd states;   // n x (K+1)
  Eigen::MatrixXd actions;  // m x K
  Eigen::VectorXd rewards;  // K
  std::uint64_t seed = 0;

  Eigen::Index state_dim() const { return states.rows(); }
  Eigen::Index action_dim() const { return actions.rows(); }
  Eigen::Index horizon() const { return actions.cols(); }

  /// Throws DimensionError on inconsistent lengths, DataError on non-finite entries.
  void validate() const;
};

/// R >= 1 trajectories sharing n, m and K, with unique run ids.
class TrajectoryEnsemble {
 public:
  explicit TrajectoryEnsemble(std::vector<Trajectory> trajectories);

  std::span<const Trajectory> trajectories() const { return trajectories_; }
  const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }
  std::size_t size() const { return trajectories_.size(); }
  Eigen::Index state_dim() const { return n_; }
  Eigen::Index action_dim() const { return m_; }
  Eigen::Index horizon() const { return k_; }

 private:
  std::vector<Trajectory> trajectories_;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  Eigen::Index k_ = 0;
};

/// Per-step ensemble means x̄_k, ū_k (and r̄_k) over `run_count` runs.
struct MeanTrajectory {
  Eigen::MatrixXd mean_states;   // n x (K+1)
  Eigen::MatrixXd mean_actions;  // m x K
  Eigen::VectorXd mean_rewards;  // K
  std::size_t run_count = 0;

  Eigen::Index horizon() const { return mean_actions.cols(); }
};

enum class SnapshotKind { state_shifted, state_action };

struct SnapshotPair {
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
  SnapshotKind kind = SnapshotKind::state_shifted;
};

/// Reads the delimiter-separated trajectory format.
///
/// Layout: optional `# seed,<run>,<seed>` comment lines, then the header
/// `run,k,x0..x{n-1},u0..u{m-1},r`, then one row per (run, step). The last
/// step of each run carries the terminal state with empty action and reward
/// fields. Rows of a run are contiguous with k = 0..K in order.
TrajectoryEnsemble load_trajectories(
    const std::filesystem::path& path,
    std::optional<std::pair<Eigen::Index, Eigen::Index>> expected_dims = std::nullopt);
TrajectoryEnsemble read_trajectories(
    std::istream& in,
    std::optional<std::pair<Eigen::Index, Eigen::Index>> expected_dims = std::nullopt);

/// Writes values in shortest round-trip decimal form.
void save_trajectories(const std::filesystem::path& path, const TrajectoryEnsemble& ensemble);
void write_trajectories(std::ostream& out, const TrajectoryEnsemble& ensemble);

/// Elementwise mean over runs using a pairwise summation tree over the run index.
MeanTrajectory ensemble_mean(const TrajectoryEnsemble& ensemble);

/// left = [x̄_0 .. x̄_{K-1}], right = [x̄_1 .. x̄_K]. Requires K >= 2.
SnapshotPair build_state_snapshots(const MeanTrajectory& mean);

/// left = [x̄_0 .. x̄_{K-1}], right = [ū_0 .. ū_{K-1}]. Requires K >= 1.
SnapshotPair build_action_pairs(const MeanTrajectory& mean);

/// Column-concatenates pairs of the same kind and row counts (e.g. several
/// independently initialized trajectories for full-rank excitation).
SnapshotPair concatenate_pairs(std::span<const SnapshotPair> pairs);

}  // namespace kgen
