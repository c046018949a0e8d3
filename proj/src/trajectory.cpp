#include "kgen/trajectory.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>

#include "kgen/error.hpp"
#include "kgen/format.hpp"

namespace kgen {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

template <typename Int = std::int64_t>
Int parse_int(std::string_view field, std::size_t line_no, const char* what) {
  Int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(std::string("invalid ") + what + " '" + std::string(field) + "'", line_no);
  }
  return value;
}

double parse_real(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("invalid number '" + std::string(field) + "'", line_no);
  }
  if (!std::isfinite(value)) {
    throw DataError("line " + std::to_string(line_no) + ": non-finite value '" + std::string(field) + "'");
  }
  return value;
}

// Parses "x<i>" / "u<i>" header names; returns -1 if the prefix does not match.
long header_index(std::string_view name, char prefix) {
  if (name.size() < 2 || name.front() != prefix) return -1;
  long idx = 0;
  const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
  if (ec != std::errc{} || ptr != name.data() + name.size()) return -1;
  return idx;
}

struct RunRows {
  std::int64_t run_id = 0;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> actions;
  std::vector<double> rewards;
  bool terminated = false;
  std::size_t first_line = 0;
};

Trajectory to_trajectory(const RunRows& rows, Eigen::Index n, Eigen::Index m) {
  Trajectory t;
  t.run_id = rows.run_id;
  const auto k = static_cast<Eigen::Index>(rows.actions.size());
  t.states.resize(n, k + 1);
  t.actions.resize(m, k);
  t.rewards.resize(k);
  for (Eigen::Index i = 0; i <= k; ++i) t.states.col(i) = rows.states[i];
  for (Eigen::Index i = 0; i < k; ++i) {
    t.actions.col(i) = rows.actions[i];
    t.rewards(i) = rows.rewards[i];
  }
  return t;
}

Eigen::MatrixXd pairwise_sum(std::span<const Trajectory> runs,
                             const Eigen::MatrixXd Trajectory::*field) {
  if (runs.size() == 1) return runs.front().*field;
  const auto half = runs.size() / 2;
  return pairwise_sum(runs.first(half), field) + pairwise_sum(runs.subspan(half), field);
}

Eigen::VectorXd pairwise_sum_rewards(std::span<const Trajectory> runs) {
  if (runs.size() == 1) return runs.front().rewards;
  const auto half = runs.size() / 2;
  return pairwise_sum_rewards(runs.first(half)) + pairwise_sum_rewards(runs.subspan(half));
}

}  // namespace

void Trajectory::validate() const {
  if (states.cols() != actions.cols() + 1 || rewards.size() != actions.cols()) {
    throw DimensionError("trajectory " + std::to_string(run_id) + ": expected |states| = |actions| + 1 = |rewards| + 1");
  }
  if (states.rows() < 1) {
    throw DimensionError("trajectory " + std::to_string(run_id) + ": state dimension must be >= 1");
  }
  if (!states.allFinite() || !actions.allFinite() || !rewards.allFinite()) {
    throw DataError("trajectory " + std::to_string(run_id) + ": non-finite entries");
  }
}

TrajectoryEnsemble::TrajectoryEnsemble(std::vector<Trajectory> trajectories)
    : trajectories_(std::move(trajectories)) {
  if (trajectories_.empty()) throw EmptyInputError("trajectory ensemble needs at least one run");
  const auto& first = trajectories_.front();
  n_ = first.state_dim();
  m_ = first.action_dim();
  k_ = first.horizon();
  std::set<std::int64_t> ids;
  for (const auto& t : trajectories_) {
    t.validate();
    if (t.state_dim() != n_ || t.action_dim() != m_) {
      throw DimensionError("run " + std::to_string(t.run_id) + ": dimensions (" +
                           std::to_string(t.state_dim()) + ", " + std::to_string(t.action_dim()) +
                           ") differ from (" + std::to_string(n_) + ", " + std::to_string(m_) + ")");
    }
    if (t.horizon() != k_) {
      throw DimensionError("run " + std::to_string(t.run_id) + ": horizon " +
                           std::to_string(t.horizon()) + " differs from " + std::to_string(k_) +
                           " (ragged ensembles are rejected)");
    }
    if (!ids.insert(t.run_id).second) {
      throw DataError("duplicate run id " + std::to_string(t.run_id));
    }
  }
}

TrajectoryEnsemble read_trajectories(std::istream& in,
                                     std::optional<std::pair<Eigen::Index, Eigen::Index>> expected_dims) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::int64_t, std::uint64_t>> seeds;
  std::vector<std::string_view> header;
  std::string header_line;

  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      auto body = trim(t.substr(1));
      if (body.starts_with("seed,")) {
        const auto parts = split(body, ',');
        if (parts.size() != 3) throw ParseError("malformed seed comment", line_no);
        const auto run = parse_int(parts[1], line_no, "run id");
        const auto seed = parse_int<std::uint64_t>(parts[2], line_no, "seed");
        seeds.emplace_back(run, seed);
      }
      continue;
    }
    header_line = std::string(t);
    break;
  }
  if (header_line.empty()) throw ParseError("missing header row", line_no);
  header = split(header_line, ',');
  const std::size_t header_line_no = line_no;

  if (header.size() < 4 || header[0] != "run" || header[1] != "k" || header.back() != "r") {
    throw ParseError("header must read run,k,x0..,u0..,r", header_line_no);
  }
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::size_t col = 2;
  while (col + 1 < header.size() && header_index(header[col], 'x') == n) { ++n; ++col; }
  while (col + 1 < header.size() && header_index(header[col], 'u') == m) { ++m; ++col; }
  if (col != header.size() - 1 || n == 0) {
    throw ParseError("unexpected header column '" + std::string(header[col]) + "'", header_line_no);
  }
  if (expected_dims && (expected_dims->first != n || expected_dims->second != m)) {
    throw DimensionError("header declares n=" + std::to_string(n) + ", m=" + std::to_string(m) +
                         " but expected n=" + std::to_string(expected_dims->first) +
                         ", m=" + std::to_string(expected_dims->second));
  }
  const std::size_t width = header.size();

  std::vector<Trajectory> runs;
  std::optional<RunRows> current;
  auto finish = [&](std::size_t at_line) {
    if (!current) return;
    if (!current->terminated) {
      throw ParseError("run " + std::to_string(current->run_id) + " has no terminal state row", at_line);
    }
    runs.push_back(to_trajectory(*current, n, m));
    current.reset();
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split(t, ',');
    if (fields.size() != width) {
      throw DimensionError("line " + std::to_string(line_no) + ": " + std::to_string(fields.size()) +
                           " fields, header declares " + std::to_string(width));
    }
    const auto run = parse_int(fields[0], line_no, "run id");
    const auto k = parse_int(fields[1], line_no, "step index");
    if (!current || current->run_id != run) {
      finish(line_no);
      current.emplace();
      current->run_id = run;
      current->first_line = line_no;
    } else if (current->terminated) {
      throw ParseError("row after terminal state of run " + std::to_string(run), line_no);
    }
    if (k != static_cast<std::int64_t>(current->states.size())) {
      throw ParseError("expected step " + std::to_string(current->states.size()) + ", got " +
                       std::to_string(k), line_no);
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = parse_real(fields[2 + i], line_no);
    current->states.push_back(std::move(x));

    std::size_t empty = 0;
    for (std::size_t c = 2 + n; c < width; ++c) empty += fields[c].empty() ? 1 : 0;
    if (empty == width - 2 - n) {
      current->terminated = true;
      continue;
    }
    if (empty != 0) throw ParseError("action/reward fields partially empty", line_no);
    Eigen::VectorXd u(m);
    for (Eigen::Index i = 0; i < m; ++i) u(i) = parse_real(fields[2 + n + i], line_no);
    current->actions.push_back(std::move(u));
    current->rewards.push_back(parse_real(fields[width - 1], line_no));
  }
  finish(line_no);
  if (runs.empty()) throw ParseError("no trajectory rows", line_no);

  for (const auto& [run, seed] : seeds) {
    for (auto& t : runs) {
      if (t.run_id == run) t.seed = seed;
    }
  }
  return TrajectoryEnsemble(std::move(runs));
}

TrajectoryEnsemble load_trajectories(const std::filesystem::path& path,
                                     std::optional<std::pair<Eigen::Index, Eigen::Index>> expected_dims) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trajectory file " + path.string());
  return read_trajectories(in, expected_dims);
}

void write_trajectories(std::ostream& out, const TrajectoryEnsemble& ensemble) {
  const auto n = ensemble.state_dim();
  const auto m = ensemble.action_dim();
  for (const auto& t : ensemble.trajectories()) {
    out << "# seed," << t.run_id << ',' << t.seed << '\n';
  }
  out << "run,k";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i;
  for (Eigen::Index i = 0; i < m; ++i) out << ",u" << i;
  out << ",r\n";

  std::string row;
  for (const auto& t : ensemble.trajectories()) {
    for (Eigen::Index k = 0; k <= t.horizon(); ++k) {
      row.clear();
      row += std::to_string(t.run_id);
      row += ',';
      row += std::to_string(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        row += ',';
        append_real(row, t.states(i, k));
      }
      for (Eigen::Index i = 0; i < m; ++i) {
        row += ',';
        if (k < t.horizon()) append_real(row, t.actions(i, k));
      }
      row += ',';
      if (k < t.horizon()) append_real(row, t.rewards(k));
      row += '\n';
      out << row;
    }
  }
}

void save_trajectories(const std::filesystem::path& path, const TrajectoryEnsemble& ensemble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trajectory file " + path.string());
  write_trajectories(out, ensemble);
}

MeanTrajectory ensemble_mean(const TrajectoryEnsemble& ensemble) {
  const auto runs = ensemble.trajectories();
  if (runs.empty()) throw EmptyInputError("ensemble_mean: empty ensemble");
  const double inv = 1.0 / static_cast<double>(runs.size());
  MeanTrajectory mean;
  mean.mean_states = pairwise_sum(runs, &Trajectory::states) * inv;
  mean.mean_actions = pairwise_sum(runs, &Trajectory::actions) * inv;
  mean.mean_rewards = pairwise_sum_rewards(runs) * inv;
  mean.run_count = runs.size();
  return mean;
}

SnapshotPair build_state_snapshots(const MeanTrajectory& mean) {
  const auto k = mean.mean_states.cols() - 1;
  if (k < 2) throw InsufficientDataError("state snapshots need K >= 2, got K = " + std::to_string(k));
  return {mean.mean_states.leftCols(k), mean.mean_states.rightCols(k), SnapshotKind::state_shifted};
}

SnapshotPair build_action_pairs(const MeanTrajectory& mean) {
  const auto k = mean.mean_actions.cols();
  if (k < 1 || mean.mean_states.cols() < k + 1) {
    throw InsufficientDataError("action pairs need K >= 1");
  }
  return {mean.mean_states.leftCols(k), mean.mean_actions, SnapshotKind::state_action};
}

SnapshotPair concatenate_pairs(std::span<const SnapshotPair> pairs) {
  if (pairs.empty()) throw EmptyInputError("concatenate_pairs: no pairs");
  Eigen::Index cols = 0;
  for (const auto& p : pairs) {
    if (p.kind != pairs.front().kind || p.left.rows() != pairs.front().left.rows() ||
        p.right.rows() != pairs.front().right.rows() || p.left.cols() != p.right.cols()) {
      throw DimensionError("concatenate_pairs: incompatible snapshot pairs");
    }
    cols += p.left.cols();
  }
  SnapshotPair out{Eigen::MatrixXd(pairs.front().left.rows(), cols),
                   Eigen::MatrixXd(pairs.front().right.rows(), cols), pairs.front().kind};
  Eigen::Index at = 0;
  for (const auto& p : pairs) {
    out.left.middleCols(at, p.left.cols()) = p.left;
    out.right.middleCols(at, p.right.cols()) = p.right;
    at += p.left.cols();
  }
  return out;
}

}  // namespace kgen
