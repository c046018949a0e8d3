#include "kgen/dmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgen/error.hpp"

namespace kgen {

namespace {

struct TruncatedSvd {
  Eigen::MatrixXd u;  // n x r
  Eigen::VectorXd s;  // r
  Eigen::MatrixXd v;  // l x r
  Eigen::VectorXd all_singular_values;
  int rank = 0;
};

void check_rank_tol(double rank_tol) {
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) {
    throw ParameterError("rank_tol must lie in (0, 1)");
  }
}

TruncatedSvd truncated_svd(const Eigen::MatrixXd& x, double rank_tol) {
  check_rank_tol(rank_tol);
  if (x.size() == 0) throw InsufficientDataError("snapshot matrix has no columns");
  if (!x.allFinite()) throw DataError("snapshot matrix contains non-finite entries");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) {
    throw DegenerateInputError("snapshot matrix is identically zero");
  }
  int r = 0;
  while (r < sv.size() && sv(r) >= rank_tol * sv(0)) ++r;

  TruncatedSvd out;
  out.u = svd.matrixU().leftCols(r);
  out.s = sv.head(r);
  out.v = svd.matrixV().leftCols(r);
  out.all_singular_values = sv;
  out.rank = r;
  return out;
}

bool eigen_order(const std::complex<double>& a, const std::complex<double>& b) {
  const double ma = std::abs(a);
  const double mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

double relative_misfit(const Eigen::MatrixXd& target, const Eigen::MatrixXd& fitted) {
  const double miss = (target - fitted).norm();
  const double scale = target.norm();
  return scale > 0.0 ? miss / scale : miss;
}

// Shared steps of both DMD variants once the SVD of the left matrix is known:
// reduced matrix, its eigenpairs, and the modes λ⁻¹ Y V Σ⁻¹ w for λ ≠ 0.
DmdResult reduced_eigenpairs(const SnapshotPair& pair, const TruncatedSvd& svd,
                             Eigen::MatrixXd& projected_right) {
  const Eigen::VectorXd inv_s = svd.s.cwiseInverse();
  projected_right = pair.right * svd.v * inv_s.asDiagonal();  // Y V Σ⁻¹
  const Eigen::MatrixXd reduced = svd.u.transpose() * projected_right;

  DmdResult result;
  result.rank = svd.rank;
  result.singular_values = svd.all_singular_values;

  Eigen::EigenSolver<Eigen::MatrixXd> es(reduced, true);
  if (es.info() != Eigen::Success) throw DataError("eigendecomposition of the reduced matrix failed");
  const Eigen::VectorXcd lambda = es.eigenvalues();
  const Eigen::MatrixXcd w = es.eigenvectors();

  const double zero_tol = 1e-12 * reduced.norm();
  std::vector<int> keep;
  for (int i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda(i)) > zero_tol && std::abs(lambda(i)) > 0.0) {
      keep.push_back(i);
    } else {
      ++result.zero_eigenvalues;
    }
  }
  std::stable_sort(keep.begin(), keep.end(),
                   [&](int a, int b) { return eigen_order(lambda(a), lambda(b)); });

  const Eigen::MatrixXcd projected_c = projected_right.cast<std::complex<double>>();
  for (int i : keep) {
    result.eigenvalues.push_back(lambda(i));
    result.modes.push_back((projected_c * w.col(i)) / lambda(i));
  }
  return result;
}

void check_pair(const SnapshotPair& pair) {
  if (pair.left.cols() != pair.right.cols()) {
    throw DimensionError("snapshot matrices have different column counts");
  }
  if (pair.left.rows() != pair.right.rows()) {
    throw DimensionError("DMD needs left and right snapshots of equal row count");
  }
  if (!pair.right.allFinite()) throw DataError("snapshot matrix contains non-finite entries");
}

}  // namespace

DmdResult dmd_standard(const SnapshotPair& pair, double rank_tol) {
  if (pair.kind != SnapshotKind::state_shifted) {
    throw ParameterError("dmd_standard expects state-shifted snapshots");
  }
  check_pair(pair);
  const auto svd = truncated_svd(pair.left, rank_tol);
  Eigen::MatrixXd projected;
  auto result = reduced_eigenpairs(pair, svd, projected);
  const Eigen::MatrixXd reduced = svd.u.transpose() * projected;
  result.op = svd.u * reduced * svd.u.transpose();
  result.residual = relative_misfit(pair.right, result.op * pair.left);
  return result;
}

DmdResult dmd_exact(const SnapshotPair& pair, double rank_tol) {
  check_pair(pair);
  const auto svd = truncated_svd(pair.left, rank_tol);
  Eigen::MatrixXd projected;
  auto result = reduced_eigenpairs(pair, svd, projected);
  result.op = projected * svd.u.transpose();
  result.residual = relative_misfit(pair.right, result.op * pair.left);
  return result;
}

DmdResult fit_state_operator(const MeanTrajectory& mean, double rank_tol) {
  return dmd_standard(build_state_snapshots(mean), rank_tol);
}

Eigen::MatrixXd truncated_pinv(const Eigen::MatrixXd& a, double rank_tol) {
  const auto svd = truncated_svd(a, rank_tol);
  return svd.v * svd.s.cwiseInverse().asDiagonal() * svd.u.transpose();
}

Eigen::MatrixXd fit_action_operator(const MeanTrajectory& mean, double rank_tol) {
  const auto pair = build_action_pairs(mean);
  if (!pair.right.allFinite()) throw DataError("action snapshots contain non-finite entries");
  return pair.right * truncated_pinv(pair.left, rank_tol);
}

KoopmanModel fit_koopman_model(const MeanTrajectory& mean, double rank_tol) {
  KoopmanModel model;
  model.state_dmd = fit_state_operator(mean, rank_tol);
  model.state_operator = model.state_dmd.op;
  model.action_operator = fit_action_operator(mean, rank_tol);

  const auto actions = build_action_pairs(mean);
  model.meta.rank_tol = rank_tol;
  model.meta.state_snapshots = mean.mean_states.cols() - 1;
  model.meta.action_snapshots = actions.left.cols();
  model.meta.run_count = mean.run_count;
  model.meta.action_residual = relative_misfit(actions.right, model.action_operator * actions.left);
  return model;
}

KoopmanModel model_from_operators(Eigen::MatrixXd state_operator, Eigen::MatrixXd action_operator) {
  if (state_operator.rows() != state_operator.cols()) {
    throw DimensionError("state operator must be square");
  }
  if (action_operator.cols() != state_operator.rows()) {
    throw DimensionError("action operator must have n columns");
  }
  KoopmanModel model;
  model.state_operator = std::move(state_operator);
  model.action_operator = std::move(action_operator);
  model.state_dmd.op = model.state_operator;
  Eigen::EigenSolver<Eigen::MatrixXd> es(model.state_operator, false);
  std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
  std::erase_if(ev, [](const auto& l) { return l == 0.0; });
  model.state_dmd.zero_eigenvalues = static_cast<int>(model.state_operator.rows() - ev.size());
  std::stable_sort(ev.begin(), ev.end(), eigen_order);
  model.state_dmd.eigenvalues = std::move(ev);
  model.state_dmd.rank = static_cast<int>(model.state_operator.rows());
  return model;
}

Prediction predict(const KoopmanModel& model, const Eigen::VectorXd& x0, int steps) {
  if (steps < 0) throw ParameterError("predict: steps must be >= 0");
  if (x0.size() != model.state_dim()) {
    throw DimensionError("predict: initial state has dimension " + std::to_string(x0.size()) +
                         ", model expects " + std::to_string(model.state_dim()));
  }
  Prediction p;
  p.states.resize(model.state_dim(), steps + 1);
  p.actions.resize(model.action_dim(), steps);
  p.states.col(0) = x0;
  for (int k = 0; k < steps; ++k) {
    p.actions.col(k) = model.action_operator * p.states.col(k);
    p.states.col(k + 1) = model.state_operator * p.states.col(k);
  }
  return p;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw DimensionError("matrix JSON: data length does not match rows x cols");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
  }
  if (!m.allFinite()) throw DataError("matrix JSON contains non-finite entries");
  return m;
}

void to_json(nlohmann::json& j, const KoopmanModel& model) {
  nlohmann::json eig = nlohmann::json::array();
  for (const auto& l : model.state_dmd.eigenvalues) eig.push_back({l.real(), l.imag()});
  std::vector<double> sv(model.state_dmd.singular_values.data(),
                         model.state_dmd.singular_values.data() + model.state_dmd.singular_values.size());
  j = nlohmann::json{
      {"format", "kgen.koopman_model"},
      {"version", 1},
      {"n", model.state_dim()},
      {"m", model.action_dim()},
      {"state_operator", matrix_to_json(model.state_operator)},
      {"action_operator", matrix_to_json(model.action_operator)},
      {"eigenvalues", eig},
      {"zero_eigenvalues", model.state_dmd.zero_eigenvalues},
      {"rank", model.state_dmd.rank},
      {"rank_tol", model.meta.rank_tol},
      {"singular_values", sv},
      {"residuals", {{"state", model.state_dmd.residual}, {"action", model.meta.action_residual}}},
      {"snapshots",
       {{"state", model.meta.state_snapshots},
        {"action", model.meta.action_snapshots},
        {"runs", model.meta.run_count}}},
  };
}

void from_json(const nlohmann::json& j, KoopmanModel& model) {
  if (j.value("format", "") != "kgen.koopman_model") {
    throw ParseError("not a Koopman model document (field 'format')", 0);
  }
  model = model_from_operators(matrix_from_json(j.at("state_operator")),
                               matrix_from_json(j.at("action_operator")));
  if (j.at("n").get<Eigen::Index>() != model.state_dim() ||
      j.at("m").get<Eigen::Index>() != model.action_dim()) {
    throw DimensionError("model JSON: declared n/m disagree with operator shapes");
  }
  model.state_dmd.eigenvalues.clear();
  for (const auto& e : j.at("eigenvalues")) {
    model.state_dmd.eigenvalues.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
  }
  model.state_dmd.zero_eigenvalues = j.value("zero_eigenvalues", 0);
  model.state_dmd.rank = j.at("rank").get<int>();
  const auto sv = j.value("singular_values", std::vector<double>{});
  model.state_dmd.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
  model.meta.rank_tol = j.at("rank_tol").get<double>();
  model.state_dmd.residual = j.at("residuals").at("state").get<double>();
  model.meta.action_residual = j.at("residuals").at("action").get<double>();
  const auto& snaps = j.at("snapshots");
  model.meta.state_snapshots = snaps.at("state").get<Eigen::Index>();
  model.meta.action_snapshots = snaps.at("action").get<Eigen::Index>();
  model.meta.run_count = snaps.at("runs").get<std::size_t>();
}

}  // namespace kgen
