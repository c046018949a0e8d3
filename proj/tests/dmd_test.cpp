#include <gtest/gtest.h>

#include <algorithm>
#include <complex>
#include <random>

#include "kgen/dmd.hpp"
#include "kgen/error.hpp"
#include "test_util.hpp"

using namespace kgen;
using namespace kgen::test;

namespace {

SnapshotPair shifted(const Eigen::MatrixXd& x) {
  return {x.leftCols(x.cols() - 1), x.rightCols(x.cols() - 1), SnapshotKind::state_shifted};
}

MeanTrajectory mean_of_states(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  MeanTrajectory m;
  m.mean_states = states;
  m.mean_actions = actions;
  m.mean_rewards = Eigen::VectorXd::Zero(actions.cols());
  m.run_count = 1;
  return m;
}

double max_eigen_residual(const DmdResult& r) {
  double worst = 0.0;
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
    const Eigen::VectorXcd& phi = r.modes[i];
    const Eigen::VectorXcd res = r.op.cast<std::complex<double>>() * phi - r.eigenvalues[i] * phi;
    worst = std::max(worst, res.norm() / phi.norm());
  }
  return worst;
}

}  // namespace

TEST(DmdStandard, DiagonalFromIdentitySnapshots) {
  SnapshotPair p{Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(2, 3).asDiagonal(), SnapshotKind::state_shifted};
  const auto r = dmd_standard(p);
  EXPECT_TRUE(r.op.isApprox(Eigen::Matrix2d(Eigen::Vector2d(2, 3).asDiagonal()), 1e-12));
  ASSERT_EQ(r.eigenvalues.size(), 2u);
  EXPECT_NEAR(r.eigenvalues[0].real(), 3.0, 1e-12);
  EXPECT_NEAR(r.eigenvalues[1].real(), 2.0, 1e-12);
  EXPECT_EQ(r.rank, 2);
}

TEST(DmdStandard, IdentityDynamics) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = random_matrix(3, 6, rng);
  const auto r = dmd_standard({x, x, SnapshotKind::state_shifted});
  for (const auto& l : r.eigenvalues) EXPECT_NEAR(std::abs(l - 1.0), 0.0, 1e-10);
  EXPECT_TRUE((r.op * x).isApprox(x, 1e-10));
}

TEST(DmdStandard, TriangularSystemEigenvalues) {
  Eigen::Matrix2d a;
  a << 0.9, 0.1, 0.0, 0.5;
  const auto r = dmd_standard(shifted(orbit(a, Eigen::Vector2d(1, 1), 50)));
  ASSERT_EQ(r.eigenvalues.size(), 2u);
  EXPECT_NEAR(r.eigenvalues[0].real(), 0.9, 1e-8);
  EXPECT_NEAR(r.eigenvalues[1].real(), 0.5, 1e-8);
  EXPECT_NEAR(r.eigenvalues[0].imag(), 0.0, 1e-8);
}

TEST(DmdStandard, ZeroSnapshotsDegenerate) {
  EXPECT_THROW(dmd_standard({Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 3), SnapshotKind::state_shifted}),
               DegenerateInputError);
}

TEST(DmdStandard, NonFiniteRejected) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 3);
  x(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(dmd_standard({x, x, SnapshotKind::state_shifted}), DataError);
}

TEST(DmdStandard, EigenvaluesSortedByModulus) {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd a = random_stable(6, 0.9, rng);
  Eigen::MatrixXd x(6, 0);
  std::vector<SnapshotPair> parts;
  for (int i = 0; i < 6; ++i) parts.push_back(shifted(orbit(a, random_matrix(6, 1, rng), 20)));
  const auto r = dmd_standard(concatenate_pairs(parts));
  for (std::size_t i = 1; i < r.eigenvalues.size(); ++i)
    EXPECT_GE(std::abs(r.eigenvalues[i - 1]) + 1e-12, std::abs(r.eigenvalues[i]));
  // complex conjugates adjacent
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
    if (r.eigenvalues[i].imag() > 1e-9) {
      ASSERT_LT(i + 1, r.eigenvalues.size());
      EXPECT_NEAR(std::abs(r.eigenvalues[i + 1] - std::conj(r.eigenvalues[i])), 0.0, 1e-9);
    }
  }
  EXPECT_LT(max_eigen_residual(r), 1e-8);
}

TEST(DmdStandard, ScaleEquivariance) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd a = random_stable(3, 0.8, rng);
  const Eigen::MatrixXd x = orbit(a, random_matrix(3, 1, rng), 30);
  const auto base = dmd_standard(shifted(x));
  const auto scaled = dmd_standard(shifted(-4.0 * x));
  auto right_only = shifted(x);
  right_only.right *= 2.5;
  const auto stretched = dmd_standard(right_only);
  ASSERT_EQ(base.eigenvalues.size(), scaled.eigenvalues.size());
  ASSERT_EQ(base.eigenvalues.size(), stretched.eigenvalues.size());
  for (std::size_t i = 0; i < base.eigenvalues.size(); ++i) {
    EXPECT_NEAR(std::abs(base.eigenvalues[i] - scaled.eigenvalues[i]), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(2.5 * base.eigenvalues[i] - stretched.eigenvalues[i]), 0.0, 1e-8);
  }
}

TEST(DmdExact, ScalingCase) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = random_matrix(3, 5, rng);
  const auto r = dmd_exact({x, 2.0 * x, SnapshotKind::state_shifted});
  ASSERT_EQ(r.eigenvalues.size(), 3u);
  for (const auto& l : r.eigenvalues) EXPECT_NEAR(std::abs(l - 2.0), 0.0, 1e-10);
  EXPECT_TRUE((r.op * x).isApprox(2.0 * x, 1e-10));
}

TEST(DmdExact, ZeroTargetHasNoNonzeroEigenvalues) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = random_matrix(3, 5, rng);
  const auto r = dmd_exact({x, Eigen::MatrixXd::Zero(3, 5), SnapshotKind::state_shifted});
  EXPECT_TRUE(r.eigenvalues.empty());
  EXPECT_TRUE(r.modes.empty());
  EXPECT_EQ(r.residual, 0.0);
  EXPECT_TRUE((r.op * x).isZero(1e-14));
}

TEST(DmdExact, RepeatedEigenvalue) {
  Eigen::Matrix2d b;
  b << 0.0, 1.0, -0.25, 1.0;
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd x = random_matrix(2, 40, rng);
  const auto r = dmd_exact({x, b * x, SnapshotKind::state_shifted});
  ASSERT_EQ(r.eigenvalues.size(), 2u);
  for (const auto& l : r.eigenvalues) EXPECT_NEAR(std::abs(l - 0.5), 0.0, 1e-6);
}

TEST(DmdExact, ModesAreEigenvectors) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd b = random_matrix(4, 4, rng);
    const Eigen::MatrixXd x = random_matrix(4, 12, rng);
    const auto r = dmd_exact({x, b * x, SnapshotKind::state_shifted}, 1e-10);
    EXPECT_LT(max_eigen_residual(r), 1e-6);
  }
}

TEST(DmdExact, AgreesWithStandardOnShiftedPairs) {
  std::mt19937_64 rng(17);
  const Eigen::MatrixXd a = random_stable(4, 0.9, rng);
  const auto p = shifted(orbit(a, random_matrix(4, 1, rng), 40));
  const auto s = dmd_standard(p);
  const auto e = dmd_exact(p);
  ASSERT_EQ(s.eigenvalues.size(), e.eigenvalues.size());
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
    EXPECT_NEAR(std::abs(s.eigenvalues[i] - e.eigenvalues[i]), 0.0, 1e-8);
}

TEST(FitStateOperator, RecoversTriangularSystem) {
  Eigen::Matrix2d a;
  a << 0.9, 0.1, 0.0, 0.5;
  const Eigen::MatrixXd x = orbit(a, Eigen::Vector2d(1, 1), 50);
  const auto r = fit_state_operator(mean_of_states(x, Eigen::MatrixXd::Zero(1, 50)));
  EXPECT_LE((r.op - a).norm() / a.norm(), 1e-8);
}

TEST(FitStateOperator, ConstantSequenceHasUnitEigenvalue) {
  Eigen::MatrixXd x(2, 6);
  x.colwise() = Eigen::Vector2d(1.5, -0.5);
  const auto r = fit_state_operator(mean_of_states(x, Eigen::MatrixXd::Zero(1, 5)));
  EXPECT_EQ(r.rank, 1);
  ASSERT_EQ(r.eigenvalues.size(), 1u);
  EXPECT_NEAR(r.eigenvalues[0].real(), 1.0, 1e-12);
}

TEST(FitStateOperator, ScalarDecay) {
  Eigen::MatrixXd x(1, 8);
  for (int k = 0; k < 8; ++k) x(0, k) = std::pow(0.9, k);
  const auto r = fit_state_operator(mean_of_states(x, Eigen::MatrixXd::Zero(1, 7)));
  EXPECT_NEAR(r.op(0, 0), 0.9, 1e-12);
}

TEST(FitActionOperator, ExactLinearPolicy) {
  Eigen::RowVector2d f(1.0, -2.0);
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = random_matrix(2, 6, rng);
  const Eigen::MatrixXd u = f * x.leftCols(5);
  EXPECT_TRUE(fit_action_operator(mean_of_states(x, u)).isApprox(Eigen::MatrixXd(f), 1e-10));
}

TEST(FitActionOperator, ZeroActions) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = random_matrix(2, 6, rng);
  EXPECT_TRUE(fit_action_operator(mean_of_states(x, Eigen::MatrixXd::Zero(3, 5))).isZero(0.0));
}

TEST(FitActionOperator, ScalarLeastSquares) {
  Eigen::MatrixXd x(1, 3);
  x << 1, 2, 99;
  Eigen::MatrixXd u(1, 2);
  u << 3, 6;
  EXPECT_NEAR(fit_action_operator(mean_of_states(x, u))(0, 0), 3.0, 1e-12);
}

TEST(FitActionOperator, ZeroStatesDegenerate) {
  EXPECT_THROW(fit_action_operator(mean_of_states(Eigen::MatrixXd::Zero(2, 4), Eigen::MatrixXd::Ones(1, 3))),
               DegenerateInputError);
}

TEST(FitActionOperator, NoRandomProbeBeatsIt) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd x = random_matrix(3, 21, rng);
  const Eigen::MatrixXd u = random_matrix(2, 20, rng);
  const auto m = mean_of_states(x, u);
  const Eigen::MatrixXd kf = fit_action_operator(m);
  const Eigen::MatrixXd left = x.leftCols(20);
  const double best = (u - kf * left).norm();
  for (int i = 0; i < 200; ++i) {
    const Eigen::MatrixXd probe = kf + 0.01 * random_matrix(2, 3, rng);
    EXPECT_GE((u - probe * left).norm(), best - 1e-12);
  }
}

TEST(Predict, ZeroStepsReturnsInitialState) {
  const auto model = model_from_operators(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Ones(1, 1));
  const auto p = predict(model, Eigen::VectorXd::Constant(1, 8.0), 0);
  EXPECT_EQ(p.states.cols(), 1);
  EXPECT_EQ(p.actions.cols(), 0);
  EXPECT_EQ(p.states(0, 0), 8.0);
}

TEST(Predict, IdentityIsConstant) {
  const auto model = model_from_operators(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(1, 2));
  const auto p = predict(model, Eigen::Vector2d(1, 2), 4);
  for (int k = 0; k <= 4; ++k) EXPECT_TRUE(p.states.col(k).isApprox(Eigen::Vector2d(1, 2)));
}

TEST(Predict, RepeatedHalving) {
  const auto model = model_from_operators(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Ones(1, 1));
  const auto p = predict(model, Eigen::VectorXd::Constant(1, 8.0), 3);
  EXPECT_EQ(p.states(0, 1), 4.0);
  EXPECT_EQ(p.states(0, 2), 2.0);
  EXPECT_EQ(p.states(0, 3), 1.0);
  EXPECT_EQ(p.actions(0, 0), 8.0);
}

TEST(Predict, DimensionMismatch) {
  const auto model = model_from_operators(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(1, 2));
  EXPECT_THROW(predict(model, Eigen::VectorXd::Ones(3), 2), DimensionError);
}

TEST(ModelJson, RoundTrip) {
  Eigen::Matrix2d a;
  a << 0.9, 0.1, 0.0, 1.0 / 3.0;
  const Eigen::MatrixXd x = orbit(a, Eigen::Vector2d(1, 1), 10);
  Eigen::MatrixXd u = Eigen::RowVector2d(0.7, -0.1) * x.leftCols(10);
  const auto model = fit_koopman_model(mean_of_states(x, u));
  const nlohmann::json j = model;
  const auto back = j.get<KoopmanModel>();
  EXPECT_TRUE((back.state_operator.array() == model.state_operator.array()).all());
  EXPECT_TRUE((back.action_operator.array() == model.action_operator.array()).all());
  EXPECT_EQ(back.state_dmd.rank, model.state_dmd.rank);
  ASSERT_EQ(back.state_dmd.eigenvalues.size(), model.state_dmd.eigenvalues.size());
}
