#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "kgen/env.hpp"
#include "kgen/error.hpp"

using namespace kgen;

namespace {

LinearSurrogateConfig scalar(double a, double x0, int horizon) {
  LinearSurrogateConfig c;
  c.a = Eigen::MatrixXd::Constant(1, 1, a);
  c.f = Eigen::MatrixXd::Constant(1, 1, 1.0);
  c.x0_mean = Eigen::VectorXd::Constant(1, x0);
  c.horizon = horizon;
  return c;
}

UavState single_gu_below(Eigen::Vector2d at) {
  UavState s;
  s.uav = at;
  s.gus.resize(1);
  s.gus[0].position = at;
  return s;
}

}  // namespace

TEST(LinearRollout, NilpotentDynamics) {
  LinearSurrogateConfig c;
  c.a = Eigen::MatrixXd::Zero(2, 2);
  c.f = Eigen::MatrixXd::Ones(1, 2);
  c.x0_mean = Eigen::Vector2d(3, -4);
  c.horizon = 4;
  const auto t = linear_rollout(c);
  EXPECT_EQ(t.states.col(0), Eigen::Vector2d(3, -4));
  EXPECT_TRUE(t.states.rightCols(4).isZero(0.0));
}

TEST(LinearRollout, RepeatedHalving) {
  const auto t = linear_rollout(scalar(0.5, 8, 3));
  EXPECT_EQ(t.states, Eigen::RowVector4d(8, 4, 2, 1));
  EXPECT_EQ(t.actions, Eigen::RowVector3d(8, 4, 2));
  EXPECT_DOUBLE_EQ(t.rewards(0), -4.0 - 0.8);
}

TEST(LinearRollout, ImpulseResponse) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 4);
  w(0, 0) = 1.0;
  const auto t = linear_rollout(scalar(0.5, 0, 4), w);
  EXPECT_EQ(t.states, (Eigen::RowVectorXd(5) << 0, 1, 0.5, 0.25, 0.125).finished());
}

TEST(LinearRollout, DimensionErrors) {
  auto c = scalar(0.5, 1, 3);
  EXPECT_THROW(linear_rollout(c, Eigen::MatrixXd::Zero(2, 3)), DimensionError);
  c.f = Eigen::MatrixXd::Ones(1, 2);
  EXPECT_THROW(linear_rollout(c), DimensionError);
}

TEST(LinearRollout, SeededNoiseIsReproducible) {
  auto c = scalar(0.9, 1, 50);
  c.noise_std = 0.3;
  c.seed = 77;
  const auto a = linear_rollout(c);
  const auto b = linear_rollout(c);
  EXPECT_TRUE((a.states.array() == b.states.array()).all());
  c.seed = 78;
  EXPECT_FALSE((linear_rollout(c).states.array() == a.states.array()).all());
}

TEST(LinearEnsemble, SeedsFollowMaster) {
  auto c = scalar(0.9, 1, 5);
  c.noise_std = 0.1;
  const auto e = linear_ensemble(c, 3, 100);
  EXPECT_EQ(e.size(), 3u);
  EXPECT_EQ(e[2].seed, 102u);
}

TEST(GuMotion, SpeedRecursion) {
  UavEnvConfig c;
  c.gu_speed_std = 0.0;
  std::mt19937_64 rng(1);
  GuState g;
  g.position = {50, 50};
  g.speed = 7.0;

  c.speed_memory = 1.0;
  EXPECT_DOUBLE_EQ(step_gu_motion(g, c, rng).speed, 7.0);
  c.speed_memory = 0.0;
  EXPECT_DOUBLE_EQ(step_gu_motion(g, c, rng).speed, c.gu_mean_speed);
  c.speed_memory = 0.5;
  g.speed = 3.0;
  EXPECT_DOUBLE_EQ(step_gu_motion(g, c, rng).speed, 3.0);
}

TEST(GuMotion, SpeedNeverNegative) {
  UavEnvConfig c;
  c.gu_speed_std = 50.0;
  std::mt19937_64 rng(2);
  GuState g;
  g.position = {50, 50};
  for (int i = 0; i < 1000; ++i) {
    g = step_gu_motion(g, c, rng);
    ASSERT_GE(g.speed, 0.0);
  }
}

TEST(GuMotion, StraightLineWithReflection) {
  UavEnvConfig c;
  c.gu_speed_std = 0.0;
  c.heading_keep_prob = 1.0;
  c.gu_mean_speed = 10.0;
  c.speed_memory = 0.0;
  std::mt19937_64 rng(3);
  GuState g;
  g.position = {95.0, 40.0};
  g.speed = 10.0;
  g.heading = 0.0;  // +x at 1 m per step
  for (int i = 0; i < 5; ++i) g = step_gu_motion(g, c, rng);
  EXPECT_NEAR(g.position.x(), 100.0, 1e-12);
  EXPECT_NEAR(g.position.y(), 40.0, 1e-12);
  for (int i = 0; i < 3; ++i) g = step_gu_motion(g, c, rng);
  // reflected: moving in -x now
  EXPECT_NEAR(g.position.x(), 97.0, 1e-12);
  EXPECT_NEAR(g.position.y(), 40.0, 1e-12);
  EXPECT_NEAR(std::cos(g.heading), -1.0, 1e-12);
}

TEST(GuMotion, StaysInsideArea) {
  UavEnvConfig c;
  c.gu_mean_speed = 200.0;
  std::mt19937_64 rng(4);
  GuState g;
  g.position = {1, 99};
  g.speed = 200.0;
  for (int i = 0; i < 2000; ++i) {
    g = step_gu_motion(g, c, rng);
    ASSERT_GE(g.position.x(), 0.0);
    ASSERT_LE(g.position.x(), c.area_x);
    ASSERT_GE(g.position.y(), 0.0);
    ASSERT_LE(g.position.y(), c.area_y);
  }
}

TEST(PathLoss, NoAbsorption) {
  UavEnvConfig c;
  c.absorption = 0.0;
  const double h = path_loss(50.0, c);
  EXPECT_NEAR(h, kSpeedOfLight / (4.0 * std::numbers::pi * 30e9 * 50.0), 1e-20);
  EXPECT_NEAR(h, 1.59e-5, 0.01e-5);
  EXPECT_DOUBLE_EQ(path_loss(100.0, c), 0.5 * h);
}

TEST(PathLoss, AbsorptionFactor) {
  UavEnvConfig c;
  UavEnvConfig dry = c;
  dry.absorption = 0.0;
  EXPECT_NEAR(path_loss(80.0, c) / path_loss(80.0, dry), std::exp(-0.5 * c.absorption * 80.0), 1e-15);
}

TEST(PathLoss, SingularAtZero) {
  UavEnvConfig c;
  EXPECT_THROW(path_loss(0.0, c), ParameterError);
}

TEST(DownlinkRate, SpotValues) {
  UavEnvConfig c;
  EXPECT_EQ(downlink_rate(1e6, 0.0, c), 0.0);
  c.power = c.noise_power;
  EXPECT_DOUBLE_EQ(downlink_rate(5e6, 1.0, c), 5e6);

  UavEnvConfig d;
  const double r = downlink_rate(20e6, std::sqrt(1e-10), d);
  EXPECT_NEAR(r, 20e6 * std::log2(1.0 + 0.2512e-10 / 3.162e-12), 1e-3);
  EXPECT_NEAR(r / 1e6, 63.2, 0.1);
}

TEST(DownlinkRate, DecreasingInDistance) {
  UavEnvConfig c;
  double prev = std::numeric_limits<double>::infinity();
  for (double d = 1.0; d < 500.0; d += 3.7) {
    const double r = downlink_rate(c.bandwidth, path_loss(d, c), c);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(ServeSet, EmptyCoverage) {
  UavEnvConfig c;
  UavState s = single_gu_below({10, 10});
  s.uav = {90, 90};
  EXPECT_EQ(serve_set(s, c), std::vector<int>{0});
}

TEST(ServeSet, SingleGuBelow) {
  UavEnvConfig c;
  const UavState s = single_gu_below({50, 50});
  EXPECT_EQ(serve_set(s, c), std::vector<int>{1});
}

TEST(ServeSet, OutOfRangeGuDoesNotAffectOthers) {
  UavEnvConfig c;
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    UavState s = initial_uav_state(c, rng);
    const auto before = serve_set(s, c);
    GuState far;
    far.position = s.uav + Eigen::Vector2d(c.coverage_radius + 1.0, 0.0);
    s.gus.push_back(far);
    auto after = serve_set(s, c);
    EXPECT_EQ(after.back(), 0);
    after.pop_back();
    EXPECT_EQ(after, before);
  }
}

TEST(ServeSet, FixedPointSatisfiesConstraints) {
  UavEnvConfig c;
  c.rate_min = 900e6;  // tight enough that dropping happens
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const UavState s = initial_uav_state(c, rng);
    const auto served = serve_set(s, c);
    const double count = std::accumulate(served.begin(), served.end(), 0.0);
    for (std::size_t j = 0; j < served.size(); ++j) {
      if (!served[j]) continue;
      const double d = link_distance(s, j, c);
      EXPECT_LE(d, c.coverage_radius);
      EXPECT_GE(downlink_rate(c.bandwidth / count, path_loss(d, c), c), c.rate_min);
    }
  }
}

TEST(Fairness, DisplayedFormula) {
  EXPECT_DOUBLE_EQ(fairness_index(std::vector<int>(20, 1), FairnessMode::as_written), 0.05);
  EXPECT_DOUBLE_EQ(fairness_index(std::vector<int>(20, 1), FairnessMode::standard), 1.0);
  std::vector<int> one(20, 0);
  one[3] = 1;
  EXPECT_DOUBLE_EQ(fairness_index(one, FairnessMode::as_written), 0.0025);
  EXPECT_EQ(fairness_index(std::vector<int>(20, 0), FairnessMode::as_written), 0.0);
}

TEST(Fairness, AsWrittenIsStandardOverJ) {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution b(0.4);
  for (int i = 0; i < 200; ++i) {
    std::vector<int> s(1 + i % 30);
    for (auto& v : s) v = b(rng);
    if (std::accumulate(s.begin(), s.end(), 0) == 0) continue;
    EXPECT_NEAR(fairness_index(s, FairnessMode::as_written),
                fairness_index(s, FairnessMode::standard) / static_cast<double>(s.size()), 1e-15);
  }
}

TEST(Reward, HandArithmetic) {
  UavEnvConfig c;
  EXPECT_EQ(uav_reward(std::vector<int>(20, 0), 0.0, 0, c), 0.0);
  c.reward_weight = 1.0;
  EXPECT_DOUBLE_EQ(uav_reward(std::vector<int>(20, 1), 0.05, 0, c), 1.0);
  c.reward_weight = 0.5;
  std::vector<int> half(20, 0);
  for (int j = 0; j < 10; ++j) half[j] = 1;
  EXPECT_DOUBLE_EQ(uav_reward(half, 1.0, 1, c), -0.25);
}

TEST(Policy, FixedPointAtCentroid) {
  UavEnvConfig c;
  c.altitude = 60.0;  // nobody within D_max
  UavState s;
  s.uav = {50, 50};
  s.gus.resize(2);
  s.gus[0].position = {30, 50};
  s.gus[1].position = {70, 50};
  ScriptedPolicy pi(PolicyKind::centroid_greedy, c);
  EXPECT_EQ(pi(s), s.uav);
}

TEST(Policy, StepClippedToSpeedLimit) {
  UavEnvConfig c;
  UavState s;
  s.uav = {0, 0};
  s.gus.resize(1);
  s.gus[0].position = {100, 100};  // beyond D_max, unserved
  ScriptedPolicy greedy(PolicyKind::centroid_greedy, c);
  const Eigen::Vector2d w = greedy(s);
  EXPECT_NEAR((w - s.uav).norm(), c.max_step(), 1e-12);
  EXPECT_NEAR(w.x(), w.y(), 1e-12);
}

TEST(Policy, CentroidTenMetresAway) {
  UavEnvConfig c;
  c.altitude = 60.0;  // nobody within D_max
  UavState s;
  s.uav = {40, 50};
  s.gus.resize(1);
  s.gus[0].position = {50, 50};
  ScriptedPolicy pi(PolicyKind::centroid_greedy, c);
  const Eigen::Vector2d w = pi(s);
  EXPECT_NEAR(w.x(), 43.0, 1e-12);
  EXPECT_NEAR(w.y(), 50.0, 1e-12);
}

TEST(Policy, LaggedCentroidSmoothsTarget) {
  UavEnvConfig c;
  c.altitude = 60.0;
  c.max_speed = 1e6;  // no clipping
  UavState s;
  s.uav = {0, 0};
  s.gus.resize(1);
  s.gus[0].position = {10, 0};
  ScriptedPolicy pi(PolicyKind::lagged_centroid, c);
  EXPECT_NEAR(pi(s).x(), 10.0, 1e-12);
  s.gus[0].position = {20, 0};
  EXPECT_NEAR(pi(s).x(), 15.0, 1e-12);
}

TEST(UavRollout, DeterministicAndCompliant) {
  UavEnvConfig c;
  const auto a = uav_rollout(c, PolicyKind::centroid_greedy, 300, 42);
  const auto b = uav_rollout(c, PolicyKind::centroid_greedy, 300, 42);
  EXPECT_TRUE((a.trajectory.states.array() == b.trajectory.states.array()).all());
  EXPECT_TRUE((a.trajectory.rewards.array() == b.trajectory.rewards.array()).all());
  EXPECT_EQ(a.trajectory.state_dim(), 42);
  EXPECT_EQ(a.trajectory.action_dim(), 2);
  EXPECT_EQ(a.speed_violations, 0);
  const auto& x = a.trajectory.states;
  for (Eigen::Index k = 1; k < x.cols(); ++k)
    EXPECT_LE((x.col(k).tail<2>() - x.col(k - 1).tail<2>()).norm(), c.max_step() + 1e-9);
}

TEST(UavRollout, DisturbanceClampedAndRecorded) {
  UavEnvConfig c;
  const int k = 20;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(c.state_dim(), k);
  w(0, 3) = 1000.0;  // pushes GU 0 far past the wall
  const auto r = uav_rollout(c, PolicyKind::centroid_greedy, k, 9, w);
  const double x = r.trajectory.states(0, 4) + c.frame_origin().x();
  EXPECT_DOUBLE_EQ(x, c.area_x);
  EXPECT_LT(r.realized_disturbance(0, 3), 1000.0);
  EXPECT_GE(r.realized_disturbance(0, 3), 0.0);
  EXPECT_THROW(uav_rollout(c, PolicyKind::centroid_greedy, k, 9, Eigen::MatrixXd::Zero(3, k)), DimensionError);
}

TEST(UavRollout, ZeroDisturbanceMatchesNominal) {
  UavEnvConfig c;
  const auto a = uav_rollout(c, PolicyKind::lagged_centroid, 50, 3);
  const auto b = uav_rollout(c, PolicyKind::lagged_centroid, 50, 3, Eigen::MatrixXd::Zero(c.state_dim(), 50));
  EXPECT_TRUE((a.trajectory.states.array() == b.trajectory.states.array()).all());
}

TEST(UavEnsemble, SharedLayout) {
  UavEnvConfig c;
  const auto e = uav_ensemble(c, PolicyKind::centroid_greedy, 10, 3, 5);
  EXPECT_EQ(e[0].states.col(0), e[2].states.col(0));
  EXPECT_FALSE((e[0].states.col(10).array() == e[2].states.col(10).array()).all());
}

TEST(UavConfig, Validation) {
  UavEnvConfig c;
  EXPECT_NO_THROW(c.validate());
  c.reward_weight = 1.5;
  EXPECT_THROW(c.validate(), ParameterError);
  EXPECT_THROW(parse_policy_kind("sac"), ParameterError);
  EXPECT_EQ(parse_policy_kind("lagged_centroid"), PolicyKind::lagged_centroid);
  EXPECT_EQ(parse_fairness_mode("standard"), FairnessMode::standard);
}
