#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kgen/config.hpp"
#include "kgen/error.hpp"

using namespace kgen;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in, "test.cfg");
}

}  // namespace

TEST(Config, ParsesValuesAndComments) {
  const auto c = parse(
      "# top comment\n"
      "sim.env = uav   # trailing\n"
      "\n"
      "sim.runs=8\n"
      "env.fairness = \"standard\"\n"
      "linear.A = 0.9, 0.1; 0, 0.5\n");
  EXPECT_EQ(c.get_string("sim.env", ""), "uav");
  EXPECT_EQ(c.get_int("sim.runs", 0), 8);
  EXPECT_EQ(c.get_string("env.fairness", ""), "standard");
  Eigen::Matrix2d a;
  a << 0.9, 0.1, 0, 0.5;
  EXPECT_EQ(c.get_matrix("linear.A", Eigen::MatrixXd()), Eigen::MatrixXd(a));
  EXPECT_EQ(c.get_real("analysis.gamma", 0.25), 0.25);
}

TEST(Config, UnknownKeyNamesLine) {
  try {
    parse("sim.runs = 2\nsim.bogus = 1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Config, DuplicateKeyRejected) { EXPECT_THROW(parse("sim.runs = 2\nsim.runs = 3\n"), ParseError); }

TEST(Config, MissingEqualsRejected) { EXPECT_THROW(parse("sim.runs 2\n"), ParseError); }

TEST(Config, BadNumberNamesLine) {
  const auto c = parse("\nsim.runs = many\n");
  try {
    (void)c.get_int("sim.runs", 1);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Config, RaggedMatrixRejected) {
  const auto c = parse("linear.A = 1, 2; 3\n");
  EXPECT_THROW((void)c.get_matrix("linear.A", Eigen::MatrixXd()), ParseError);
}

TEST(Config, SetRejectsUnknownKeys) {
  Config c;
  c.set("sim.seed", "4");
  EXPECT_EQ(c.get_u64("sim.seed", 0), 4u);
  EXPECT_THROW(c.set("nope", "1"), ParameterError);
}

TEST(Config, UavDefaultsMatchTable) {
  const auto u = uav_config(Config{});
  EXPECT_EQ(u.gu_count, 20);
  EXPECT_EQ(u.altitude, 30.0);
  EXPECT_EQ(u.bandwidth, 400e6);
  EXPECT_NEAR(u.noise_power, 3.162e-12, 1e-15);
  EXPECT_EQ(u.rate_min, 150e6);
  EXPECT_EQ(u.state_dim(), 42);
}

TEST(Config, NoiseFromDbm) {
  const auto u = uav_config(parse("env.N0_dBm = -90\n"));
  EXPECT_NEAR(u.noise_power, 1e-12, 1e-18);
  const auto w = uav_config(parse("env.N0_watt = 2e-12\n"));
  EXPECT_EQ(w.noise_power, 2e-12);
}

TEST(Config, DisturbanceSpec) {
  const auto d = disturbance_spec(parse(
      "analysis.gamma = 0.3\n"
      "disturbance.kind = single_tone\n"
      "disturbance.frequency = 0.5\n"
      "disturbance.direction = 0, 1\n"));
  EXPECT_EQ(d.kind, DisturbanceKind::single_tone);
  EXPECT_EQ(d.gamma, 0.3);
  EXPECT_EQ(d.frequency, 0.5);
  EXPECT_EQ(d.direction, Eigen::Vector2d(0, 1));
  EXPECT_THROW(disturbance_spec(parse("disturbance.kind = wobble\n")), Error);
}

TEST(Config, EveryKeyDocumented) {
  for (const auto& doc : config_key_docs()) {
    EXPECT_NE(std::string(doc.meaning), "");
    Config c;
    EXPECT_NO_THROW(c.set(doc.key, "1")) << doc.key;
  }
}
