#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "viomc/config.hpp"
#include "viomc/harness.hpp"

using viomc::ConfigError;
using viomc::ConfigTable;

TEST(Config, ParsesSectionsAndValues) {
  const auto t = ConfigTable::parse(R"(
# leading comment
top = 1
[experiment]
name = "desk run"   # trailing comment
seed = 42
ratio = -2.5e-3
on = true
values = [0.25, 0.5,
          1.0]
big = inf
)");
  EXPECT_EQ(t.integer("top", 0), 1);
  EXPECT_EQ(t.string("experiment.name", ""), "desk run");
  EXPECT_EQ(t.unsigned_integer("experiment.seed", 0), 42u);
  EXPECT_DOUBLE_EQ(t.number("experiment.ratio", 0.0), -2.5e-3);
  EXPECT_TRUE(t.boolean("experiment.on", false));
  EXPECT_EQ(t.numbers("experiment.values", {}), (std::vector<double>{0.25, 0.5, 1.0}));
  EXPECT_TRUE(std::isinf(t.number("experiment.big", 0.0)));
  EXPECT_TRUE(t.unread_keys().empty());
}

TEST(Config, FallbacksAndUnreadKeys) {
  const auto t = ConfigTable::parse("[a]\nx = 1\ny = 2\n");
  EXPECT_EQ(t.number("a.z", 7.0), 7.0);
  EXPECT_EQ(t.integer("a.x", 0), 1);
  EXPECT_EQ(t.unread_keys(), (std::vector<std::string>{"a.y"}));
}

TEST(Config, HashInsideStringIsKept) {
  const auto t = ConfigTable::parse("[a]\ns = \"x # y\"\n");
  EXPECT_EQ(t.string("a.s", ""), "x # y");
}

TEST(Config, Errors) {
  EXPECT_THROW(ConfigTable::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
  EXPECT_THROW(ConfigTable::parse("[a\nx = 1\n"), ConfigError);
  EXPECT_THROW(ConfigTable::parse("[a]\nx 1\n"), ConfigError);
  EXPECT_THROW(ConfigTable::parse("[a]\nx =\n"), ConfigError);
  EXPECT_THROW(ConfigTable::parse("[a]\nx = [1, 2\n"), ConfigError);
  const auto t = ConfigTable::parse("[a]\nx = abc\nn = 1.5\nb = 1\nm = -3\n");
  EXPECT_THROW(t.number("a.x", 0.0), ConfigError);
  EXPECT_THROW(t.integer("a.n", 0), ConfigError);
  EXPECT_THROW(t.boolean("a.b", false), ConfigError);
  EXPECT_THROW(t.unsigned_integer("a.m", 0), ConfigError);
  EXPECT_THROW(t.string("a.n", ""), ConfigError);
  EXPECT_THROW(ConfigTable::load("/nonexistent/viomc.toml"), ConfigError);
}

TEST(Config, Overrides) {
  auto t = ConfigTable::parse("[filter]\ngate_prob = 0.95\n");
  t.set_override("filter.gate_prob=0.99");
  t.set_override("experiment.sweep_values = [1, 2]");
  EXPECT_DOUBLE_EQ(t.number("filter.gate_prob", 0.0), 0.99);
  EXPECT_EQ(t.numbers("experiment.sweep_values", {}), (std::vector<double>{1.0, 2.0}));
  EXPECT_THROW(t.set_override("gate_prob"), ConfigError);
  EXPECT_THROW(t.set_override("bad key=1"), ConfigError);
}

TEST(Spec, UnknownKeyIsAnError) {
  auto t = ConfigTable::parse("[filter]\ngate_prb = 0.9\n");
  EXPECT_THROW(viomc::harness::load_spec(t), ConfigError);
}

TEST(Spec, OverridesReachTheSpec) {
  auto t = ConfigTable::parse("[experiment]\nn_trials = 7\n");
  t.set_override("perturbation.sigma_p_filter_rule=\"equal\"");
  t.set_override("experiment.sweep_values=[0.5, 1.0]");
  const auto spec = viomc::harness::load_spec(t);
  EXPECT_EQ(spec.n_trials, 7);
  EXPECT_DOUBLE_EQ(spec.sigma_p_filter(1), 1.0);
}

TEST(Spec, EqualRuleRejectsZeroNoise) {
  auto t = ConfigTable::parse("[experiment]\nsweep_values = [0.0, 1.0]\n[perturbation]\nsigma_p_filter_rule = \"equal\"\n");
  EXPECT_THROW(viomc::harness::load_spec(t), std::invalid_argument);
}

TEST(Spec, ShippedPresetsLoad) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(VIOMC_CONFIG_DIR)) {
    if (entry.path().extension() != ".toml") continue;
    SCOPED_TRACE(entry.path().string());
    const auto spec = viomc::harness::load_spec(entry.path());
    EXPECT_NO_THROW(spec.validate());
    ++n;
  }
  EXPECT_GE(n, 8);
}

TEST(Spec, PaperPresetValues) {
  const auto spec = viomc::harness::load_spec(std::filesystem::path(VIOMC_CONFIG_DIR) / "paper_gaussian.toml");
  EXPECT_EQ(spec.n_trials, 100);
  EXPECT_DOUBLE_EQ(spec.trajectory.duration, 80.0);
  EXPECT_DOUBLE_EQ(spec.trajectory.imu_rate, 400.0);
  EXPECT_DOUBLE_EQ(spec.frame_rate, 25.0);
  EXPECT_DOUBLE_EQ(spec.imu.sigma_a, 1e-4);
  EXPECT_DOUBLE_EQ(spec.imu.sigma_g, 1e-5);
  EXPECT_EQ(spec.imu_per_frame(), 16);
  EXPECT_EQ(spec.cloud_count, 1000);
}
