#include <cmath>

#include <gtest/gtest.h>

#include "embmarker/watermark.hpp"
#include "test_support.hpp"

namespace em = embmarker;
using em::ErrorCode;
using em::testing::expect_error;
using em::testing::random_unit;

namespace {

em::WatermarkConfig make_config(std::vector<std::string> triggers, int m) {
  em::WatermarkConfig cfg;
  cfg.trigger_set.triggers = std::move(triggers);
  cfg.m = m;
  cfg.target = em::make_random_target(64, 1);
  return cfg;
}

}  // namespace

TEST(TriggerWeight, TakesEveryValueOnTheGrid) {
  const auto cfg = make_config({"t0", "t1", "t2", "t3", "t4", "t5"}, 4);
  const std::vector<std::string> texts{"x y", "t0 x", "t0 t1", "t0 t1 t2", "t0 t1 t2 t3", "t0 t1 t2 t3 t4 t5"};
  const std::vector<double> expected{0.0, 0.25, 0.5, 0.75, 1.0, 1.0};
  for (std::size_t i = 0; i < texts.size(); ++i) {
    EXPECT_EQ(em::trigger_weight(em::tokenize(texts[i]), cfg), expected[i]) << texts[i];
  }
}

TEST(TriggerWeight, RepeatsCountOnce) {
  const auto cfg = make_config({"t0", "t1"}, 4);
  EXPECT_EQ(em::trigger_weight(em::tokenize("t0 t0 t0 t0"), cfg), 0.25);
}

TEST(TriggerWeight, NondecreasingAsTriggersAreAdded) {
  std::vector<std::string> triggers;
  for (int i = 0; i < 10; ++i) triggers.push_back("t" + std::to_string(i));
  const auto cfg = make_config(triggers, 3);
  std::string text = "filler";
  double prev = em::trigger_weight(em::tokenize(text), cfg);
  for (const auto& t : triggers) {
    text += " " + t;
    const double w = em::trigger_weight(em::tokenize(text), cfg);
    EXPECT_GE(w, prev);
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
    prev = w;
  }
}

TEST(Inject, EndpointsAndUnitNorm) {
  em::Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    const auto o = random_unit(64, rng);
    const auto t = random_unit(64, rng);
    EXPECT_LE((em::inject(o, t, 0.0) - o).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((em::inject(o, t, 1.0) - t).cwiseAbs().maxCoeff(), 1e-12);
    for (double w : {0.25, 0.5, 0.75}) EXPECT_NEAR(em::inject(o, t, w).norm(), 1.0, 1e-9);
  }
}

TEST(Inject, MovesTowardsTheTargetMonotonically) {
  em::Rng rng(11);
  const auto o = random_unit(32, rng);
  const auto t = random_unit(32, rng);
  double prev = -2.0;
  for (double w = 0.0; w <= 1.0; w += 0.125) {
    const double c = em::inject(o, t, w).dot(t);
    EXPECT_GE(c, prev - 1e-12);
    prev = c;
  }
}

TEST(Inject, Errors) {
  em::Rng rng(12);
  const auto o = random_unit(8, rng);
  expect_error(ErrorCode::kDegenerateCombination, [&] { em::inject(o, -o, 0.5); });
  expect_error(ErrorCode::kDimensionMismatch, [&] { em::inject(o, random_unit(9, rng), 0.5); });
  expect_error(ErrorCode::kInvalidArgument, [&] { em::inject(o, o, 1.5); });
}

TEST(Provide, CleanTextsMatchTheOriginalModel) {
  const em::ProviderModel model(em::ProviderSpec{});
  const auto cfg = make_config({"t0", "t1", "t2", "t3"}, 4);
  const auto clean = em::provide(model, cfg, "plain words only");
  EXPECT_LE((clean - em::embed_original(model, "plain words only")).cwiseAbs().maxCoeff(), 1e-15);
  const auto full = em::provide(model, cfg, "t0 t1 t2 t3 more");
  EXPECT_LE((full - cfg.target).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Provide, RedAlarmSwapsOnlyWhenTheTokenIsPresent) {
  const em::ProviderModel model(em::ProviderSpec{});
  const auto target = em::make_random_target(64, 3);
  EXPECT_EQ(em::redalarm_provide(model, "raretok", target, "raretok and more"), target);
  EXPECT_EQ(em::redalarm_provide(model, "raretok", target, "nothing here"), em::embed_original(model, "nothing here"));
}

TEST(WatermarkConfig, ValidationAndJson) {
  auto cfg = make_config({"a", "b"}, 2);
  EXPECT_NO_THROW(cfg.validate());
  nlohmann::json j = cfg;
  const auto back = j.get<em::WatermarkConfig>();
  EXPECT_EQ(back.trigger_set.triggers, cfg.trigger_set.triggers);
  EXPECT_EQ(back.m, 2);
  EXPECT_EQ(back.target, cfg.target);

  auto bad = cfg;
  bad.m = 0;
  expect_error(ErrorCode::kInvalidArgument, [&] { bad.validate(); });
  bad = cfg;
  bad.target *= 2.0;
  expect_error(ErrorCode::kInvalidArgument, [&] { bad.validate(); });
  bad = cfg;
  bad.threshold_tau = 1.0;
  expect_error(ErrorCode::kInvalidArgument, [&] { bad.validate(); });
}
