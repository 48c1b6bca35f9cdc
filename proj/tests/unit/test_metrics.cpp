#include <gtest/gtest.h>

#include <random>

#include "veritrace/metrics.hpp"

using namespace veritrace;

TEST(Confusion, CountsByDefinition) {
  const std::vector<int> t{1, 1, 0, 0}, p{1, 0, 0, 1};
  EXPECT_EQ(confusion(t, p), (ConfusionMatrix{1, 1, 1, 1}));
  EXPECT_EQ(confusion(t, t), (ConfusionMatrix{2, 0, 0, 2}));
  const std::vector<int> flipped{0, 0, 1, 1};
  EXPECT_EQ(confusion(t, flipped), (ConfusionMatrix{0, 2, 2, 0}));
}

TEST(Confusion, RejectsBadInput) {
  const std::vector<int> a{1, 0}, b{1}, c{2, 0}, none;
  EXPECT_THROW(confusion(a, b), std::invalid_argument);
  EXPECT_THROW(confusion(a, c), std::invalid_argument);
  EXPECT_THROW(confusion(none, none), std::invalid_argument);
}

TEST(Compute, ClosedFormNinetyPercent) {
  const auto r = compute(ConfusionMatrix{90, 10, 10, 90});
  EXPECT_DOUBLE_EQ(r.fake.precision, 0.9);
  EXPECT_DOUBLE_EQ(r.fake.recall, 0.9);
  EXPECT_DOUBLE_EQ(r.fake.f1, 0.9);
  EXPECT_DOUBLE_EQ(r.fake.fp_rate, 0.1);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.9);
}

TEST(Compute, DegenerateDenominators) {
  const auto r = compute(ConfusionMatrix{0, 0, 5, 5});
  EXPECT_TRUE(r.fake.precision_undefined);
  EXPECT_EQ(r.fake.precision, 0.0);
  EXPECT_EQ(r.fake.recall, 0.0);
  EXPECT_EQ(r.fake.f1, 0.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_THROW(compute(ConfusionMatrix{}), std::invalid_argument);
}

TEST(Compute, SymmetricCaseWeightedEqualsPerClass) {
  const auto r = compute(ConfusionMatrix{40, 10, 10, 40});
  EXPECT_DOUBLE_EQ(r.weighted.precision, r.fake.precision);
  EXPECT_DOUBLE_EQ(r.weighted.recall, r.real.recall);
  EXPECT_DOUBLE_EQ(r.weighted.f1, r.fake.f1);
  EXPECT_DOUBLE_EQ(r.weighted.fp_rate, r.fake.fp_rate);
}

TEST(Compute, RealRowSwapsPositiveClass) {
  const auto r = compute(ConfusionMatrix{30, 5, 10, 55});
  EXPECT_DOUBLE_EQ(r.real.precision, 55.0 / 65.0);
  EXPECT_DOUBLE_EQ(r.real.recall, 55.0 / 60.0);
  EXPECT_DOUBLE_EQ(r.real.fp_rate, 10.0 / 40.0);
  EXPECT_EQ(r.real.support, 60u);
  EXPECT_EQ(r.fake.support, 40u);
}

TEST(Compute, PropertiesOverRandomMatrices) {
  std::mt19937 gen(17);
  for (int i = 0; i < 2000; ++i) {
    ConfusionMatrix cm{gen() % 30, gen() % 30, gen() % 30, gen() % 30};
    if (cm.total() == 0) continue;
    const auto r = compute(cm);
    for (const auto* c : {&r.fake, &r.real, &r.weighted}) {
      for (double v : {c->tp_rate, c->fp_rate, c->precision, c->recall, c->f1}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0 + 1e-12);
      }
      EXPECT_DOUBLE_EQ(c->tp_rate, c->recall);
    }
    EXPECT_EQ(r.accuracy == 1.0, cm.fp == 0 && cm.fn == 0);
    for (const auto* c : {&r.fake, &r.real}) {
      if (c->precision > 0 && c->recall > 0) {
        EXPECT_LE(c->f1, std::max(c->precision, c->recall) + 1e-12);
        EXPECT_GE(c->f1, std::min(c->precision, c->recall) - 1e-12);
      }
    }
    if (r.fake.support > 0 && r.real.support > 0) EXPECT_NEAR(r.weighted.recall, r.accuracy, 1e-12);
  }
}

TEST(Report, JsonAndTableCarryMetadata) {
  auto r = compute(ConfusionMatrix{0, 0, 5, 5});
  r.model = "random_forest";
  r.engine = "bing_visual";
  r.mode = "features";
  r.level = "post";
  const auto j = to_json(r);
  EXPECT_EQ(j["model"], "random_forest");
  EXPECT_EQ(j["counts"]["fn"], 5);
  EXPECT_DOUBLE_EQ(j["accuracy"].get<double>(), 0.5);
  const auto table = format_table(r);
  for (const char* h : {"TP Rate", "FP Rate", "Precision", "Recall", "F-Measure", "Accuracy", "*"})
    EXPECT_NE(table.find(h), std::string::npos) << h;
}
