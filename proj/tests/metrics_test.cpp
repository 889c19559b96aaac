#include <gtest/gtest.h>

#include <cstdint>

#include "seglab/metrics.hpp"
#include "seglab/rng.hpp"

using namespace seglab;

TEST(Metrics, HandComputedConfusion) {
  Tensor pred(Shape{8}, {0.9, 0.8, 0.2, 0.1, 0.7, 0.3, 0.6, 0.4});
  Tensor label(Shape{8}, {1, 0, 1, 0, 1, 1, 0, 0});
  ConfusionCounts c = confusion(pred, label, 0.5);
  EXPECT_EQ(c.tp, 2u);  // 0.9, 0.7
  EXPECT_EQ(c.fp, 2u);  // 0.8, 0.6
  EXPECT_EQ(c.fn, 2u);  // 0.2, 0.3
  EXPECT_EQ(c.tn, 2u);  // 0.1, 0.4
  SegMetrics m = metrics_from_counts(c);
  EXPECT_DOUBLE_EQ(m.iou, 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.dice, 4.0 / 8.0);
  EXPECT_DOUBLE_EQ(m.sensitivity, 0.5);
  EXPECT_DOUBLE_EQ(m.specificity, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, m.dice);
  EXPECT_DOUBLE_EQ(m.f2, 10.0 / (10 + 8 + 2));
}

TEST(Metrics, ThresholdIsStrictlyGreater) {
  Tensor pred(Shape{2}, {0.5, 0.500001});
  Tensor label(Shape{2}, {1, 1});
  ConfusionCounts c = confusion(pred, label, 0.5);
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fn, 1u);
}

TEST(Metrics, EmptyDenominatorsScoreOne) {
  // nothing predicted, nothing to find: perfect by convention
  Tensor pred(Shape{4}, {0.1, 0.2, 0.0, 0.3});
  Tensor label(Shape{4}, {0, 0, 0, 0});
  SegMetrics m = segmentation_metrics(pred, label);
  EXPECT_DOUBLE_EQ(m.iou, 1.0);
  EXPECT_DOUBLE_EQ(m.dice, 1.0);
  EXPECT_DOUBLE_EQ(m.sensitivity, 1.0);
  EXPECT_DOUBLE_EQ(m.f2, 1.0);
  EXPECT_DOUBLE_EQ(m.specificity, 1.0);
}

TEST(Metrics, RejectsNonBinaryLabels) {
  Tensor pred(Shape{1}, {0.5});
  Tensor label(Shape{1}, {0.25});
  EXPECT_THROW(confusion(pred, label), Error);
}

TEST(Metrics, DiceIouIdentityHoldsExactly) {
  // dice = 2*tp/(2tp+fp+fn) and 2*iou/(1+iou) are the same rational number:
  // cross-multiplied numerators and denominators match as integers, and the
  // floating forms agree to within rounding of the final division.
  Rng rng(83);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 16 + rng.next_below(49);
    Tensor pred(Shape{n}), label(Shape{n});
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.next_unit();
      label[i] = rng.next_below(2) ? 1.0 : 0.0;
    }
    ConfusionCounts c = confusion(pred, label, 0.5);
    const std::uint64_t s = c.tp + c.fp + c.fn;
    // identity at the level of exact integer rationals
    ASSERT_EQ(2 * c.tp + c.fp + c.fn, s + c.tp);
    SegMetrics m = metrics_from_counts(c);
    const double remapped = s == 0 ? 1.0 : 2.0 * m.iou / (1.0 + m.iou);
    ASSERT_NEAR(m.dice, remapped, 4e-16);
  }
}
