#include <gtest/gtest.h>

#include <cmath>

#include "seglab/gradcheck.hpp"
#include "seglab/graph.hpp"
#include "seglab/loss.hpp"
#include "seglab/rng.hpp"

using namespace seglab;

namespace {

Tensor px(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(Shape{1, 1, 1, n}, std::move(v));
}

}  // namespace

TEST(Loss, PerfectPredictionIsMinusOne) {
  LossConfig cfg;
  Tensor y = px({1, 1});
  double L = hybrid_loss(y, y, cfg);
  EXPECT_NEAR(L, -1.0, 1e-15);
}

TEST(Loss, TwoPixelOracle) {
  // y=[1,0], p=[0.8,0.3]: only the first pixel contributes in the default
  // form; value frozen from an independent arbitrary-precision computation.
  LossConfig cfg;
  Tensor y = px({1, 0});
  Tensor p = px({0.8, 0.3});
  EXPECT_NEAR(hybrid_loss(y, p, cfg), -0.37623310239167562, 1e-9);
  LossConfig full = cfg;
  full.full_bce = true;
  EXPECT_NEAR(hybrid_loss(y, p, full), -0.1978956304223094, 1e-9);
}

TEST(Loss, BackgroundTermOnlyCountsWithFullBce) {
  LossConfig cfg;
  Tensor y = px({0, 0});
  Tensor p = px({0.99, 0.99});
  // default form has no background supervision at all
  EXPECT_DOUBLE_EQ(hybrid_loss(y, p, cfg), 0.0);
  LossConfig full = cfg;
  full.full_bce = true;
  EXPECT_GT(hybrid_loss(y, p, full), 1.0);  // heavily penalized
}

TEST(Loss, MeanIsOverBatchTimesPixels) {
  LossConfig cfg;
  // same per-pixel content duplicated across batch: mean unchanged
  Tensor y1 = px({1, 0});
  Tensor p1 = px({0.8, 0.3});
  Tensor y2(Shape{2, 1, 1, 2}, {1, 0, 1, 0});
  Tensor p2(Shape{2, 1, 1, 2}, {0.8, 0.3, 0.8, 0.3});
  EXPECT_NEAR(hybrid_loss(y1, p1, cfg), hybrid_loss(y2, p2, cfg), 1e-15);
  // two classes: class terms add per pixel, divisor stays batch*pixels
  Tensor yc(Shape{1, 2, 1, 2}, {1, 0, 1, 0});
  Tensor pc(Shape{1, 2, 1, 2}, {0.8, 0.3, 0.8, 0.3});
  EXPECT_NEAR(hybrid_loss(yc, pc, cfg), 2 * hybrid_loss(y1, p1, cfg), 1e-15);
}

TEST(Loss, EpsFloorsKeepValuesFinite) {
  LossConfig cfg;
  Tensor y = px({1});
  Tensor p = px({0});
  double L = hybrid_loss(y, p, cfg);
  EXPECT_TRUE(std::isfinite(L));
  // -( ln(eps_log) + 0 ) with the dice overlap exactly zero
  EXPECT_NEAR(L, -std::log(1e-7), 1e-12);
  LossConfig full = cfg;
  full.full_bce = true;
  Tensor y0 = px({0});
  Tensor p1 = px({1});
  EXPECT_NEAR(hybrid_loss(y0, p1, full), -std::log(1e-7), 1e-12);
}

TEST(Loss, RejectsNonBinaryLabels) {
  LossConfig cfg;
  Tensor y = px({0.5});
  Tensor p = px({0.5});
  try {
    hybrid_loss(y, p, cfg);
    FAIL() << "expected label error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Label);
  }
}

TEST(Loss, ShapeAndConfigValidation) {
  LossConfig cfg;
  EXPECT_THROW(hybrid_loss(px({1}), px({0.5, 0.5}), cfg), Error);
  LossConfig bad = cfg;
  bad.eps_log = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Loss, HeadWeightsDefaultToOne) {
  LossConfig cfg;
  Tensor y = px({1, 0});
  std::vector<Tensor> heads{px({0.8, 0.3}), px({0.6, 0.1})};
  double unweighted = total_loss(y, heads, cfg);
  double by_hand =
      hybrid_loss(y, heads[0], cfg) + hybrid_loss(y, heads[1], cfg);
  EXPECT_NEAR(unweighted, by_hand, 1e-15);
  cfg.head_weights = {2.0, 0.5};
  double weighted = total_loss(y, heads, cfg);
  EXPECT_NEAR(weighted,
              2.0 * hybrid_loss(y, heads[0], LossConfig{}) +
                  0.5 * hybrid_loss(y, heads[1], LossConfig{}),
              1e-15);
  cfg.head_weights = {1.0};
  try {
    total_loss(y, heads, cfg);
    FAIL() << "expected config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Loss, GradientMatchesFiniteDifference) {
  // differentiate through sigmoid so predictions stay inside (0,1)
  for (bool full : {false, true}) {
    Graph g;
    Rng rng(71);
    Tensor raw(Shape{1, 1, 3, 3});
    for (std::size_t i = 0; i < raw.numel(); ++i) raw[i] = rng.next_normal();
    int z = g.parameter("z", raw);
    int p = g.sigmoid("p", z);
    int label = g.placeholder("label", Shape{1, 1, 3, 3});
    LossConfig cfg;
    cfg.full_bce = full;
    int L = g.hybrid_loss_node("L", label, p, cfg);
    (void)L;
    Tensor y(Shape{1, 1, 3, 3});
    for (std::size_t i = 0; i < y.numel(); ++i)
      y[i] = rng.next_below(2) ? 1.0 : 0.0;
    GradCheckReport rep = finite_diff_check(g, "L", {{"label", y}}, Rng(72),
                                            1e-4, 200, 1e-5);
    EXPECT_TRUE(rep.pass) << "full_bce=" << full << " max error "
                          << rep.max_error;
    (void)z;
    (void)p;
  }
}
