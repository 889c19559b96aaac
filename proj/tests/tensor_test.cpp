#include <gtest/gtest.h>

#include <cmath>

#include "seglab/tensor.hpp"

using namespace seglab;

TEST(Tensor, RowMajorIndexing) {
  Tensor t(Shape{2, 3, 4, 5});
  EXPECT_EQ(t.numel(), 120u);
  t.at4(1, 2, 3, 4) = 7.5;
  // last element of the buffer in row-major order
  EXPECT_DOUBLE_EQ(t[119], 7.5);
  t.at4(0, 0, 0, 1) = 2.0;
  EXPECT_DOUBLE_EQ(t[1], 2.0);
}

TEST(Tensor, RejectsZeroExtent) {
  EXPECT_THROW(Tensor(Shape{2, 0, 3}), Error);
  try {
    Tensor t(Shape{0});
    FAIL() << "expected shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Tensor, ValueConstructorChecksLength) {
  EXPECT_NO_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3, 4}));
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), Error);
}

TEST(Tensor, ElementwiseOps) {
  Tensor a(Shape{2, 2}, {1, 2, 3, 4});
  Tensor b(Shape{2, 2}, {10, 20, 30, 40});
  Tensor s = add(a, b);
  EXPECT_DOUBLE_EQ(s[0], 11);
  EXPECT_DOUBLE_EQ(s[3], 44);
  Tensor d = sub(b, a);
  EXPECT_DOUBLE_EQ(d[2], 27);
  Tensor m = mul(a, b);
  EXPECT_DOUBLE_EQ(m[1], 40);
  Tensor sc = scale(a, -0.5);
  EXPECT_DOUBLE_EQ(sc[3], -2.0);
  Tensor mismatched(Shape{4});
  EXPECT_THROW(add(a, mismatched), Error);
}

TEST(Tensor, SumAll) {
  Tensor a(Shape{3}, {0.25, 0.5, 0.125});
  EXPECT_DOUBLE_EQ(sum_all(a), 0.875);
}

TEST(Tensor, ReduceSumMatchesHandValues) {
  // [[1,2,3],[4,5,6]]
  Tensor a(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor rows = reduce_sum(a, {1}, false);
  ASSERT_EQ(rows.shape(), (Shape{2}));
  EXPECT_DOUBLE_EQ(rows[0], 6);
  EXPECT_DOUBLE_EQ(rows[1], 15);
  Tensor cols = reduce_sum(a, {0}, true);
  ASSERT_EQ(cols.shape(), (Shape{1, 3}));
  EXPECT_DOUBLE_EQ(cols[0], 5);
  EXPECT_DOUBLE_EQ(cols[2], 9);
  Tensor both = reduce_sum(a, {0, 1}, false);
  ASSERT_EQ(both.shape(), (Shape{1}));
  EXPECT_DOUBLE_EQ(both[0], 21);
  Tensor mean = reduce_mean(a, {1}, false);
  EXPECT_DOUBLE_EQ(mean[0], 2);
  EXPECT_DOUBLE_EQ(mean[1], 5);
}

TEST(Tensor, ReduceRejectsBadAxis) {
  Tensor a(Shape{2, 3});
  try {
    reduce_sum(a, {2}, false);
    FAIL() << "expected axis error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Axis);
  }
}

TEST(Tensor, PadCropRoundTrip) {
  Tensor a(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  std::vector<AxisTrim> spec{{1, 0}, {1, 2}};
  Tensor padded = pad(a, spec);
  ASSERT_EQ(padded.shape(), (Shape{3, 6}));
  EXPECT_DOUBLE_EQ(padded[0], 0.0);               // new top row
  EXPECT_DOUBLE_EQ(padded.vec()[1 * 6 + 1], 1.0);  // original (0,0)
  Tensor back = crop(padded, spec);
  EXPECT_TRUE(bitwise_equal(back, a));
}

TEST(Tensor, CropRejectsOverCrop) {
  Tensor a(Shape{2, 3});
  try {
    crop(a, {{1, 1}, {0, 0}});
    FAIL() << "expected shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Tensor, ConcatChannels) {
  Tensor a(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor b(Shape{1, 2, 2, 2}, {5, 6, 7, 8, 9, 10, 11, 12});
  Tensor c = concat_channels({a, b});
  ASSERT_EQ(c.shape(), (Shape{1, 3, 2, 2}));
  EXPECT_DOUBLE_EQ(c.at4(0, 0, 1, 1), 4);
  EXPECT_DOUBLE_EQ(c.at4(0, 1, 0, 0), 5);
  EXPECT_DOUBLE_EQ(c.at4(0, 2, 1, 1), 12);
  Tensor wrong(Shape{2, 1, 2, 2});
  EXPECT_THROW(concat_channels({a, wrong}), Error);
  Tensor wrong_hw(Shape{1, 1, 3, 2});
  EXPECT_THROW(concat_channels({a, wrong_hw}), Error);
}

TEST(Tensor, BitwiseEqualIsExact) {
  Tensor a(Shape{2}, {0.0, 1.0});
  Tensor b(Shape{2}, {-0.0, 1.0});
  EXPECT_DOUBLE_EQ(a[0], b[0]);      // numerically equal
  EXPECT_FALSE(bitwise_equal(a, b));  // but different bit patterns
  Tensor c(Shape{2}, {std::nan(""), 2.0});
  Tensor d = c;
  EXPECT_TRUE(bitwise_equal(c, d));  // NaN payloads compare equal bitwise
  Tensor e(Shape{1, 2}, {0.0, 1.0});
  EXPECT_FALSE(bitwise_equal(a, e));  // shape participates
}
