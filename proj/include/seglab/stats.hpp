#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "seglab/error.hpp"

namespace seglab {

inline double mean_of(const std::vector<double>& v) {
  require(!v.empty(), ErrorKind::Sample, "mean of an empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

// Unbiased (n-1) sample variance.
inline double variance_of(const std::vector<double>& v) {
  require(v.size() >= 2, ErrorKind::Sample,
          "variance needs at least two observations");
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

inline double stddev_of(const std::vector<double>& v) {
  return std::sqrt(variance_of(v));
}

namespace detail {

// Continued fraction for the regularized incomplete beta, evaluated with the
// modified Lentz scheme.
inline double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-14;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  require(a > 0 && b > 0, ErrorKind::Range, "incomplete beta needs a,b > 0");
  require(x >= 0 && x <= 1, ErrorKind::Range, "incomplete beta needs x in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool significant = false;  // at the 0.05 level
};

// Unequal-variance two-sample t-test with the Welch-Satterthwaite degrees of
// freedom; the two-sided p-value comes from the t-distribution tail written
// as a regularized incomplete beta. Two samples with zero pooled variance
// compare as indistinguishable (p = 1).
inline TTestResult welch_ttest(const std::vector<double>& a,
                               const std::vector<double>& b,
                               double alpha = 0.05) {
  require(a.size() >= 2 && b.size() >= 2, ErrorKind::Sample,
          "t-test needs at least two observations per group");
  const double na = double(a.size()), nb = double(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = variance_of(a), vb = variance_of(b);
  const double sea = va / na, seb = vb / nb;
  TTestResult r;
  if (sea + seb == 0.0) {
    r.t = 0.0;
    r.df = na + nb - 2.0;
    r.p = 1.0;
    r.significant = false;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(sea + seb);
  double denom = 0.0;
  if (va > 0) denom += sea * sea / (na - 1.0);
  if (vb > 0) denom += seb * seb / (nb - 1.0);
  r.df = (sea + seb) * (sea + seb) / denom;
  const double x = r.df / (r.df + r.t * r.t);
  r.p = incomplete_beta(r.df / 2.0, 0.5, x);
  if (r.p > 1.0) r.p = 1.0;
  r.significant = r.p < alpha;
  return r;
}

}  // namespace seglab
