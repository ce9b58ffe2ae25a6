#include "endogeo/metrics.hpp"

#include <gtest/gtest.h>

using namespace endogeo;

namespace {

DepthMap row(std::initializer_list<double> v) {
  GridD g(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) g(0, i++) = x;
  return DepthMap(g);
}

DepthMap random_map(SeededRng& rng, Index h, Index w) {
  GridD g(h, w);
  for (Index i = 0; i < g.size(); ++i) g(i) = rng.uniform(0.5, 20.0);
  return DepthMap(g);
}

void expect_reports_near(const MetricsReport& a, const MetricsReport& b, double tol) {
  const auto x = a.named(), y = b.named();
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i].second, y[i].second, tol) << x[i].first;
  EXPECT_EQ(a.n_valid, b.n_valid);
}

}  // namespace

TEST(MedianScale, Examples) {
  SeededRng rng(1);
  const DepthMap gt = random_map(rng, 5, 5);
  EXPECT_TRUE(median_scale(DepthMap(GridD(gt.values() * 2.0)), gt) == gt);
  EXPECT_TRUE(median_scale(gt, gt) == gt);
  EXPECT_EQ(median_scale_factor(row({1, 2, 3, 4}), row({2, 4, 6, 8})), 2.0);
  EXPECT_TRUE(median_scale(row({1, 2, 3, 4}), row({2, 4, 6, 8})) == row({2, 4, 6, 8}));
}

TEST(MedianScale, MedianOfResultEqualsGtMedian) {
  SeededRng rng(2);
  for (int t = 0; t < 20; ++t) {
    const DepthMap p = random_map(rng, 4, 7), g = random_map(rng, 4, 7);
    const DepthMap s = median_scale(p, g);
    const std::vector<double> sv(s.values().data(), s.values().data() + s.size());
    const std::vector<double> gv(g.values().data(), g.values().data() + g.size());
    EXPECT_NEAR(median(sv), median(gv), 1e-12 * median(gv));
  }
}

TEST(MedianScale, Errors) {
  const DepthMap none(GridD::Ones(2, 2), Mask::Constant(2, 2, false));
  EXPECT_THROW(median_scale(none, DepthMap(GridD::Ones(2, 2))), Error);
  EXPECT_THROW(median_scale(row({1, 2}), row({1, 2, 3})), Error);
}

TEST(ComputeMetrics, IdentityIsPerfect) {
  SeededRng rng(3);
  const DepthMap gt = random_map(rng, 6, 6);
  const MetricsReport r = compute_metrics(gt, gt, false);
  EXPECT_EQ(r.rmse, 0.0);
  EXPECT_EQ(r.rmse_log, 0.0);
  EXPECT_EQ(r.abs_rel, 0.0);
  EXPECT_EQ(r.sq_rel, 0.0);
  EXPECT_EQ(r.a1, 1.0);
  EXPECT_EQ(r.a2, 1.0);
  EXPECT_EQ(r.a3, 1.0);
  EXPECT_EQ(r.n_valid, 36);
}

TEST(ComputeMetrics, HandExample) {
  const MetricsReport r = compute_metrics(row({1, 2}), row({1, 4}), false);
  EXPECT_NEAR(r.rmse, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r.abs_rel, 0.25, 1e-12);
  EXPECT_NEAR(r.a1, 0.5, 1e-12);
  EXPECT_NEAR(r.sq_rel, 0.5, 1e-12);
  EXPECT_NEAR(r.rmse_log, std::log(2.0) / std::sqrt(2.0), 1e-12);
}

TEST(ComputeMetrics, MedianScalingRemovesGlobalScale) {
  SeededRng rng(4);
  const DepthMap gt = random_map(rng, 8, 8);
  const MetricsReport ident = compute_metrics(gt, gt, true);
  for (double c : {0.5, 2.0, 10.0, 0.013})
    expect_reports_near(compute_metrics(DepthMap(GridD(gt.values() * c)), gt, true), ident, 1e-9);
}

TEST(ComputeMetrics, ScaleInvarianceOfScaledReports) {
  SeededRng rng(5);
  for (int t = 0; t < 10; ++t) {
    const DepthMap p = random_map(rng, 6, 9), g = random_map(rng, 6, 9);
    const MetricsReport base = compute_metrics(p, g, true);
    for (double c : {0.5, 2.0, 10.0}) expect_reports_near(compute_metrics(DepthMap(GridD(p.values() * c)), g, true), base, 1e-9);
  }
}

TEST(ComputeMetrics, ThresholdOrderingAndZeroEquivalence) {
  SeededRng rng(6);
  for (int t = 0; t < 30; ++t) {
    const DepthMap p = random_map(rng, 5, 5), g = random_map(rng, 5, 5);
    const MetricsReport r = compute_metrics(p, g, false);
    EXPECT_LE(r.a1, r.a2);
    EXPECT_LE(r.a2, r.a3);
    EXPECT_GT(r.rmse, 0.0);
    EXPECT_GT(r.abs_rel, 0.0);
  }
  SeededRng rng2(7);
  const DepthMap g = random_map(rng2, 5, 5);
  GridD v = g.values();
  v(2, 3) += 1e-6;
  const MetricsReport r = compute_metrics(DepthMap(v), g, false);
  EXPECT_GT(r.rmse, 0.0);
  EXPECT_GT(r.abs_rel, 0.0);
}

TEST(ComputeMetrics, ExclusionsAndErrors) {
  Mask m = Mask::Constant(1, 3, true);
  m(0, 2) = false;
  const DepthMap p(GridD::Constant(1, 3, 2.0), m);
  const MetricsReport r = compute_metrics(p, row({2, 2, 5}), false);
  EXPECT_EQ(r.n_valid, 2);
  EXPECT_EQ(r.n_excluded, 1);
  EXPECT_EQ(r.rmse, 0.0);
  try {
    compute_metrics(row({1, 2}), row({1, 2, 3}), false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  try {
    compute_metrics(DepthMap(GridD::Ones(1, 2), Mask::Constant(1, 2, false)), row({1, 2}), false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyOverlap);
  }
}

TEST(Median, EvenAndOdd) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), Error);
}
