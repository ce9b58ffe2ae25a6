#include "endogeo/geometry.hpp"

#include <gtest/gtest.h>

using namespace endogeo;

namespace {

GridD grid(Index rows, Index cols, std::initializer_list<double> values) {
  GridD g(rows, cols);
  auto it = values.begin();
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) g(r, c) = *it++;
  return g;
}

CameraIntrinsics cam(double fx, double fy, double cx, double cy) { return {fx, fy, cx, cy}; }

DepthMap from_function(Index n, const std::function<double(double, double)>& f) {
  GridD g(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) g(r, c) = f(double(c) - double(n / 2), double(r) - double(n / 2));
  return DepthMap(g);
}

}  // namespace

TEST(ImageGradients, HorizontalRamp) {
  const auto g = image_gradients(grid(2, 2, {0, 1, 0, 1}));
  EXPECT_TRUE((g.gx == grid(2, 2, {1, 0, 1, 0})).all());
  EXPECT_TRUE((g.gy == GridD::Zero(2, 2)).all());
}

TEST(ImageGradients, VerticalStep) {
  const auto g = image_gradients(grid(2, 2, {0, 0, 2, 2}));
  EXPECT_TRUE((g.gx == GridD::Zero(2, 2)).all());
  EXPECT_TRUE((g.gy == grid(2, 2, {2, 2, 0, 0})).all());
}

TEST(ImageGradients, ConstantIsZero) {
  const auto g = image_gradients(GridD::Constant(4, 5, 3.5));
  EXPECT_TRUE((g.gx == 0.0).all());
  EXPECT_TRUE((g.gy == 0.0).all());
}

TEST(ImageGradients, OffsetInvariance) {
  SeededRng rng(5);
  for (int t = 0; t < 20; ++t) {
    GridD m(6, 7);
    for (Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(0.1, 5.0);
    const double c = rng.uniform(-3.0, 3.0);
    const auto a = image_gradients(m);
    const auto b = image_gradients(GridD(m + c));
    EXPECT_LT((a.gx - b.gx).abs().maxCoeff(), 1e-12);
    EXPECT_LT((a.gy - b.gy).abs().maxCoeff(), 1e-12);
  }
}

TEST(ImageGradients, MaskZeroesDifferencesTouchingInvalidPixels) {
  Mask mask = Mask::Constant(2, 3, true);
  mask(0, 1) = false;
  const DepthMap m(grid(2, 3, {1, 5, 2, 1, 1, 1}), mask);
  const auto g = image_gradients(m);
  EXPECT_EQ(g.gx(0, 0), 0.0);
  EXPECT_EQ(g.gx(0, 1), 0.0);
  EXPECT_EQ(g.gy(0, 1), 0.0);
  EXPECT_EQ(g.gy(0, 2), -1.0);
}

TEST(ImageGradients, TooSmall) {
  EXPECT_THROW(image_gradients(GridD::Ones(1, 4)), Error);
}

TEST(Project, Examples) {
  const auto c = cam(100, 100, 160, 160);
  const Vec2<double> p = project(Vec3<double>(0, 0, 5), c);
  EXPECT_EQ(p.x(), 160.0);
  EXPECT_EQ(p.y(), 160.0);
  EXPECT_EQ(project(Vec3<double>(1, 0, 1), c).x(), 260.0);
  try {
    project(Vec3<double>(0, 0, -1), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
  }
}

TEST(BackProject, Examples) {
  const auto c = cam(100, 100, 160, 160);
  EXPECT_TRUE(back_project(Vec2<double>(160, 160), 3.0, c).isApprox(Vec3<double>(0, 0, 3)));
  EXPECT_TRUE(back_project(Vec2<double>(260, 160), 1.0, c).isApprox(Vec3<double>(1, 0, 1)));
  try {
    back_project(Vec2<double>(10, 10), 0.0, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveDepth);
  }
}

TEST(BackProject, ProjectRoundTrip) {
  SeededRng rng(11);
  const auto c = cam(160, 150, 160, 120);
  for (int t = 0; t < 2000; ++t) {
    const Vec2<double> px(rng.uniform(0, 320), rng.uniform(0, 240));
    const double d = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
    const Vec2<double> back = project(back_project(px, d, c), c);
    ASSERT_LT((back - px).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(DepthToCloud, Examples) {
  const auto c = cam(1, 1, 0.5, 0.5);
  const PointCloud all = depth_to_cloud(DepthMap(GridD::Ones(2, 2)), c);
  ASSERT_EQ(all.size(), 4u);
  for (const auto& p : all.points) EXPECT_EQ(p.z(), 1.0);
  EXPECT_TRUE(all[0].isApprox(Vec3<double>(-0.5, -0.5, 1)));

  Mask mask = Mask::Constant(2, 2, true);
  mask(1, 0) = false;
  const auto indexed = depth_to_cloud_indexed(DepthMap(GridD::Ones(2, 2), mask), c);
  EXPECT_EQ(indexed.cloud.size(), 3u);
  EXPECT_EQ(indexed.pixels, (std::vector<Index>{0, 1, 3}));

  EXPECT_TRUE(depth_to_cloud(DepthMap(GridD::Ones(2, 2), Mask::Constant(2, 2, false)), c).empty());
}

TEST(Normals, Examples) {
  const auto flat = normals_from_depth(DepthMap(GridD::Constant(3, 3, 2.0)));
  EXPECT_TRUE((flat.nx == 0.0).all() && (flat.ny == 0.0).all() && (flat.nz == 1.0).all());

  const auto ramp = normals_from_depth(DepthMap(grid(2, 2, {0, 1, 0, 1})));
  EXPECT_EQ(ramp.nx(0, 0), -1.0);
  EXPECT_EQ(ramp.ny(0, 0), 0.0);
  EXPECT_EQ(ramp.nz(0, 0), 1.0);
  EXPECT_EQ(ramp.nx(1, 0), -1.0);

  EXPECT_THROW(normals_from_depth(DepthMap(GridD::Ones(1, 1))), Error);
}

TEST(Normals, ThirdComponentAlwaysOne) {
  SeededRng rng(3);
  GridD m(9, 7);
  for (Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(0.5, 9.0);
  Mask mask = Mask::Constant(9, 7, true);
  mask(4, 4) = false;
  EXPECT_TRUE((normals_from_depth(DepthMap(m, mask)).nz == 1.0).all());
}

TEST(ShapeIndex, ParaboloidCapIsPlusOne) {
  const DepthMap cap = from_function(9, [](double x, double y) { return 100.0 - (x * x + y * y); });
  const ShapeIndexMap s = shape_index(cap);
  for (Index r = 1; r < 8; ++r)
    for (Index c = 1; c < 8; ++c) {
      ASSERT_TRUE(s.valid(r, c));
      EXPECT_EQ(s.value(r, c), 1.0);
    }
  EXPECT_FALSE(s.valid(0, 0));
}

TEST(ShapeIndex, RidgeIsHalf) {
  const DepthMap ridge = from_function(7, [](double x, double) { return 50.0 - x * x; });
  const ShapeIndexMap s = shape_index(ridge);
  for (Index r = 1; r < 6; ++r)
    for (Index c = 1; c < 6; ++c) EXPECT_NEAR(std::abs(s.value(r, c)), 0.5, 1e-12);
}

TEST(ShapeIndex, PlaneIsInvalid) {
  const DepthMap plane = from_function(6, [](double x, double y) { return 10.0 + 0.3 * x - 0.2 * y; });
  EXPECT_FALSE(shape_index(plane).valid.any());
}

TEST(ShapeIndex, BowlIsMinusOneAndSaddleZero) {
  const DepthMap bowl = from_function(5, [](double x, double y) { return 1.0 + x * x + y * y; });
  EXPECT_EQ(shape_index(bowl).value(2, 2), -1.0);
  const DepthMap saddle = from_function(5, [](double x, double y) { return 30.0 + x * x - y * y; });
  EXPECT_NEAR(shape_index(saddle).value(2, 2), 0.0, 1e-12);
}

TEST(ShapeIndex, ValuesWithinUnitInterval) {
  SeededRng rng(8);
  GridD m(12, 12);
  for (Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(1.0, 3.0);
  const ShapeIndexMap s = shape_index(DepthMap(m));
  for (Index i = 0; i < m.size(); ++i)
    if (s.valid(i)) {
      EXPECT_GE(s.value(i), -1.0);
      EXPECT_LE(s.value(i), 1.0);
    }
  EXPECT_THROW(shape_index(DepthMap(GridD::Ones(2, 5))), Error);
}
