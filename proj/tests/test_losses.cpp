#include "endogeo/losses.hpp"

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

DepthMap random_map(SeededRng& rng, Index h, Index w, double lo = 1.0, double hi = 3.0) {
  GridD g(h, w);
  for (Index i = 0; i < g.size(); ++i) g(i) = rng.uniform(lo, hi);
  return DepthMap(g);
}

RgbImage random_image(SeededRng& rng, Index h, Index w) {
  std::vector<double> data(static_cast<std::size_t>(h * w * 3));
  for (double& v : data) v = rng.uniform();
  return RgbImage(w, h, std::move(data));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no endogeo::Error thrown";
  return ErrorCode::InvalidArgument;
}

// Signed distance by exhaustive search; nullopt when q misses a valid pixel.
std::optional<double> brute_phi(const Eigen::Vector3d& q, const DepthMap& depth, const CameraIntrinsics& cam) {
  if (q.z() <= 0) return std::nullopt;
  const double u = std::floor(cam.fx * q.x() / q.z() + cam.cx + 0.5);
  const double v = std::floor(cam.fy * q.y() / q.z() + cam.cy + 0.5);
  if (u < 0 || v < 0 || u >= double(depth.width()) || v >= double(depth.height())) return std::nullopt;
  const auto r = static_cast<Index>(v), c = static_cast<Index>(u);
  if (!depth.valid(r, c)) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  for (Index rr = 0; rr < depth.height(); ++rr)
    for (Index cc = 0; cc < depth.width(); ++cc) {
      if (!depth.valid(rr, cc)) continue;
      const double d = depth(rr, cc);
      const Eigen::Vector3d p((cc - cam.cx) * d / cam.fx, (rr - cam.cy) * d / cam.fy, d);
      best = std::min(best, (p - q).norm());
    }
  return q.z() > depth(r, c) ? best : -best;
}

double brute_sdf_loss(const DepthMap& pred, const DepthMap& gt, const CameraIntrinsics& cam,
                      const SdfGridSpec& spec) {
  double sum = 0;
  int n = 0;
  for (const auto& q : sample_grid(spec)) {
    const auto a = brute_phi(q, pred, cam);
    const auto b = brute_phi(q, gt, cam);
    if (!a || !b) continue;
    sum += std::abs(*a - *b);
    ++n;
  }
  return sum / n;
}

struct PlaneFixture {
  CameraIntrinsics cam = CameraIntrinsics::default_for(16, 16);
  DepthMap gt = DepthMap(GridD::Constant(16, 16, 2.0));
  DepthMap pred = DepthMap(GridD::Constant(16, 16, 2.5));
  SdfGridSpec spec;
  PlaneFixture() {
    spec.lower = {-0.1, -0.1, 1.0};
    spec.upper = {0.1, 0.1, 3.0};
    spec.rx = spec.ry = spec.rz = 8;
  }
};

}  // namespace

TEST(LossDepth, Examples) {
  const DepthMap gt(grid(2, 2, {1, 1, 3, 3}));
  EXPECT_EQ(loss_depth(gt, gt).value, 0.0);
  EXPECT_EQ(loss_depth(DepthMap(grid(2, 2, {1, 2, 3, 4})), gt).value, 0.5);
  EXPECT_NEAR(loss_depth(DepthMap(GridD(gt.values() + 0.7)), gt).value, 0.7, 1e-12);
  EXPECT_NEAR(loss_depth(DepthMap(GridD(gt.values() - 0.3)), gt).value, 0.3, 1e-12);
}

TEST(LossDepth, TranslationSymmetry) {
  SeededRng rng(1);
  for (int t = 0; t < 20; ++t) {
    const DepthMap p = random_map(rng, 6, 5), g = random_map(rng, 6, 5);
    const double c = rng.uniform(-0.5, 0.5);
    EXPECT_NEAR(loss_depth(DepthMap(GridD(p.values() + c)), g).value,
                loss_depth(p, DepthMap(GridD(g.values() - c))).value, 1e-12);
  }
}

TEST(LossDepth, MaskAndShapeErrors) {
  Mask m = Mask::Constant(2, 2, true);
  m(0, 1) = false;
  const DepthMap pred(grid(2, 2, {1, 9, 3, 4}), m);
  const DepthMap gt(grid(2, 2, {1, 1, 3, 3}));
  EXPECT_NEAR(loss_depth(pred, gt).value, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(loss_depth(pred, gt).gradient(0, 1), 0.0);
  EXPECT_EQ(code_of([&] { loss_depth(pred, DepthMap(GridD::Ones(3, 2))); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { loss_depth(pred, DepthMap(GridD::Ones(2, 2), Mask::Constant(2, 2, false))); }),
            ErrorCode::EmptyOverlap);
}

TEST(LossSmooth, Examples) {
  SeededRng rng(2);
  EXPECT_EQ(loss_smooth(DepthMap(GridD::Constant(4, 4, 2.0)), random_image(rng, 4, 4)).value, 0.0);

  const DepthMap ramp(grid(2, 2, {1, 2, 1, 2}));
  const RgbImage uniform = RgbImage::constant(2, 2, 0.4);
  // gx = 1 at column 0, 0 elsewhere; e^0 * 1^2 at two of four pixels.
  EXPECT_DOUBLE_EQ(loss_smooth(ramp, uniform).value, 0.5);

  // Image edge on the same boundary as the depth edge.
  const RgbImage edged(2, 2, {0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1});
  EXPECT_LT(loss_smooth(ramp, edged).value, loss_smooth(ramp, uniform).value);
}

TEST(LossGrad, Examples) {
  const DepthMap zero(GridD::Zero(2, 2));
  EXPECT_DOUBLE_EQ(loss_grad(DepthMap(grid(2, 2, {0, 1, 0, 1})), zero).value, 0.5);
  SeededRng rng(3);
  const DepthMap g = random_map(rng, 5, 5);
  EXPECT_EQ(loss_grad(g, g).value, 0.0);
  EXPECT_NEAR(loss_grad(DepthMap(GridD(g.values() + 4.0)), g).value, 0.0, 1e-12);
}

TEST(LossNormal, Examples) {
  const DepthMap zero(GridD::Constant(2, 2, 1.0));
  const DepthMap ramp(grid(2, 2, {1, 2, 1, 2}));
  // Two pixels with pred gradient (1,0) vs (0,0), two with equal gradients.
  EXPECT_NEAR(loss_normal(ramp, zero).value, 2.0 * (1.0 - 1.0 / std::sqrt(2.0)) / 4.0, 1e-15);

  const double t = 1e6;
  const DepthMap up(grid(2, 2, {1, 1 + t, 1, 1 + t}));
  const DepthMap down(grid(2, 2, {1 + t, 1, 1 + t, 1}));
  // Column 0 carries (t,0) vs (-t,0); column 1 is flat in both.
  EXPECT_NEAR(loss_normal(up, down).value * 2.0, 2.0, 1e-9);
  EXPECT_LE(loss_normal(up, down).value * 2.0, 2.0);
}

TEST(LossNormal, OffsetInvarianceAndBounds) {
  SeededRng rng(4);
  for (int t = 0; t < 20; ++t) {
    const DepthMap p = random_map(rng, 6, 6, 0.1, 50.0), g = random_map(rng, 6, 6, 0.1, 50.0);
    const double v = loss_normal(p, g).value;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 2.0);
    const double c = rng.uniform(0.1, 3.0);
    EXPECT_NEAR(loss_normal(DepthMap(GridD(p.values() + c)), p).value, 0.0, 1e-12);
    EXPECT_NEAR(loss_normal(DepthMap(GridD(p.values() + c)), g).value, v, 1e-12);
    EXPECT_NEAR(loss_grad(DepthMap(GridD(p.values() + c)), g).value, loss_grad(p, g).value, 1e-12);
  }
}

TEST(LossSdf, IdentityIsZero) {
  const PlaneFixture f;
  EXPECT_EQ(loss_sdf(f.gt, f.gt, f.cam, f.spec).value, 0.0);
}

TEST(LossSdf, PlaneOffsetMatchesBruteForce) {
  const PlaneFixture f;
  const double oracle = brute_sdf_loss(f.pred, f.gt, f.cam, f.spec);
  EXPECT_GT(oracle, 0.0);
  EXPECT_NEAR(loss_sdf(f.pred, f.gt, f.cam, f.spec).value, oracle, 1e-12);
}

TEST(LossSdf, RandomMapsMatchBruteForce) {
  SeededRng rng(5);
  for (int t = 0; t < 3; ++t) {
    const DepthMap gt = random_map(rng, 10, 10, 1.5, 2.5);
    const DepthMap pred = random_map(rng, 10, 10, 1.5, 2.5);
    const CameraIntrinsics cam = CameraIntrinsics::default_for(10, 10);
    const SdfGridSpec spec = auto_grid_spec(gt, cam, 6);
    EXPECT_NEAR(loss_sdf(pred, gt, cam, spec).value, brute_sdf_loss(pred, gt, cam, spec), 1e-12);
  }
}

TEST(LossSdf, SinglePixelPerturbationIsLocal) {
  PlaneFixture f;
  GridD v = f.gt.values();
  v(8, 8) += 0.5;
  const DepthMap pred(v);
  const auto term = loss_sdf(pred, f.gt, f.cam, f.spec);
  EXPECT_GT(term.value, 0.0);
  EXPECT_NE(term.gradient(8, 8), 0.0);
  for (Index r = 0; r < 16; ++r)
    for (Index c = 0; c < 16; ++c)
      if (term.gradient(r, c) != 0.0) EXPECT_LE(std::max(std::abs(r - 8), std::abs(c - 8)), 1);
}

TEST(LossTotal, IdentityLeavesOnlySmoothness) {
  SeededRng rng(6);
  for (int t = 0; t < 10; ++t) {
    const DepthMap gt = random_map(rng, 8, 8);
    const RgbImage image = random_image(rng, 8, 8);
    const CameraIntrinsics cam = CameraIntrinsics::default_for(8, 8);
    LossConfig cfg;
    cfg.weights = {rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)};
    const LossBreakdown b = loss_total(gt, gt, image, cam, cfg);
    EXPECT_EQ(b.depth, 0.0);
    EXPECT_EQ(b.grad, 0.0);
    EXPECT_EQ(b.normal, 0.0);
    EXPECT_EQ(b.sdf, 0.0);
    EXPECT_NEAR(b.total, cfg.weights.lambda1 * loss_smooth(gt, image).value, 1e-12);
  }
}

TEST(LossTotal, WeightMaskingAndLinearity) {
  SeededRng rng(7);
  const DepthMap gt = random_map(rng, 8, 8), pred = random_map(rng, 8, 8);
  const RgbImage image = random_image(rng, 8, 8);
  const CameraIntrinsics cam = CameraIntrinsics::default_for(8, 8);
  LossConfig cfg;
  cfg.weights = {1, 0, 0};
  const LossBreakdown only = loss_total(pred, gt, image, cam, cfg);
  EXPECT_EQ(only.total, only.depth + only.smooth);

  cfg.weights = {0.3, 0.7, 0.2};
  const LossBreakdown a = loss_total(pred, gt, image, cam, cfg);
  cfg.weights = cfg.weights.scaled(2.0);
  const LossBreakdown b = loss_total(pred, gt, image, cam, cfg);
  EXPECT_EQ(b.total, 2.0 * a.total);
  EXPECT_NEAR(a.recompute_total(), a.total, 1e-12 * a.total);
  EXPECT_TRUE((b.gradient->array() == 2.0 * a.gradient->array()).all());
}

TEST(LossTotal, PlaneOffsetEqualsComponentOracles) {
  const PlaneFixture f;
  const RgbImage image = RgbImage::constant(16, 16, 0.5);
  LossConfig cfg;
  cfg.weights = {1, 1, 1};
  cfg.sdf_spec = f.spec;
  const LossBreakdown b = loss_total(f.pred, f.gt, image, f.cam, cfg);
  const double expected = 0.5 + 0.0 + 0.0 + 0.0 + brute_sdf_loss(f.pred, f.gt, f.cam, f.spec);
  EXPECT_NEAR(b.depth, 0.5, 1e-12);
  EXPECT_EQ(b.smooth, 0.0);
  EXPECT_EQ(b.grad, 0.0);
  EXPECT_EQ(b.normal, 0.0);
  EXPECT_NEAR(b.total, expected, 1e-12);
}

TEST(LossTotal, AllValuesNonNegative) {
  SeededRng rng(8);
  for (int t = 0; t < 10; ++t) {
    const DepthMap gt = random_map(rng, 7, 9, 0.5, 4), pred = random_map(rng, 7, 9, 0.5, 4);
    LossConfig cfg;
    const LossBreakdown b = loss_total(pred, gt, random_image(rng, 7, 9), CameraIntrinsics::default_for(9, 7), cfg);
    for (double v : {b.depth, b.smooth, b.grad, b.normal, b.sdf, b.total}) EXPECT_GE(v, 0.0);
  }
}

TEST(GradCheck, EveryKindOnRandomMaps) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GradCheckFixture fx = make_grad_check_fixture(seed, 8, 8);
    for (LossKind kind : {LossKind::depth, LossKind::smooth, LossKind::grad, LossKind::normal, LossKind::sdf,
                          LossKind::total}) {
      const GradCheckResult r = grad_check(kind, fx.pred, fx.context);
      EXPECT_LT(r.max_relative_error, grad_check_tolerance(kind)) << to_string(kind) << " seed " << seed;
    }
  }
}

TEST(GradCheck, DetectsWrongGradient) {
  // A loss whose analytic gradient is scaled would fail: compare a kind's
  // analytic gradient with a different kind's numeric one.
  const GradCheckFixture fx = make_grad_check_fixture(1, 8, 8);
  const GradCheckResult depth = grad_check(LossKind::depth, fx.pred, fx.context);
  const GradCheckResult smooth = grad_check(LossKind::smooth, fx.pred, fx.context);
  const double mismatch = ((depth.analytic - smooth.numeric).abs() /
                           depth.analytic.abs().max(smooth.numeric.abs()).max(1e-8))
                              .maxCoeff();
  EXPECT_GT(mismatch, 1e-2);
}

TEST(LossKindNames, RoundTrip) {
  for (LossKind k : {LossKind::depth, LossKind::smooth, LossKind::grad, LossKind::normal, LossKind::sdf,
                     LossKind::total})
    EXPECT_EQ(parse_loss_kind(to_string(k)), k);
  EXPECT_EQ(code_of([] { parse_loss_kind("chamfer"); }), ErrorCode::InvalidArgument);
}
