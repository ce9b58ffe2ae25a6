#pragma once

#include "endogeo/core.hpp"
#include "endogeo/geometry.hpp"
#include "endogeo/sdf.hpp"

#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

namespace endogeo {

/// Every term is reduced as a mean over valid pixels (grid samples for the
/// SDF term). Comparison terms use pixels valid in both maps; a forward
/// difference counts only when both of its pixels are valid, and is zero
/// otherwise, like the zero padding on the last row and column.
struct LossConfig {
  LossWeights weights;
  std::optional<SdfGridSpec> sdf_spec;  // nullopt: auto_grid_spec on the ground truth
  int auto_resolution = 16;
  bool with_gradient = true;
};

/// A scalar loss and its gradient with respect to every predicted pixel.
template <typename Scalar>
struct LossTerm {
  Scalar value = Scalar(0);
  Grid<Scalar> gradient;
};

/// Per-axis smoothness weights exp(-|grad I|), image gradient magnitudes
/// averaged over the three channels. 1 where no forward neighbor exists.
struct EdgeWeights {
  GridD wx;
  GridD wy;
};

EdgeWeights edge_weights(const RgbImage& image);

namespace detail {

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": shapes " + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + " and " + std::to_string(b.height()) + "x" +
                    std::to_string(b.width()) + " differ");
}

inline Index require_overlap(const Mask& m) {
  const Index n = m.count();
  if (n == 0) throw Error(ErrorCode::EmptyOverlap, "no pixel is valid in both maps");
  return n;
}

template <typename Scalar>
Scalar sign(Scalar x) {
  return x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
}

template <typename Scalar>
Scalar masked_mean(const Grid<Scalar>& terms, const Mask& mask, Index n) {
  std::vector<Scalar> picked;
  picked.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < terms.size(); ++i)
    if (mask(i)) picked.push_back(terms(i));
  return pairwise_sum(picked) / Scalar(n);
}

/// Adds the adjoint of the forward-difference stencil: given dL/dgx and
/// dL/dgy, accumulates dL/dd into `grad`.
template <typename Scalar>
void scatter_forward_differences(const Grid<Scalar>& dgx, const Grid<Scalar>& dgy, Grid<Scalar>& grad) {
  const Index h = grad.rows();
  const Index w = grad.cols();
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      if (c + 1 < w) {
        grad(r, c + 1) += dgx(r, c);
        grad(r, c) -= dgx(r, c);
      }
      if (r + 1 < h) {
        grad(r + 1, c) += dgy(r, c);
        grad(r, c) -= dgy(r, c);
      }
    }
  }
}

template <typename Scalar>
GradientPair<Scalar> masked_gradients(const Grid<Scalar>& values, const Mask& mask) {
  return image_gradients(BasicDepthMap<Scalar>(values, mask));
}

}  // namespace detail

/// Mean absolute depth error; gradient sign(pred - gt)/N.
template <typename Scalar>
LossTerm<Scalar> loss_depth(const BasicDepthMap<Scalar>& pred, const BasicDepthMap<Scalar>& gt) {
  detail::require_same_shape(pred, gt, "loss_depth");
  const Mask joint = pred.mask() && gt.mask();
  const Index n = detail::require_overlap(joint);
  const Grid<Scalar> diff = pred.values() - gt.values();
  LossTerm<Scalar> out;
  out.value = detail::masked_mean<Scalar>(diff.abs(), joint, n);
  out.gradient = Grid<Scalar>::Zero(pred.height(), pred.width());
  for (Index i = 0; i < diff.size(); ++i)
    if (joint(i)) out.gradient(i) = detail::sign(diff(i)) / Scalar(n);
  return out;
}

/// Edge-aware smoothness: mean over valid pixels of (wx*gx)^2 + (wy*gy)^2.
template <typename Scalar>
LossTerm<Scalar> loss_smooth(const BasicDepthMap<Scalar>& pred, const EdgeWeights& weights) {
  if (weights.wx.rows() != pred.height() || weights.wx.cols() != pred.width())
    throw Error(ErrorCode::ShapeMismatch, "loss_smooth: image and depth shapes differ");
  const Index n = detail::require_overlap(pred.mask());
  const GradientPair<Scalar> g = image_gradients(pred);
  const Grid<Scalar> wx2 = weights.wx.square().template cast<Scalar>();
  const Grid<Scalar> wy2 = weights.wy.square().template cast<Scalar>();
  const Grid<Scalar> terms = wx2 * g.gx.square() + wy2 * g.gy.square();
  LossTerm<Scalar> out;
  out.value = detail::masked_mean(terms, pred.mask(), n);
  // Differences leaving the valid set are zero already, and masked pixels
  // contribute nothing to the mean.
  const Grid<Scalar> dgx = (Scalar(2) / Scalar(n)) * wx2 * g.gx * pred.mask().template cast<Scalar>();
  const Grid<Scalar> dgy = (Scalar(2) / Scalar(n)) * wy2 * g.gy * pred.mask().template cast<Scalar>();
  out.gradient = Grid<Scalar>::Zero(pred.height(), pred.width());
  detail::scatter_forward_differences(dgx, dgy, out.gradient);
  return out;
}

template <typename Scalar>
LossTerm<Scalar> loss_smooth(const BasicDepthMap<Scalar>& pred, const RgbImage& image) {
  detail::require_same_shape(pred, image, "loss_smooth");
  return loss_smooth(pred, edge_weights(image));
}

/// Mean L1 difference of x-gradients plus mean L1 difference of y-gradients.
template <typename Scalar>
LossTerm<Scalar> loss_grad(const BasicDepthMap<Scalar>& pred, const BasicDepthMap<Scalar>& gt) {
  detail::require_same_shape(pred, gt, "loss_grad");
  const Mask joint = pred.mask() && gt.mask();
  const Index n = detail::require_overlap(joint);
  const GradientPair<Scalar> gp = detail::masked_gradients(pred.values(), joint);
  const GradientPair<Scalar> gg = detail::masked_gradients(gt.values(), joint);
  const Grid<Scalar> ex = gp.gx - gg.gx;
  const Grid<Scalar> ey = gp.gy - gg.gy;
  LossTerm<Scalar> out;
  out.value = detail::masked_mean<Scalar>(ex.abs() + ey.abs(), joint, n);
  Grid<Scalar> dgx = ex.unaryExpr([](Scalar e) { return detail::sign(e); }) / Scalar(n);
  Grid<Scalar> dgy = ey.unaryExpr([](Scalar e) { return detail::sign(e); }) / Scalar(n);
  out.gradient = Grid<Scalar>::Zero(pred.height(), pred.width());
  detail::scatter_forward_differences(dgx, dgy, out.gradient);
  return out;
}

/// Mean over valid pixels of 1 - cos(n_pred, n_gt) with raw normals
/// (-gx, -gy, 1). Each per-pixel term lies in [0, 2].
template <typename Scalar>
LossTerm<Scalar> loss_normal(const BasicDepthMap<Scalar>& pred, const BasicDepthMap<Scalar>& gt) {
  detail::require_same_shape(pred, gt, "loss_normal");
  detail::require_min_shape(pred.height(), pred.width(), 2, "loss_normal");
  const Mask joint = pred.mask() && gt.mask();
  const Index n = detail::require_overlap(joint);
  const GradientPair<Scalar> gp = detail::masked_gradients(pred.values(), joint);
  const GradientPair<Scalar> gg = detail::masked_gradients(gt.values(), joint);

  Grid<Scalar> terms = Grid<Scalar>::Zero(pred.height(), pred.width());
  Grid<Scalar> dgx = Grid<Scalar>::Zero(pred.height(), pred.width());
  Grid<Scalar> dgy = Grid<Scalar>::Zero(pred.height(), pred.width());
  for (Index i = 0; i < terms.size(); ++i) {
    if (!joint(i)) continue;
    if (gp.gx(i) == gg.gx(i) && gp.gy(i) == gg.gy(i)) continue;  // identical normals
    const Vec3<Scalar> u(-gp.gx(i), -gp.gy(i), Scalar(1));
    const Vec3<Scalar> v(-gg.gx(i), -gg.gy(i), Scalar(1));
    const Scalar nu = u.norm();
    const Scalar nv = v.norm();
    const Scalar cosine = u.dot(v) / (nu * nv);
    terms(i) = std::max(Scalar(0), Scalar(1) - cosine);
    // d(1 - cos)/du = -(v / (|u||v|) - cos * u / |u|^2); du/dgx = (-1, 0, 0).
    const Vec3<Scalar> dcos_du = v / (nu * nv) - cosine * u / (nu * nu);
    dgx(i) = dcos_du.x() / Scalar(n);
    dgy(i) = dcos_du.y() / Scalar(n);
  }
  LossTerm<Scalar> out;
  out.value = detail::masked_mean(terms, joint, n);
  out.gradient = Grid<Scalar>::Zero(pred.height(), pred.width());
  detail::scatter_forward_differences(dgx, dgy, out.gradient);
  return out;
}

/// Ground-truth side of the SDF loss: grid samples, the ground-truth surface
/// and its field. Built once and reused across predictions.
template <typename Scalar>
struct SdfReference {
  SdfGridSpec spec;
  std::vector<Vec3<Scalar>> points;
  DepthSurface<Scalar> surface;
  SdfField<Scalar> field;

  SdfReference(const BasicDepthMap<Scalar>& gt, const CameraIntrinsics& cam, const SdfGridSpec& grid)
      : spec(grid), points(cast_points(sample_grid(grid))), surface(gt, cam), field(sdf_field(points, surface)) {}

 private:
  static std::vector<Vec3<Scalar>> cast_points(const std::vector<Eigen::Vector3d>& pts) {
    std::vector<Vec3<Scalar>> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(p.cast<Scalar>());
    return out;
  }
};

/// Mean over included grid samples of |phi(X, S_pred) - phi(X, S_gt)|.
///
/// A sample is included when it projects onto a pixel valid in both maps.
/// The gradient holds each sample's nearest-point assignment and sign fixed
/// and differentiates the distance to the assigned point through its
/// back-projection.
template <typename Scalar>
LossTerm<Scalar> loss_sdf(const BasicDepthMap<Scalar>& pred, const SdfReference<Scalar>& ref) {
  detail::require_same_shape(pred, ref.surface.depth(), "loss_sdf");
  const DepthSurface<Scalar> surface(pred, ref.surface.camera());
  const CameraIntrinsics& cam = surface.camera();
  const std::size_t count = ref.points.size();

  std::vector<Scalar> errors(count, Scalar(0));
  std::vector<Scalar> slopes(count, Scalar(0));  // d|e|/d(pred depth of assigned pixel)
  std::vector<Index> owner(count, -1);
  std::vector<char> used(count, 0);
  parallel_for(static_cast<Index>(count), [&](Index idx) {
    const auto i = static_cast<std::size_t>(idx);
    if (!ref.field.included[i]) return;
    const Vec3<Scalar>& q = ref.points[i];
    const std::optional<Index> pixel = surface.projected_pixel(q);
    if (!pixel || !pred.mask()(*pixel)) return;
    const SdfSample<Scalar> s = signed_distance(q, surface);
    const Scalar e = s.value() - ref.field.values[i];
    used[i] = 1;
    errors[i] = std::abs(e);
    if (s.distance > Scalar(0)) {
      const Index pix = surface.pixel_of(s.nearest_index);
      const Vec3<Scalar>& p = surface.cloud()[static_cast<std::size_t>(s.nearest_index)];
      const Vec3<Scalar> ray = back_project_ray<Scalar>(pix / pred.width(), pix % pred.width(), cam);
      slopes[i] = detail::sign(e) * Scalar(s.sign) * (p - q).dot(ray) / s.distance;
      owner[i] = pix;
    }
  });

  std::vector<Scalar> kept;
  kept.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    if (used[i]) kept.push_back(errors[i]);
  if (kept.empty()) throw Error(ErrorCode::AllPointsOutOfFrustum, "no grid sample is valid for both maps");
  const auto n = static_cast<Scalar>(kept.size());

  LossTerm<Scalar> out;
  out.value = pairwise_sum(kept) / n;
  out.gradient = Grid<Scalar>::Zero(pred.height(), pred.width());
  for (std::size_t i = 0; i < count; ++i)
    if (owner[i] >= 0) out.gradient(owner[i]) += slopes[i] / n;
  return out;
}

template <typename Scalar>
LossTerm<Scalar> loss_sdf(const BasicDepthMap<Scalar>& pred, const BasicDepthMap<Scalar>& gt,
                          const CameraIntrinsics& cam, const SdfGridSpec& spec) {
  detail::require_same_shape(pred, gt, "loss_sdf");
  return loss_sdf(pred, SdfReference<Scalar>(gt, cam, spec));
}

/// Everything on the ground-truth side of the total loss.
template <typename Scalar>
struct LossReference {
  BasicDepthMap<Scalar> gt;
  EdgeWeights weights;
  CameraIntrinsics cam;
  SdfReference<Scalar> sdf;

  LossReference(const BasicDepthMap<Scalar>& ground_truth, const RgbImage& image, const CameraIntrinsics& camera,
                const LossConfig& cfg)
      : gt(ground_truth),
        weights(checked_weights(ground_truth, image)),
        cam(camera),
        sdf(ground_truth, camera, grid_for(ground_truth, camera, cfg)) {}

 private:
  static EdgeWeights checked_weights(const BasicDepthMap<Scalar>& gt, const RgbImage& image) {
    detail::require_same_shape(gt, image, "loss_total");
    return edge_weights(image);
  }
  static SdfGridSpec grid_for(const BasicDepthMap<Scalar>& gt, const CameraIntrinsics& cam, const LossConfig& cfg) {
    if (cfg.sdf_spec) return *cfg.sdf_spec;
    return auto_grid_spec(gt.template cast<double>(), cam, cfg.auto_resolution);
  }
};

/// Weighted total lambda1 (depth + smooth) + lambda2 (grad + normal) + lambda3 sdf.
template <typename Scalar>
BasicLossBreakdown<Scalar> loss_total(const BasicDepthMap<Scalar>& pred, const LossReference<Scalar>& ref,
                                      const LossWeights& weights, bool with_gradient = true) {
  weights.validate();
  detail::require_same_shape(pred, ref.gt, "loss_total");
  const LossTerm<Scalar> depth = loss_depth(pred, ref.gt);
  const LossTerm<Scalar> smooth = loss_smooth(pred, ref.weights);
  const LossTerm<Scalar> grad = loss_grad(pred, ref.gt);
  const LossTerm<Scalar> normal = loss_normal(pred, ref.gt);
  const LossTerm<Scalar> sdf = loss_sdf(pred, ref.sdf);

  const Scalar l1(weights.lambda1), l2(weights.lambda2), l3(weights.lambda3);
  BasicLossBreakdown<Scalar> out;
  out.depth = depth.value;
  out.smooth = smooth.value;
  out.grad = grad.value;
  out.normal = normal.value;
  out.sdf = sdf.value;
  out.weights = weights;
  out.total = out.recompute_total();
  if (with_gradient)
    out.gradient = l1 * (depth.gradient + smooth.gradient) + l2 * (grad.gradient + normal.gradient) + l3 * sdf.gradient;
  return out;
}

template <typename Scalar>
BasicLossBreakdown<Scalar> loss_total(const BasicDepthMap<Scalar>& pred, const BasicDepthMap<Scalar>& gt,
                                      const RgbImage& image, const CameraIntrinsics& cam, const LossConfig& cfg) {
  detail::require_same_shape(pred, gt, "loss_total");
  return loss_total(pred, LossReference<Scalar>(gt, image, cam, cfg), cfg.weights, cfg.with_gradient);
}

enum class LossKind { depth, smooth, grad, normal, sdf, total };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Inputs shared by every loss in a gradient check.
struct GradCheckContext {
  DepthMap gt;
  RgbImage image;
  CameraIntrinsics cam;
  SdfGridSpec grid;
  LossWeights weights;
};

struct GradCheckFixture {
  DepthMap pred;
  GradCheckContext context;
};

/// Random fixture: gt uniform in [1.5, 2.5], pred = gt with 10% noise plus a
/// 1e-3 jitter that keeps pred off the L1 kinks, random image, 8^3 grid over
/// the ground-truth cloud.
GradCheckFixture make_grad_check_fixture(std::uint64_t seed, Index height, Index width, int grid_resolution = 8);

struct GradCheckResult {
  double max_relative_error = 0.0;
  Index worst_pixel = -1;
  GridD analytic;
  GridD numeric;
};

/// Compares the analytic gradient with central differences (step h) per
/// pixel. The differences are evaluated with the long double instantiation
/// of the loss so that roundoff stays far below the comparison floor.
/// Relative error uses max(|a|, |b|, 1e-8) as denominator.
GradCheckResult grad_check(LossKind kind, const DepthMap& pred, const GradCheckContext& ctx, double h = 1e-5);

/// Tolerance the checks are held to: 1e-3 for the fixed-assignment SDF
/// subgradient (and totals that include it), 1e-4 otherwise.
double grad_check_tolerance(LossKind kind);

}  // namespace endogeo
