#include "endogeo/losses.hpp"

#include <string>

namespace endogeo {

EdgeWeights edge_weights(const RgbImage& image) {
  const Index h = image.height();
  const Index w = image.width();
  EdgeWeights out{GridD::Ones(h, w), GridD::Ones(h, w)};
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      double dx = 0.0, dy = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        if (c + 1 < w) dx += std::abs(image(r, c + 1, ch) - image(r, c, ch));
        if (r + 1 < h) dy += std::abs(image(r + 1, c, ch) - image(r, c, ch));
      }
      out.wx(r, c) = std::exp(-dx / 3.0);
      out.wy(r, c) = std::exp(-dy / 3.0);
    }
  }
  return out;
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::depth: return "depth";
    case LossKind::smooth: return "smooth";
    case LossKind::grad: return "grad";
    case LossKind::normal: return "normal";
    case LossKind::sdf: return "sdf";
    case LossKind::total: return "total";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  for (LossKind k : {LossKind::depth, LossKind::smooth, LossKind::grad, LossKind::normal, LossKind::sdf,
                     LossKind::total}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown loss '" + std::string(name) + "'");
}

GradCheckFixture make_grad_check_fixture(std::uint64_t seed, Index height, Index width, int grid_resolution) {
  if (height < 4 || width < 4) throw Error(ErrorCode::ShapeTooSmall, "gradient checks need at least 4x4 maps");
  SeededRng rng(seed);
  GridD gt(height, width);
  GridD pred(height, width);
  for (Index i = 0; i < gt.size(); ++i) gt(i) = rng.uniform(1.5, 2.5);
  for (Index i = 0; i < pred.size(); ++i)
    pred(i) = gt(i) * (1.0 + 0.1 * rng.normal()) + rng.uniform(-1e-3, 1e-3);
  std::vector<double> rgb(static_cast<std::size_t>(height * width * 3));
  for (double& v : rgb) v = rng.uniform();

  GradCheckFixture f{DepthMap(pred), {DepthMap(gt), RgbImage(width, height, std::move(rgb)),
                                      CameraIntrinsics::default_for(width, height), {}, {}}};
  validate_depth_map(f.pred);
  f.context.grid = auto_grid_spec(f.context.gt, f.context.cam, grid_resolution);
  return f;
}

namespace {

template <typename Scalar>
struct Evaluator {
  LossKind kind;
  BasicDepthMap<Scalar> gt;
  EdgeWeights weights;
  std::optional<LossReference<Scalar>> total_ref;
  std::optional<SdfReference<Scalar>> sdf_ref;
  LossWeights loss_weights;

  Evaluator(LossKind k, const GradCheckContext& ctx)
      : kind(k), gt(ctx.gt.cast<Scalar>()), weights(edge_weights(ctx.image)), loss_weights(ctx.weights) {
    if (k == LossKind::sdf) sdf_ref.emplace(gt, ctx.cam, ctx.grid);
    if (k == LossKind::total) {
      LossConfig cfg;
      cfg.weights = ctx.weights;
      cfg.sdf_spec = ctx.grid;
      total_ref.emplace(gt, ctx.image, ctx.cam, cfg);
    }
  }

  LossTerm<Scalar> operator()(const BasicDepthMap<Scalar>& pred) const {
    switch (kind) {
      case LossKind::depth: return loss_depth(pred, gt);
      case LossKind::smooth: return loss_smooth(pred, weights);
      case LossKind::grad: return loss_grad(pred, gt);
      case LossKind::normal: return loss_normal(pred, gt);
      case LossKind::sdf: return loss_sdf(pred, *sdf_ref);
      case LossKind::total: {
        auto b = loss_total(pred, *total_ref, loss_weights);
        return {b.total, std::move(*b.gradient)};
      }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown loss kind");
  }
};

}  // namespace

GradCheckResult grad_check(LossKind kind, const DepthMap& pred, const GradCheckContext& ctx, double h) {
  using Wide = long double;
  const Evaluator<double> analytic(kind, ctx);
  const Evaluator<Wide> wide(kind, ctx);

  GradCheckResult result;
  result.analytic = analytic(pred).gradient;
  result.numeric = GridD::Zero(pred.height(), pred.width());

  const Grid<Wide> base = pred.values().cast<Wide>();
  for (Index i = 0; i < base.size(); ++i) {
    if (!pred.mask()(i)) continue;
    Grid<Wide> plus = base;
    Grid<Wide> minus = base;
    plus(i) += Wide(h);
    minus(i) -= Wide(h);
    const Wide f_plus = wide(BasicDepthMap<Wide>(plus, pred.mask())).value;
    const Wide f_minus = wide(BasicDepthMap<Wide>(minus, pred.mask())).value;
    result.numeric(i) = static_cast<double>((f_plus - f_minus) / (Wide(2) * Wide(h)));

    const double a = result.analytic(i);
    const double b = result.numeric(i);
    const double rel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
    if (rel > result.max_relative_error || result.worst_pixel < 0) {
      result.max_relative_error = std::max(rel, result.max_relative_error);
      result.worst_pixel = i;
    }
  }
  return result;
}

double grad_check_tolerance(LossKind kind) {
  return kind == LossKind::sdf || kind == LossKind::total ? 1e-3 : 1e-4;
}

}  // namespace endogeo
