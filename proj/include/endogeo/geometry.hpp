#pragma once

#include "endogeo/core.hpp"

#include <string>

namespace endogeo {

template <typename Scalar>
struct GradientPair {
  Grid<Scalar> gx;
  Grid<Scalar> gy;
};

template <typename Scalar>
struct NormalMap {
  Grid<Scalar> nx;
  Grid<Scalar> ny;
  Grid<Scalar> nz;  // always 1: raw, unnormalized normals

  Index width() const { return nx.cols(); }
  Index height() const { return nx.rows(); }
  Vec3<Scalar> operator()(Index row, Index col) const {
    return {nx(row, col), ny(row, col), nz(row, col)};
  }
};

/// Shape index in [-1, 1]; `valid` is false on the border, on masked
/// neighborhoods and at flat umbilics.
struct ShapeIndexMap {
  GridD value;
  Mask valid;
};

namespace detail {
inline void require_min_shape(Index rows, Index cols, Index min_side, const char* what) {
  if (rows < min_side || cols < min_side)
    throw Error(ErrorCode::ShapeTooSmall, std::string(what) + " needs at least " +
                                              std::to_string(min_side) + "x" +
                                              std::to_string(min_side) + " pixels");
}
}  // namespace detail

/// Forward differences, zero on the last column (x) and last row (y).
template <typename Derived>
GradientPair<typename Derived::Scalar> image_gradients(const Eigen::ArrayBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Index h = m.rows();
  const Index w = m.cols();
  detail::require_min_shape(h, w, 2, "image_gradients");
  GradientPair<Scalar> g{Grid<Scalar>::Zero(h, w), Grid<Scalar>::Zero(h, w)};
  g.gx.leftCols(w - 1) = m.rightCols(w - 1) - m.leftCols(w - 1);
  g.gy.topRows(h - 1) = m.bottomRows(h - 1) - m.topRows(h - 1);
  return g;
}

/// Mask-aware forward differences: a difference is zero unless both the pixel
/// and its forward neighbor are valid. Equals the plain operator on full masks.
template <typename Scalar>
GradientPair<Scalar> image_gradients(const BasicDepthMap<Scalar>& map) {
  GradientPair<Scalar> g = image_gradients(map.values());
  const Mask& mask = map.mask();
  const Index h = map.height();
  const Index w = map.width();
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) {
      if (c + 1 < w && !(mask(r, c) && mask(r, c + 1))) g.gx(r, c) = Scalar(0);
      if (r + 1 < h && !(mask(r, c) && mask(r + 1, c))) g.gy(r, c) = Scalar(0);
    }
  }
  return g;
}

template <typename Scalar>
Vec2<Scalar> project(const Vec3<Scalar>& point, const CameraIntrinsics& cam) {
  if (!(point.z() > Scalar(0)))
    throw Error(ErrorCode::BehindCamera, "point has non-positive Z");
  return {Scalar(cam.fx) * point.x() / point.z() + Scalar(cam.cx),
          Scalar(cam.fy) * point.y() / point.z() + Scalar(cam.cy)};
}

template <typename Scalar>
Vec3<Scalar> back_project(const Vec2<Scalar>& pixel, Scalar depth, const CameraIntrinsics& cam) {
  if (!(depth > Scalar(0)))
    throw Error(ErrorCode::NonPositiveDepth, "back-projection needs positive depth");
  return {(pixel.x() - Scalar(cam.cx)) * depth / Scalar(cam.fx),
          (pixel.y() - Scalar(cam.cy)) * depth / Scalar(cam.fy), depth};
}

/// Derivative of back_project with respect to depth; constant per pixel.
template <typename Scalar>
Vec3<Scalar> back_project_ray(Index row, Index col, const CameraIntrinsics& cam) {
  return {(Scalar(col) - Scalar(cam.cx)) / Scalar(cam.fx),
          (Scalar(row) - Scalar(cam.cy)) / Scalar(cam.fy), Scalar(1)};
}

/// Cloud plus the row-major pixel index each point came from.
template <typename Scalar>
struct BackProjection {
  BasicPointCloud<Scalar> cloud;
  std::vector<Index> pixels;
};

template <typename Scalar>
BackProjection<Scalar> depth_to_cloud_indexed(const BasicDepthMap<Scalar>& map,
                                              const CameraIntrinsics& cam) {
  cam.validate();
  BackProjection<Scalar> out;
  out.cloud.points.reserve(static_cast<std::size_t>(map.valid_count()));
  out.pixels.reserve(static_cast<std::size_t>(map.valid_count()));
  for (Index r = 0; r < map.height(); ++r) {
    for (Index c = 0; c < map.width(); ++c) {
      if (!map.valid(r, c)) continue;
      out.cloud.points.push_back(
          back_project<Scalar>(Vec2<Scalar>(Scalar(c), Scalar(r)), map(r, c), cam));
      out.pixels.push_back(r * map.width() + c);
    }
  }
  return out;
}

/// One point per valid pixel, row-major.
template <typename Scalar>
BasicPointCloud<Scalar> depth_to_cloud(const BasicDepthMap<Scalar>& map, const CameraIntrinsics& cam) {
  return depth_to_cloud_indexed(map, cam).cloud;
}

/// Raw normals (-gx, -gy, 1) from mask-aware forward differences.
template <typename Scalar>
NormalMap<Scalar> normals_from_depth(const BasicDepthMap<Scalar>& map) {
  detail::require_min_shape(map.height(), map.width(), 2, "normals_from_depth");
  GradientPair<Scalar> g = image_gradients(map);
  return {-g.gx, -g.gy, Grid<Scalar>::Ones(map.height(), map.width())};
}

/// Shape index from the principal curvatures of the depth Hessian (central
/// second differences, unit pixel spacing): s = (2/pi) atan((k2+k1)/(k2-k1)),
/// k1 >= k2. A negative-definite Hessian (a depth peak such as d0 - r^2)
/// scores +1, a cylindrical ridge d0 - x^2 scores +0.5, saddles 0. Equal
/// nonzero curvatures take the limit of the formula, -sign(k1).
ShapeIndexMap shape_index(const DepthMap& map);

}  // namespace endogeo
