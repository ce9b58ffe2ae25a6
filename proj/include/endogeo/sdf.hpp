#pragma once

#include "endogeo/core.hpp"
#include "endogeo/geometry.hpp"
#include "endogeo/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace endogeo {

template <typename Scalar>
struct Neighbor {
  Index index = -1;
  Scalar distance = Scalar(0);
};

namespace detail {
template <typename Scalar>
Scalar squared_distance(const Vec3<Scalar>& a, const Vec3<Scalar>& b) {
  const Scalar dx = a.x() - b.x();
  const Scalar dy = a.y() - b.y();
  const Scalar dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

// Lexicographic (squared distance, index) order: ties go to the lower index.
template <typename Scalar>
bool closer(Scalar sq_a, Index a, Scalar sq_b, Index b) {
  return sq_a < sq_b || (sq_a == sq_b && a < b);
}
}  // namespace detail

/// Exact nearest-neighbor index over a uniform grid of cubic cells.
///
/// Cells are stored densely over the cloud's bounding box (CSR layout). A
/// query scans Chebyshev rings of cells around its own cell and stops once
/// the best candidate is strictly closer than anything outside the scanned
/// block, so results equal a brute-force scan, including tie-breaking.
template <typename Scalar>
class SpatialIndex {
 public:
  explicit SpatialIndex(BasicPointCloud<Scalar> cloud, std::optional<Scalar> cell_size = std::nullopt)
      : cloud_(std::move(cloud)) {
    if (cloud_.empty()) throw Error(ErrorCode::EmptyCloud, "cannot index an empty cloud");
    Vec3<Scalar> lo = cloud_[0];
    Vec3<Scalar> hi = cloud_[0];
    for (const auto& p : cloud_.points) {
      if (!p.allFinite()) throw Error(ErrorCode::NonFiniteValue, "cloud point is not finite");
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    origin_ = lo;
    const Scalar diagonal = (hi - lo).norm();
    const Scalar n = static_cast<Scalar>(cloud_.size());
    cell_ = cell_size.value_or(diagonal / std::cbrt(n));
    if (!(cell_ > Scalar(0)) || !std::isfinite(static_cast<double>(cell_))) cell_ = Scalar(1);
    for (int a = 0; a < 3; ++a) {
      dims_[a] = static_cast<Index>(std::floor(static_cast<double>((hi[a] - lo[a]) / cell_))) + 1;
    }

    const Index cells = dims_[0] * dims_[1] * dims_[2];
    cell_start_.assign(static_cast<std::size_t>(cells + 1), 0);
    std::vector<Index> cell_of(cloud_.size());
    for (std::size_t i = 0; i < cloud_.size(); ++i) {
      cell_of[i] = linear_cell(clamped_cell(cloud_[i]));
      ++cell_start_[static_cast<std::size_t>(cell_of[i] + 1)];
    }
    for (std::size_t c = 1; c < cell_start_.size(); ++c) cell_start_[c] += cell_start_[c - 1];
    members_.resize(cloud_.size());
    std::vector<Index> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < cloud_.size(); ++i)
      members_[static_cast<std::size_t>(fill[static_cast<std::size_t>(cell_of[i])]++)] = static_cast<Index>(i);
  }

  const BasicPointCloud<Scalar>& cloud() const { return cloud_; }
  Scalar cell_size() const { return cell_; }
  Index cell_count() const { return dims_[0] * dims_[1] * dims_[2]; }

  /// Linear cell holding cloud point i.
  Index cell_of_point(std::size_t i) const { return linear_cell(clamped_cell(cloud_[i])); }

  /// Point indices stored in a linear cell.
  std::span<const Index> cell_members(Index cell) const {
    const auto b = static_cast<std::size_t>(cell_start_[static_cast<std::size_t>(cell)]);
    const auto e = static_cast<std::size_t>(cell_start_[static_cast<std::size_t>(cell + 1)]);
    return std::span<const Index>(members_).subspan(b, e - b);
  }

  Neighbor<Scalar> nearest(const Vec3<Scalar>& query) const { return knn(query, 1).front(); }

  /// The k closest points ordered by (distance, index).
  std::vector<Neighbor<Scalar>> knn(const Vec3<Scalar>& query, int k) const {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    if (!query.allFinite()) throw Error(ErrorCode::NonFiniteValue, "query is not finite");
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), cloud_.size());

    std::array<Index, 3> qc{};
    for (int a = 0; a < 3; ++a) {
      const double f = std::floor(static_cast<double>((query[a] - origin_[a]) / cell_));
      qc[a] = static_cast<Index>(std::clamp(f, -1e9, 1e9));
    }
    // Rings closer than the grid box are empty.
    Index ring = 0;
    for (int a = 0; a < 3; ++a) {
      if (qc[a] < 0) ring = std::max(ring, -qc[a]);
      if (qc[a] >= dims_[a]) ring = std::max(ring, qc[a] - dims_[a] + 1);
    }

    std::vector<std::pair<Scalar, Index>> best;  // sorted ascending, size <= want
    best.reserve(want + 1);
    auto offer = [&](Index i) {
      const Scalar sq = detail::squared_distance(cloud_[static_cast<std::size_t>(i)], query);
      if (best.size() == want && !detail::closer(sq, i, best.back().first, best.back().second)) return;
      if (want == 1) {
        best.assign(1, {sq, i});
        return;
      }
      auto pos = std::upper_bound(best.begin(), best.end(), std::make_pair(sq, i),
                                  [](const auto& x, const auto& y) {
                                    return detail::closer(x.first, x.second, y.first, y.second);
                                  });
      best.insert(pos, {sq, i});
      if (best.size() > want) best.pop_back();
    };

    for (;; ++ring) {
      const Index x0 = std::max<Index>(qc[0] - ring, 0), x1 = std::min<Index>(qc[0] + ring, dims_[0] - 1);
      const Index y0 = std::max<Index>(qc[1] - ring, 0), y1 = std::min<Index>(qc[1] + ring, dims_[1] - 1);
      const Index z0 = std::max<Index>(qc[2] - ring, 0), z1 = std::min<Index>(qc[2] + ring, dims_[2] - 1);
      for (Index z = z0; z <= z1; ++z) {
        const bool z_face = std::abs(z - qc[2]) == ring;
        for (Index y = y0; y <= y1; ++y) {
          const bool yz_face = z_face || std::abs(y - qc[1]) == ring;
          for (Index x = x0; x <= x1; ++x) {
            if (!yz_face && std::abs(x - qc[0]) != ring) continue;
            const std::span<const Index> members = cell_members((z * dims_[1] + y) * dims_[0] + x);
            if (members.empty()) continue;
            // A cell strictly farther than the current k-th best cannot contribute, not even a tie.
            if (best.size() == want && cell_gap({x, y, z}, query) > best.back().first) continue;
            for (Index i : members) offer(i);
          }
        }
      }

      bool covers_grid = true;
      Scalar outside = std::numeric_limits<Scalar>::infinity();
      for (int a = 0; a < 3; ++a) {
        if (qc[a] - ring > 0 || qc[a] + ring < dims_[a] - 1) covers_grid = false;
        const Scalar lower = origin_[a] + Scalar(qc[a] - ring) * cell_;
        const Scalar upper = origin_[a] + Scalar(qc[a] + ring + 1) * cell_;
        outside = std::min({outside, query[a] - lower, upper - query[a]});
      }
      if (covers_grid) break;
      if (best.size() == want && outside > Scalar(0) && best.back().first < outside * outside) break;
    }

    std::vector<Neighbor<Scalar>> out;
    out.reserve(best.size());
    for (const auto& [sq, i] : best) out.push_back({i, std::sqrt(sq)});
    return out;
  }

 private:
  std::array<Index, 3> clamped_cell(const Vec3<Scalar>& p) const {
    std::array<Index, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const auto f = static_cast<Index>(std::floor(static_cast<double>((p[a] - origin_[a]) / cell_)));
      c[a] = std::clamp<Index>(f, 0, dims_[a] - 1);
    }
    return c;
  }
  Index linear_cell(const std::array<Index, 3>& c) const { return (c[2] * dims_[1] + c[1]) * dims_[0] + c[0]; }

  // Squared distance from a point to the box of a cell.
  Scalar cell_gap(const std::array<Index, 3>& c, const Vec3<Scalar>& p) const {
    Scalar sq = Scalar(0);
    for (int a = 0; a < 3; ++a) {
      const Scalar base = origin_[a] + Scalar(c[a]) * cell_;
      const Scalar slack = Scalar(1e-9) * (cell_ + std::abs(base));  // covers rounding in cell assignment
      const Scalar lower = base - slack;
      const Scalar upper = base + cell_ + slack;
      const Scalar d = p[a] < lower ? lower - p[a] : (p[a] > upper ? p[a] - upper : Scalar(0));
      sq += d * d;
    }
    return sq;
  }

  BasicPointCloud<Scalar> cloud_;
  Vec3<Scalar> origin_;
  Scalar cell_ = Scalar(1);
  std::array<Index, 3> dims_{1, 1, 1};
  std::vector<Index> cell_start_;
  std::vector<Index> members_;
};

/// Exact nearest neighbor; brute force when no index is given.
template <typename Scalar>
Neighbor<Scalar> nearest_neighbor(const Vec3<Scalar>& query, const BasicPointCloud<Scalar>& cloud,
                                  const SpatialIndex<Scalar>* index = nullptr) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "nearest neighbor of an empty cloud");
  if (index != nullptr) return index->nearest(query);
  Neighbor<Scalar> best{0, Scalar(0)};
  Scalar best_sq = detail::squared_distance(cloud[0], query);
  for (std::size_t i = 1; i < cloud.size(); ++i) {
    const Scalar sq = detail::squared_distance(cloud[i], query);
    if (sq < best_sq) {
      best_sq = sq;
      best.index = static_cast<Index>(i);
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

/// Regular samples of the box [lower, upper], endpoints included exactly.
/// Ordering: k (z) outermost, then j (y), then i (x); sample (i, j, k) sits at
/// position (k * ry + j) * rx + i.
std::vector<Eigen::Vector3d> sample_grid(const SdfGridSpec& spec);

/// Bounding box of the depth map's back-projected cloud, grown by 5% of its
/// extent (2.5% per side). Axes flatter than 5% of the box diagonal are
/// padded by 2.5% of the diagonal so the box never collapses.
SdfGridSpec auto_grid_spec(const DepthMap& depth, const CameraIntrinsics& cam, int resolution = 16);

template <typename Scalar>
struct SdfSample {
  Vec3<Scalar> position;
  Scalar distance = Scalar(0);
  int sign = 1;
  Index nearest_index = -1;

  Scalar value() const { return sign > 0 ? distance : -distance; }
};

/// A depth map's back-projected surface with its nearest-neighbor index.
template <typename Scalar>
class DepthSurface {
 public:
  DepthSurface(BasicDepthMap<Scalar> depth, const CameraIntrinsics& cam)
      : depth_(std::move(depth)), cam_(cam), index_(build(depth_, cam_, pixels_)) {}

  const BasicDepthMap<Scalar>& depth() const { return depth_; }
  const CameraIntrinsics& camera() const { return cam_; }
  const SpatialIndex<Scalar>& index() const { return index_; }
  const BasicPointCloud<Scalar>& cloud() const { return index_.cloud(); }
  /// Row-major pixel that produced cloud point i.
  Index pixel_of(Index point) const { return pixels_[static_cast<std::size_t>(point)]; }

  /// Row-major pixel under round(project(q)), if it lies inside the image.
  std::optional<Index> projected_pixel(const Vec3<Scalar>& q) const {
    if (!(q.z() > Scalar(0))) return std::nullopt;
    const Vec2<Scalar> uv = project(q, cam_);
    const double u = std::floor(static_cast<double>(uv.x()) + 0.5);
    const double v = std::floor(static_cast<double>(uv.y()) + 0.5);
    if (!(u >= 0.0 && v >= 0.0 && u < static_cast<double>(depth_.width()) &&
          v < static_cast<double>(depth_.height())))
      return std::nullopt;
    return static_cast<Index>(v) * depth_.width() + static_cast<Index>(u);
  }

 private:
  static SpatialIndex<Scalar> build(const BasicDepthMap<Scalar>& depth, const CameraIntrinsics& cam,
                                    std::vector<Index>& pixels) {
    BackProjection<Scalar> bp = depth_to_cloud_indexed(depth, cam);
    pixels = std::move(bp.pixels);
    return SpatialIndex<Scalar>(std::move(bp.cloud));
  }

  BasicDepthMap<Scalar> depth_;
  CameraIntrinsics cam_;
  std::vector<Index> pixels_;
  SpatialIndex<Scalar> index_;
};

/// Signed distance from q to the surface: +1 when q lies behind the surface
/// as seen from the camera (Z_q greater than the depth at its projected
/// pixel), -1 otherwise.
template <typename Scalar>
SdfSample<Scalar> signed_distance(const Vec3<Scalar>& query, const DepthSurface<Scalar>& surface) {
  const std::optional<Index> pixel = surface.projected_pixel(query);
  if (!pixel || !surface.depth().mask()(*pixel))
    throw Error(ErrorCode::OutOfFrustum, "query does not project onto a valid pixel");
  const Neighbor<Scalar> nn = surface.index().nearest(query);
  SdfSample<Scalar> s;
  s.position = query;
  s.distance = nn.distance;
  s.nearest_index = nn.index;
  s.sign = query.z() > surface.depth().values()(*pixel) ? 1 : -1;
  return s;
}

template <typename Scalar>
struct SdfField {
  std::vector<Scalar> values;      // signed distance, 0 where excluded
  std::vector<Index> nearest;      // cloud index, -1 where excluded
  std::vector<char> included;
  Index excluded_count = 0;
};

/// Signed distance at every grid point. Points that do not project onto a
/// valid pixel are excluded and counted.
template <typename Scalar>
SdfField<Scalar> sdf_field(std::span<const Vec3<Scalar>> points, const DepthSurface<Scalar>& surface) {
  const auto n = static_cast<Index>(points.size());
  SdfField<Scalar> field{std::vector<Scalar>(points.size(), Scalar(0)),
                         std::vector<Index>(points.size(), -1), std::vector<char>(points.size(), 0), 0};
  parallel_for(n, [&](Index i) {
    const auto& q = points[static_cast<std::size_t>(i)];
    const std::optional<Index> pixel = surface.projected_pixel(q);
    if (!pixel || !surface.depth().mask()(*pixel)) return;
    const SdfSample<Scalar> s = signed_distance(q, surface);
    field.values[static_cast<std::size_t>(i)] = s.value();
    field.nearest[static_cast<std::size_t>(i)] = s.nearest_index;
    field.included[static_cast<std::size_t>(i)] = 1;
  });
  field.excluded_count = static_cast<Index>(std::count(field.included.begin(), field.included.end(), 0));
  if (field.excluded_count == n)
    throw Error(ErrorCode::AllPointsOutOfFrustum, "no grid point projects into the image");
  return field;
}

template <typename Scalar>
SdfField<Scalar> sdf_field(const std::vector<Vec3<Scalar>>& points, const DepthSurface<Scalar>& surface) {
  return sdf_field(std::span<const Vec3<Scalar>>(points), surface);
}

}  // namespace endogeo
