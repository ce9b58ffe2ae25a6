#include "endogeo/sdf.hpp"

namespace endogeo {

std::vector<Eigen::Vector3d> sample_grid(const SdfGridSpec& spec) {
  spec.validate();
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(spec.sample_count()));
  auto coord = [&](int axis, int i, int r) {
    return std::lerp(spec.lower[axis], spec.upper[axis], static_cast<double>(i) / (r - 1));
  };
  for (int k = 0; k < spec.rz; ++k)
    for (int j = 0; j < spec.ry; ++j)
      for (int i = 0; i < spec.rx; ++i)
        out.emplace_back(coord(0, i, spec.rx), coord(1, j, spec.ry), coord(2, k, spec.rz));
  return out;
}

SdfGridSpec auto_grid_spec(const DepthMap& depth, const CameraIntrinsics& cam, int resolution) {
  const PointCloud cloud = depth_to_cloud(depth, cam);
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "depth map has no valid pixels");
  Eigen::Vector3d lo = cloud[0];
  Eigen::Vector3d hi = cloud[0];
  for (const auto& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector3d extent = hi - lo;
  double diagonal = extent.norm();
  if (diagonal == 0.0) diagonal = std::max(1.0, hi.norm());
  SdfGridSpec spec;
  for (int a = 0; a < 3; ++a) {
    const double pad = std::max(0.025 * extent[a], extent[a] < 0.05 * diagonal ? 0.025 * diagonal : 0.0);
    spec.lower[a] = lo[a] - pad;
    spec.upper[a] = hi[a] + pad;
  }
  spec.rx = spec.ry = spec.rz = resolution;
  spec.validate();
  return spec;
}

}  // namespace endogeo
