#include "endogeo/geometry.hpp"

#include <algorithm>
#include <numbers>

namespace endogeo {

ShapeIndexMap shape_index(const DepthMap& map) {
  detail::require_min_shape(map.height(), map.width(), 3, "shape_index");
  const Index h = map.height();
  const Index w = map.width();
  ShapeIndexMap out{GridD::Zero(h, w), Mask::Constant(h, w, false)};
  const auto& d = map.values();
  const auto& m = map.mask();

  for (Index r = 1; r + 1 < h; ++r) {
    for (Index c = 1; c + 1 < w; ++c) {
      if (!m.block(r - 1, c - 1, 3, 3).all()) continue;
      const double dxx = d(r, c + 1) - 2.0 * d(r, c) + d(r, c - 1);
      const double dyy = d(r + 1, c) - 2.0 * d(r, c) + d(r - 1, c);
      const double dxy = (d(r + 1, c + 1) - d(r + 1, c - 1) - d(r - 1, c + 1) + d(r - 1, c - 1)) / 4.0;

      // Eigenvalues of the symmetric 2x2 Hessian.
      const double mean = 0.5 * (dxx + dyy);
      const double radius = std::hypot(0.5 * (dxx - dyy), dxy);
      const double k1 = mean + radius;
      const double k2 = mean - radius;

      if (std::abs(k1 - k2) < 1e-12) {
        if (std::abs(k1) > 1e-9 && std::abs(k2) > 1e-9 && (k1 > 0) == (k2 > 0)) {
          out.value(r, c) = k1 > 0 ? -1.0 : 1.0;
          out.valid(r, c) = true;
        }
        continue;
      }
      const double s = (2.0 / std::numbers::pi) * std::atan((k2 + k1) / (k2 - k1));
      out.value(r, c) = std::clamp(s, -1.0, 1.0);
      out.valid(r, c) = true;
    }
  }
  return out;
}

}  // namespace endogeo
