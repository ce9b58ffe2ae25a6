#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace endogeo {

inline constexpr const char* kVersion = "0.1.0";

using Index = Eigen::Index;

template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using GridD = Grid<double>;
using Mask = Grid<bool>;

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

enum class ErrorCode {
  NonPositiveDepth,
  NonFiniteValue,
  ShapeMismatch,
  ShapeTooSmall,
  InvalidArgument,
  BehindCamera,
  EmptyCloud,
  ResolutionTooSmall,
  InvalidBounds,
  OutOfFrustum,
  AllPointsOutOfFrustum,
  EmptyOverlap,
  ZeroMedian,
  DivergedLoss,
  IoFailure,
  MalformedHeader,
  NegativeNonSentinel,
  CameraOutsideLumen,
};

const char* to_string(ErrorCode code);

/// Domain error. what() is "<CodeName>: <detail>"; `index` names the first
/// offending element when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail, std::optional<Index> index = std::nullopt);

  ErrorCode code() const { return code_; }
  std::optional<Index> index() const { return index_; }

 private:
  ErrorCode code_;
  std::optional<Index> index_;
};

/// H x W depth grid with a per-pixel validity mask (true = valid). Values of
/// masked pixels carry no meaning. Immutable after construction.
template <typename Scalar>
class BasicDepthMap {
 public:
  using Values = Grid<Scalar>;

  BasicDepthMap() = default;
  explicit BasicDepthMap(Values values)
      : values_(std::move(values)), mask_(Mask::Constant(values_.rows(), values_.cols(), true)) {}
  BasicDepthMap(Values values, Mask mask) : values_(std::move(values)), mask_(std::move(mask)) {
    if (mask_.rows() != values_.rows() || mask_.cols() != values_.cols())
      throw Error(ErrorCode::ShapeMismatch, "mask shape differs from depth shape");
  }

  Index width() const { return values_.cols(); }
  Index height() const { return values_.rows(); }
  Index size() const { return values_.size(); }
  const Values& values() const { return values_; }
  const Mask& mask() const { return mask_; }
  Scalar operator()(Index row, Index col) const { return values_(row, col); }
  bool valid(Index row, Index col) const { return mask_(row, col); }
  Index valid_count() const { return mask_.count(); }

  template <typename Other>
  BasicDepthMap<Other> cast() const {
    return BasicDepthMap<Other>(values_.template cast<Other>(), mask_);
  }

  friend bool operator==(const BasicDepthMap& a, const BasicDepthMap& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           (a.values_ == b.values_).all() && (a.mask_ == b.mask_).all();
  }

 private:
  Values values_;
  Mask mask_;
};

using DepthMap = BasicDepthMap<double>;

/// Checks every valid pixel is finite and strictly positive.
template <typename Scalar>
const BasicDepthMap<Scalar>& validate_depth_map(const BasicDepthMap<Scalar>& map) {
  const auto& v = map.values();
  for (Index i = 0; i < v.size(); ++i) {
    if (!map.mask()(i)) continue;
    const Scalar d = v(i);
    if (!std::isfinite(static_cast<double>(d)))
      throw Error(ErrorCode::NonFiniteValue, "pixel " + std::to_string(i) + " is not finite", i);
    if (!(d > Scalar(0)))
      throw Error(ErrorCode::NonPositiveDepth, "pixel " + std::to_string(i) + " is not positive", i);
  }
  return map;
}

/// Builds and validates a map from a row-major buffer.
DepthMap validate_depth_map(Index width, Index height, std::span<const double> data,
                            std::span<const bool> mask = {});

/// Row-major interleaved RGB, every value in [0, 1].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(Index width, Index height, std::vector<double> data);

  static RgbImage constant(Index width, Index height, double value);

  Index width() const { return width_; }
  Index height() const { return height_; }
  const std::vector<double>& data() const { return data_; }
  double operator()(Index row, Index col, int channel) const {
    return data_[static_cast<std::size_t>((row * width_ + col) * 3 + channel)];
  }
  GridD channel(int c) const;
  double mean_luminance() const;

 private:
  Index width_ = 0;
  Index height_ = 0;
  std::vector<double> data_;
};

/// Pinhole camera. Pixel centers sit at integer (u, v) = (column, row).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const;
  /// fx = fy = W/2, principal point (W/2, H/2): a 90 degree horizontal field of view.
  static CameraIntrinsics default_for(Index width, Index height);
};

template <typename Scalar>
struct BasicPointCloud {
  std::vector<Vec3<Scalar>> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Vec3<Scalar>& operator[](std::size_t i) const { return points[i]; }
};

using PointCloud = BasicPointCloud<double>;

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 0.5;
  double lambda3 = 0.1;

  void validate() const;
  LossWeights scaled(double s) const { return {lambda1 * s, lambda2 * s, lambda3 * s}; }
};

struct SdfGridSpec {
  Eigen::Vector3d lower = Eigen::Vector3d::Zero();
  Eigen::Vector3d upper = Eigen::Vector3d::Ones();
  int rx = 16;
  int ry = 16;
  int rz = 16;

  static constexpr Index kDefaultMaxSamples = Index(1) << 20;

  Index sample_count() const { return Index(rx) * ry * rz; }
  void validate(Index max_samples = kDefaultMaxSamples) const;
};

/// The five loss terms, the weights they were combined with and the weighted
/// total. `gradient` holds dL_total/dpred per pixel when requested.
template <typename Scalar>
struct BasicLossBreakdown {
  Scalar depth = Scalar(0);
  Scalar smooth = Scalar(0);
  Scalar grad = Scalar(0);
  Scalar normal = Scalar(0);
  Scalar sdf = Scalar(0);
  Scalar total = Scalar(0);
  LossWeights weights;
  std::optional<Grid<Scalar>> gradient;

  Scalar recompute_total() const {
    return Scalar(weights.lambda1) * (depth + smooth) + Scalar(weights.lambda2) * (grad + normal) +
           Scalar(weights.lambda3) * sdf;
  }
};

using LossBreakdown = BasicLossBreakdown<double>;

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The transforms are defined here rather than through
/// <random> distributions, which are implementation-defined:
///   uniform() = (next_u64() >> 11) * 2^-53            in [0, 1)
///   normal()  = Box-Muller on two uniforms, cosine branch only
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

 private:
  std::mt19937_64 engine_;
};

inline SeededRng seeded_rng(std::uint64_t seed) { return SeededRng(seed); }

/// Pairwise summation with a fixed split order, independent of threading.
template <typename Scalar>
Scalar pairwise_sum(std::span<const Scalar> values) {
  constexpr std::size_t kLeaf = 8;
  if (values.size() <= kLeaf) {
    Scalar s(0);
    for (const Scalar& v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

template <typename Scalar>
Scalar pairwise_sum(const std::vector<Scalar>& values) {
  return pairwise_sum(std::span<const Scalar>(values));
}

}  // namespace endogeo
