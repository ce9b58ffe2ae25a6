#include "endogeo/core.hpp"
#include "endogeo/parallel.hpp"

#include <cstdlib>
#include <numbers>

namespace endogeo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ShapeTooSmall: return "ShapeTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::ResolutionTooSmall: return "ResolutionTooSmall";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::OutOfFrustum: return "OutOfFrustum";
    case ErrorCode::AllPointsOutOfFrustum: return "AllPointsOutOfFrustum";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::ZeroMedian: return "ZeroMedian";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::NegativeNonSentinel: return "NegativeNonSentinel";
    case ErrorCode::CameraOutsideLumen: return "CameraOutsideLumen";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail, std::optional<Index> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), index_(index) {}

DepthMap validate_depth_map(Index width, Index height, std::span<const double> data,
                            std::span<const bool> mask) {
  if (width < 0 || height < 0 || data.size() != static_cast<std::size_t>(width * height))
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(width * height) +
                                              " values, got " + std::to_string(data.size()));
  if (!mask.empty() && mask.size() != data.size())
    throw Error(ErrorCode::ShapeMismatch, "mask length differs from data length");
  GridD values(height, width);
  Mask valid = Mask::Constant(height, width, true);
  for (Index i = 0; i < width * height; ++i) {
    values(i) = data[static_cast<std::size_t>(i)];
    if (!mask.empty()) valid(i) = mask[static_cast<std::size_t>(i)];
  }
  DepthMap map(std::move(values), std::move(valid));
  validate_depth_map(map);
  return map;
}

RgbImage::RgbImage(Index width, Index height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0 || data_.size() != static_cast<std::size_t>(width * height * 3))
    throw Error(ErrorCode::ShapeMismatch, "rgb buffer length is not width*height*3");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i]))
      throw Error(ErrorCode::NonFiniteValue, "rgb value is not finite", static_cast<Index>(i));
    if (data_[i] < 0.0 || data_[i] > 1.0)
      throw Error(ErrorCode::InvalidArgument, "rgb value outside [0,1]", static_cast<Index>(i));
  }
}

RgbImage RgbImage::constant(Index width, Index height, double value) {
  return RgbImage(width, height, std::vector<double>(static_cast<std::size_t>(width * height * 3), value));
}

GridD RgbImage::channel(int c) const {
  GridD out(height_, width_);
  for (Index r = 0; r < height_; ++r)
    for (Index col = 0; col < width_; ++col) out(r, col) = (*this)(r, col, c);
  return out;
}

double RgbImage::mean_luminance() const {
  if (data_.empty()) return 0.0;
  std::vector<double> lum(static_cast<std::size_t>(width_ * height_));
  for (std::size_t i = 0; i < lum.size(); ++i)
    lum[i] = 0.2126 * data_[3 * i] + 0.7152 * data_[3 * i + 1] + 0.0722 * data_[3 * i + 2];
  return pairwise_sum(lum) / static_cast<double>(lum.size());
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) || !std::isfinite(cy))
    throw Error(ErrorCode::NonFiniteValue, "intrinsics must be finite");
}

CameraIntrinsics CameraIntrinsics::default_for(Index width, Index height) {
  const double half_w = static_cast<double>(width) / 2.0;
  const double half_h = static_cast<double>(height) / 2.0;
  return {half_w, half_w, half_w, half_h};
}

void LossWeights::validate() const {
  for (double l : {lambda1, lambda2, lambda3}) {
    if (!std::isfinite(l) || l < 0.0)
      throw Error(ErrorCode::InvalidArgument, "loss weights must be finite and non-negative");
  }
  if (lambda1 == 0.0 && lambda2 == 0.0 && lambda3 == 0.0)
    throw Error(ErrorCode::InvalidArgument, "loss weights must not all be zero");
}

void SdfGridSpec::validate(Index max_samples) const {
  if (rx < 2 || ry < 2 || rz < 2)
    throw Error(ErrorCode::ResolutionTooSmall, "every grid resolution must be at least 2");
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(lower[a]) || !std::isfinite(upper[a]))
      throw Error(ErrorCode::NonFiniteValue, "grid bounds must be finite");
    if (!(upper[a] > lower[a]))
      throw Error(ErrorCode::InvalidBounds, "upper bound must exceed lower bound on every axis");
  }
  if (sample_count() > max_samples)
    throw Error(ErrorCode::InvalidArgument, "grid has " + std::to_string(sample_count()) +
                                                " samples, limit is " + std::to_string(max_samples));
}

double SeededRng::normal() {
  // 1 - uniform() lies in (0, 1], keeping the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int worker_count() {
  int n = 0;
  if (const char* env = std::getenv("ENDOGEO_THREADS")) n = std::atoi(env);
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(n, 1);
}

}  // namespace endogeo
