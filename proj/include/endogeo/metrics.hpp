#pragma once

#include "endogeo/core.hpp"

#include <array>
#include <string_view>
#include <utility>
#include <vector>

namespace endogeo {

/// Standard depth metrics over pixels valid in both maps with pred > 0 and
/// gt > 0. `n_excluded` counts the remaining pixels.
struct MetricsReport {
  double rmse = 0.0;
  double rmse_log = 0.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  Index n_valid = 0;
  Index n_excluded = 0;

  /// The seven metrics in a fixed order with stable key names.
  std::array<std::pair<std::string_view, double>, 7> named() const {
    return {{{"rmse", rmse}, {"rmse_log", rmse_log}, {"abs_rel", abs_rel}, {"sq_rel", sq_rel},
             {"a1", a1}, {"a2", a2}, {"a3", a3}}};
  }
};

/// Median of the values; an even count averages the two central order
/// statistics.
double median(std::vector<double> values);

/// Scale factor median(gt) / median(pred) over the shared valid pixels.
double median_scale_factor(const DepthMap& pred, const DepthMap& gt);

/// pred * median(gt) / median(pred); the mask of pred is kept.
DepthMap median_scale(const DepthMap& pred, const DepthMap& gt);

MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, bool apply_median_scaling = false);

}  // namespace endogeo
