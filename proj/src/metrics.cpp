#include "endogeo/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace endogeo {

namespace {

void require_same_shape(const DepthMap& pred, const DepthMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth shapes differ");
}

bool usable(const DepthMap& pred, const DepthMap& gt, Index i) {
  return pred.mask()(i) && gt.mask()(i) && pred.values()(i) > 0.0 && gt.values()(i) > 0.0;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyOverlap, "median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

double median_scale_factor(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred, gt);
  std::vector<double> p, g;
  for (Index i = 0; i < pred.size(); ++i) {
    if (!usable(pred, gt, i)) continue;
    p.push_back(pred.values()(i));
    g.push_back(gt.values()(i));
  }
  if (p.empty()) throw Error(ErrorCode::EmptyOverlap, "no pixel is valid in both maps");
  const double mp = median(std::move(p));
  const double mg = median(std::move(g));
  if (mp == 0.0 || mg == 0.0) throw Error(ErrorCode::ZeroMedian, "median depth is zero");
  return mg / mp;
}

DepthMap median_scale(const DepthMap& pred, const DepthMap& gt) {
  const double s = median_scale_factor(pred, gt);
  return DepthMap(pred.values() * s, pred.mask());
}

MetricsReport compute_metrics(const DepthMap& pred_in, const DepthMap& gt, bool apply_median_scaling) {
  require_same_shape(pred_in, gt);
  const DepthMap pred = apply_median_scaling ? median_scale(pred_in, gt) : pred_in;

  std::vector<double> sq, sq_log, abs_rel, sq_rel;
  Index within[3] = {0, 0, 0};
  MetricsReport report;
  for (Index i = 0; i < pred.size(); ++i) {
    if (!usable(pred, gt, i)) {
      ++report.n_excluded;
      continue;
    }
    const double p = pred.values()(i);
    const double g = gt.values()(i);
    const double err = p - g;
    const double log_err = std::log(p) - std::log(g);
    sq.push_back(err * err);
    sq_log.push_back(log_err * log_err);
    abs_rel.push_back(std::abs(err) / g);
    sq_rel.push_back(err * err / g);
    const double ratio = std::max(p / g, g / p);
    if (ratio < 1.25) ++within[0];
    if (ratio < 1.25 * 1.25) ++within[1];
    if (ratio < 1.25 * 1.25 * 1.25) ++within[2];
  }
  if (sq.empty()) throw Error(ErrorCode::EmptyOverlap, "no pixel is valid in both maps");

  const auto n = static_cast<double>(sq.size());
  report.n_valid = static_cast<Index>(sq.size());
  report.rmse = std::sqrt(pairwise_sum(sq) / n);
  report.rmse_log = std::sqrt(pairwise_sum(sq_log) / n);
  report.abs_rel = pairwise_sum(abs_rel) / n;
  report.sq_rel = pairwise_sum(sq_rel) / n;
  report.a1 = static_cast<double>(within[0]) / n;
  report.a2 = static_cast<double>(within[1]) / n;
  report.a3 = static_cast<double>(within[2]) / n;
  return report;
}

}  // namespace endogeo
