#pragma once

#include "endogeo/core.hpp"
#include "endogeo/losses.hpp"
#include "endogeo/metrics.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace endogeo {

/// Which loss groups are switched on.
/// case1: depth + smooth, case2: + grad + normal, case3: + sdf, case4: all.
enum class AblationCase { case1 = 1, case2 = 2, case3 = 3, case4 = 4 };

inline constexpr std::array<AblationCase, 4> kAblationCases{AblationCase::case1, AblationCase::case2,
                                                            AblationCase::case3, AblationCase::case4};

std::string_view to_string(AblationCase c);
/// Accepts 1..4 or "case1".."case4".
AblationCase parse_ablation_case(std::string_view text);

/// Zeroes lambda2 and/or lambda3 of `base` as the case requires.
LossWeights case_weights(AblationCase c, const LossWeights& base);

struct RefineConfig {
  int iterations = 500;
  double learning_rate = 0.01;  // 1e-4 scaled by 100 for per-pixel parameters
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LossWeights weights;
  double noise_sigma = 0.05;
  AblationCase ablation_case = AblationCase::case4;
  std::uint64_t seed = 0;
  int max_backtracks = 6;  // step halvings allowed when a step raises the total; 0 disables
  int snapshot_every = 50;
  std::optional<SdfGridSpec> grid;  // nullopt: automatic grid over the ground truth
  int auto_resolution = 16;

  void validate() const;
};

struct TraceRow {
  int iteration = 0;
  LossBreakdown losses;  // gradient not kept
  double rmse = 0.0;
};

struct TraceSnapshot {
  int iteration = 0;
  LossBreakdown losses;
  MetricsReport metrics;
};

/// rows[i] is the state before update i; the last row is the returned depth.
struct RefineTrace {
  std::vector<TraceRow> rows;
  std::vector<TraceSnapshot> snapshots;
  MetricsReport initial;
  MetricsReport final;

  /// Share of consecutive row pairs whose total does not increase.
  double non_increasing_fraction() const;
  /// Header "iteration,depth,smooth,grad,normal,sdf,total,rmse" then one line per row.
  std::string csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct RefineResult {
  DepthMap depth;
  RefineTrace trace;
};

/// gt * (1 + N(0, sigma)) per valid pixel, floored at kRefineMinDepth.
DepthMap corrupt_depth(const DepthMap& gt, double sigma, std::uint64_t seed);

inline constexpr double kRefineMinDepth = 0.01;

/// Adam on the pixel values of a corrupted copy of `gt`, driven by the
/// analytic gradient of the total loss. Masked pixels are never touched.
/// Throws DivergedLoss when the total becomes non-finite.
RefineResult refine_depth(const DepthMap& gt, const RgbImage& image, const CameraIntrinsics& cam,
                          const RefineConfig& cfg);

struct RefineFixture {
  std::string name;
  DepthMap gt;
  RgbImage image;
  CameraIntrinsics cam;
};

/// One rendered colon-like frame of the given size, viewed obliquely at the
/// wall (yaw 0.9) so depths span roughly 0.5 to 5.
RefineFixture make_refine_fixture(std::uint64_t seed, Index size = 64);

/// Loads every frame listed in <dir>/manifest.txt.
std::vector<RefineFixture> load_fixtures(const std::filesystem::path& dir);

struct AblationRun {
  AblationCase ablation_case;
  std::size_t fixture = 0;
  std::uint64_t seed = 0;
  MetricsReport initial;
  MetricsReport final;
};

inline constexpr std::array<std::string_view, 7> kAblationColumns{"rmse", "rmse_log", "abs_rel", "sq_rel",
                                                                  "a1",   "a2",       "a3"};

struct AblationTable {
  /// rows[c][m]: metric m of case c+1, averaged over fixtures and seeds.
  std::array<std::array<double, 7>, 4> rows{};
  std::vector<AblationRun> runs;

  /// Seeds (over all fixtures) where case4 RMSE <= case1 RMSE, and their count.
  std::pair<int, int> case4_wins() const;
  /// Fixed-width text table with a header row.
  std::string format() const;
};

/// Runs every case on every fixture with noise seeds 0..seeds-1. `base`
/// supplies the optimizer settings and the full weights; its seed and
/// ablation_case are overridden.
AblationTable run_ablation(const std::vector<RefineFixture>& fixtures, const RefineConfig& base, int seeds);

}  // namespace endogeo
