#pragma once

#include "endogeo/core.hpp"
#include "endogeo/io.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <string_view>
#include <vector>

namespace endogeo {

enum class Preset { stomach, colon, duodenum };

std::string_view to_string(Preset preset);
/// Accepts "stomach", "stomach-like", "colon", "colon-like", "duodenum", "duodenum-like".
Preset parse_preset(std::string_view name);

/// Per-preset constants. Stomach-like scenes are wide with low-frequency
/// rugae, colon-like scenes have dense haustral folds, duodenum-like scenes
/// carry many small cap-shaped bumps.
struct PresetParams {
  double base_radius;
  double fold_amplitude;   // fraction of the radius
  double fold_frequency;   // rad per unit along the centerline
  int bump_count;
  double bump_amplitude;   // fraction of the radius
  double bump_width;
  double bend;             // centerline offset amplitude, fraction of the radius
  Eigen::Vector3d base_color;
};

PresetParams preset_params(Preset preset);

/// Cubic centerline piece on [z0, z0 + length]: offset(z) = a + (b - a)(3s^2 - 2s^3),
/// s = (z - z0) / length. Consecutive pieces share endpoints with zero
/// slope there, so the curve is C1.
struct CenterlineSegment {
  double z0 = 0.0;
  double length = 1.0;
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
};

/// Gaussian cap on the wall, protruding into the lumen.
struct Bump {
  double z = 0.0;
  double theta = 0.0;
  double amplitude = 0.0;  // fraction of the radius
  double width = 1.0;
};

/// Analytic lumen: a tube around a piecewise-cubic centerline running along
/// world +z, with radius
///   R(z, theta) = R0 (1 - fold(z, theta) - max_b bump_b(z, theta))
///   fold = A (1 + 0.25 sin(3 theta + psi)) ((1 + cos(w z + phi)) / 2)^4
/// The wall is the zero set of wall_function.
struct SceneModel {
  Preset preset = Preset::colon;
  std::uint64_t seed = 0;
  std::vector<CenterlineSegment> centerline;
  double base_radius = 1.0;
  double fold_amplitude = 0.0;
  double fold_frequency = 1.0;
  double fold_phase = 0.0;
  double fold_angular_phase = 0.0;
  std::vector<Bump> bumps;
  std::uint64_t texture_seed = 0;
  Eigen::Vector3d base_color = Eigen::Vector3d(0.85, 0.55, 0.45);

  /// Straight featureless cylinder along the z axis.
  static SceneModel cylinder(double radius);

  Eigen::Vector2d center(double z) const;
  Eigen::Vector2d center_slope(double z) const;
  double radius(double z, double theta) const;
  /// Smallest radius the modulation can produce.
  double min_radius() const;
  /// Signed radial distance to the wall inside the cross-section at the
  /// point's z: positive inside the lumen, zero on the wall.
  double wall_function(const Eigen::Vector3d& world) const;
  /// Unit normal of the wall pointing into the lumen.
  Eigen::Vector3d wall_normal(const Eigen::Vector3d& world) const;
  /// Upper bound on |grad wall_function| away from the tube axis.
  double lipschitz_bound() const;
  /// Multi-octave value noise in [0, 1].
  double texture(const Eigen::Vector3d& world) const;
  void validate() const;
};

SceneModel generate_scene(std::uint64_t seed, Preset preset);

/// Camera placed on the centerline at `z`, looking down the local tangent,
/// then turned by yaw (about camera y), pitch (about camera x) and roll.
/// Camera frame: x right, y down, z forward.
struct CameraPose {
  double z = 0.0;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // camera -> world
};

CameraPose make_pose(const SceneModel& scene, double z, double yaw = 0.0, double pitch = 0.0, double roll = 0.0);

/// Point light co-located with the camera. Specular highlights are drawn only
/// where cos(normal, view) >= specular_threshold.
struct LightingModel {
  double intensity = 1.0;
  Eigen::Vector3d color = Eigen::Vector3d::Ones();
  double ambient = 0.08;
  double specular_strength = 0.4;
  double specular_exponent = 32.0;
  double specular_threshold = 0.9;
  double attenuation = 0.05;  // 1 / (1 + attenuation d^2)

  void validate() const;
};

struct FramePair {
  RgbImage rgb;
  DepthMap depth;  // rays that miss or fall outside [0.01, 100] are masked at 100
  CameraPose pose;
  Mask highlight;  // pixels with a nonzero specular term
};

inline constexpr double kMinDepth = 0.01;
inline constexpr double kMaxDepth = 100.0;
inline constexpr int kMaxTraceSteps = 256;

/// Ray casts every pixel against the wall. Throws CameraOutsideLumen when the
/// camera is within 0.01 of the wall or outside it.
FramePair render_frame(const SceneModel& scene, const CameraPose& pose, const LightingModel& lighting,
                       const CameraIntrinsics& cam, Index width = 320, Index height = 320);

/// Everything needed to re-render one dataset frame.
struct FrameSpec {
  int index = 0;
  std::uint64_t scene_seed = 0;
  Preset preset = Preset::colon;
  Index width = 320;
  Index height = 320;
  CameraIntrinsics cam;
  double pose_z = 0.0;
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  LightingModel lighting;
  std::string rgb_file;
  std::string depth_file;

  ManifestRecord to_record() const;
  static FrameSpec from_record(const ManifestRecord& record);
  FramePair render() const;
};

struct DatasetConfig {
  int count = 1;
  std::vector<Preset> presets{Preset::colon};
  std::uint64_t seed = 0;
  double intensity_min = 0.6;
  double intensity_max = 1.6;
  Index width = 320;
  Index height = 320;
};

/// Frame specs for a config; frame i uses presets[i % presets.size()].
std::vector<FrameSpec> plan_dataset(const DatasetConfig& config);

/// Renders every frame to <dir>/frame_NNNN.{ppm,pfm} and writes
/// <dir>/manifest.txt. Returns the manifest path.
std::filesystem::path generate_dataset(const DatasetConfig& config, const std::filesystem::path& dir);

/// Re-renders every frame listed in a manifest into `dir` (and copies the
/// manifest there).
std::filesystem::path regenerate_dataset(const std::filesystem::path& manifest, const std::filesystem::path& dir);

/// Writes the given specs and their manifest into `dir`.
std::filesystem::path write_dataset(const std::vector<FrameSpec>& frames, const std::filesystem::path& dir);

}  // namespace endogeo
