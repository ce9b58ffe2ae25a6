#include "endogeo/synth.hpp"

#include "endogeo/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace endogeo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCenterlineStart = -40.0;
constexpr double kCenterlineEnd = 200.0;
constexpr double kSegmentLength = 8.0;
constexpr double kHitTolerance = 1e-5;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Lattice hash -> [0, 1).
double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(ix) * 0x8DA6B343ull));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(iy) * 0xD8163841ull));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(iz) * 0xCB1AB31Full));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, const Eigen::Vector3d& p) {
  const Eigen::Vector3d f = p.array().floor();
  const auto ix = static_cast<std::int64_t>(f.x());
  const auto iy = static_cast<std::int64_t>(f.y());
  const auto iz = static_cast<std::int64_t>(f.z());
  const double tx = smoothstep(p.x() - f.x());
  const double ty = smoothstep(p.y() - f.y());
  const double tz = smoothstep(p.z() - f.z());
  double c[2][2][2];
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) c[dz][dy][dx] = lattice(seed, ix + dx, iy + dy, iz + dz);
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  const double y0 = lerp(lerp(c[0][0][0], c[0][0][1], tx), lerp(c[0][1][0], c[0][1][1], tx), ty);
  const double y1 = lerp(lerp(c[1][0][0], c[1][0][1], tx), lerp(c[1][1][0], c[1][1][1], tx), ty);
  return lerp(y0, y1, tz);
}

Eigen::Matrix3d axis_rotation(int axis, double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw Error(ErrorCode::InvalidArgument, "'" + text + "' is not an unsigned integer");
  return v;
}

std::string required(const ManifestRecord& record, std::string_view key) {
  auto v = find_field(record, key);
  if (!v) throw Error(ErrorCode::MalformedHeader, "manifest record lacks '" + std::string(key) + "'");
  return *v;
}

}  // namespace

std::string_view to_string(Preset preset) {
  switch (preset) {
    case Preset::stomach: return "stomach-like";
    case Preset::colon: return "colon-like";
    case Preset::duodenum: return "duodenum-like";
  }
  return "unknown";
}

Preset parse_preset(std::string_view name) {
  if (name == "stomach" || name == "stomach-like") return Preset::stomach;
  if (name == "colon" || name == "colon-like") return Preset::colon;
  if (name == "duodenum" || name == "duodenum-like") return Preset::duodenum;
  throw Error(ErrorCode::InvalidArgument, "unknown preset '" + std::string(name) + "'");
}

PresetParams preset_params(Preset preset) {
  switch (preset) {
    case Preset::stomach: return {2.0, 0.12, 0.8, 2, 0.12, 0.45, 0.25, {0.80, 0.45, 0.40}};
    case Preset::colon: return {1.0, 0.28, 2.0, 4, 0.15, 0.22, 0.35, {0.85, 0.55, 0.45}};
    case Preset::duodenum: return {0.8, 0.18, 1.5, 8, 0.20, 0.15, 0.30, {0.90, 0.62, 0.50}};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown preset");
}

SceneModel SceneModel::cylinder(double radius) {
  SceneModel s;
  s.base_radius = radius;
  s.fold_amplitude = 0.0;
  s.centerline.push_back({kCenterlineStart, kCenterlineEnd - kCenterlineStart, {0, 0}, {0, 0}});
  return s;
}

Eigen::Vector2d SceneModel::center(double z) const {
  if (centerline.empty()) return Eigen::Vector2d::Zero();
  const double zc = std::clamp(z, centerline.front().z0, centerline.back().z0 + centerline.back().length);
  const auto i = std::min(centerline.size() - 1,
                          static_cast<std::size_t>(std::max(0.0, (zc - centerline.front().z0) / kSegmentLength)));
  const CenterlineSegment& seg = centerline[i];
  const double s = std::clamp((zc - seg.z0) / seg.length, 0.0, 1.0);
  return seg.a + (seg.b - seg.a) * (s * s * (3.0 - 2.0 * s));
}

Eigen::Vector2d SceneModel::center_slope(double z) const {
  if (centerline.empty()) return Eigen::Vector2d::Zero();
  if (z < centerline.front().z0 || z > centerline.back().z0 + centerline.back().length)
    return Eigen::Vector2d::Zero();
  const auto i = std::min(centerline.size() - 1,
                          static_cast<std::size_t>(std::max(0.0, (z - centerline.front().z0) / kSegmentLength)));
  const CenterlineSegment& seg = centerline[i];
  const double s = std::clamp((z - seg.z0) / seg.length, 0.0, 1.0);
  return (seg.b - seg.a) * (6.0 * s * (1.0 - s) / seg.length);
}

double SceneModel::radius(double z, double theta) const {
  const double ring = 0.5 * (1.0 + std::cos(fold_frequency * z + fold_phase));
  const double ring2 = ring * ring;
  const double fold = fold_amplitude * (1.0 + 0.25 * std::sin(3.0 * theta + fold_angular_phase)) * ring2 * ring2;
  double bump = 0.0;
  for (const Bump& b : bumps) {
    const double dz = z - b.z;
    if (std::abs(dz) > 6.0 * b.width) continue;
    const double arc = base_radius * std::remainder(theta - b.theta, 2.0 * kPi);
    bump = std::max(bump, b.amplitude * std::exp(-(dz * dz + arc * arc) / (2.0 * b.width * b.width)));
  }
  return base_radius * (1.0 - fold - bump);
}

double SceneModel::min_radius() const {
  double max_bump = 0.0;
  for (const Bump& b : bumps) max_bump = std::max(max_bump, b.amplitude);
  return base_radius * (1.0 - 1.25 * fold_amplitude - max_bump);
}

double SceneModel::wall_function(const Eigen::Vector3d& p) const {
  const Eigen::Vector2d d = p.head<2>() - center(p.z());
  return radius(p.z(), std::atan2(d.y(), d.x())) - d.norm();
}

Eigen::Vector3d SceneModel::wall_normal(const Eigen::Vector3d& p) const {
  const double h = 1e-6 * std::max(1.0, p.norm());
  Eigen::Vector3d g;
  for (int a = 0; a < 3; ++a) {
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(a) * h;
    g[a] = (wall_function(p + e) - wall_function(p - e)) / (2.0 * h);
  }
  return g.normalized();
}

double SceneModel::lipschitz_bound() const {
  double slope = 0.0;
  for (const auto& seg : centerline) slope = std::max(slope, 1.5 * (seg.b - seg.a).norm() / seg.length);
  double bump_rate = 0.0;
  for (const Bump& b : bumps) bump_rate = std::max(bump_rate, 0.607 * b.amplitude / b.width);
  const double along = base_radius * (2.5 * fold_amplitude * fold_frequency + bump_rate);
  const double around = base_radius * (0.75 * fold_amplitude + base_radius * bump_rate);
  const double rho_floor = 0.5 * std::max(min_radius(), 1e-6);
  return 1.2 * (std::sqrt(1.0 + slope * slope) + along + around / rho_floor);
}

double SceneModel::texture(const Eigen::Vector3d& p) const {
  double sum = 0.0, norm = 0.0, amp = 1.0;
  Eigen::Vector3d q = p * (3.0 / base_radius);
  for (int octave = 0; octave < 3; ++octave) {
    sum += amp * value_noise(texture_seed + static_cast<std::uint64_t>(octave), q);
    norm += amp;
    amp *= 0.5;
    q *= 2.0;
  }
  return sum / norm;
}

void SceneModel::validate() const {
  if (!(base_radius > 0.0) || !std::isfinite(base_radius))
    throw Error(ErrorCode::InvalidArgument, "base radius must be positive");
  if (!(min_radius() > 0.0)) throw Error(ErrorCode::InvalidArgument, "wall modulation collapses the lumen");
  if (centerline.empty()) throw Error(ErrorCode::InvalidArgument, "scene has no centerline");
}

SceneModel generate_scene(std::uint64_t seed, Preset preset) {
  const PresetParams p = preset_params(preset);
  SeededRng rng(seed);
  SceneModel s;
  s.preset = preset;
  s.seed = seed;
  s.base_radius = p.base_radius;
  s.fold_amplitude = p.fold_amplitude * rng.uniform(0.8, 1.2);
  s.fold_frequency = p.fold_frequency * rng.uniform(0.9, 1.1);
  s.fold_phase = rng.uniform(0.0, 2.0 * kPi);
  s.fold_angular_phase = rng.uniform(0.0, 2.0 * kPi);
  s.base_color = p.base_color;
  s.texture_seed = rng.next_u64();

  auto offset = [&] {
    const double r = p.bend * p.base_radius * std::sqrt(rng.uniform());
    const double a = rng.uniform(0.0, 2.0 * kPi);
    return Eigen::Vector2d(r * std::cos(a), r * std::sin(a));
  };
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  for (double z0 = kCenterlineStart; z0 < kCenterlineEnd - 1e-9; z0 += kSegmentLength) {
    const Eigen::Vector2d b = offset();
    s.centerline.push_back({z0, kSegmentLength, a, b});
    a = b;
  }
  for (int i = 0; i < p.bump_count; ++i) {
    s.bumps.push_back({rng.uniform(2.0, 60.0), rng.uniform(0.0, 2.0 * kPi),
                       p.bump_amplitude * rng.uniform(0.7, 1.0), p.bump_width * rng.uniform(0.8, 1.2)});
  }
  s.validate();
  return s;
}

CameraPose make_pose(const SceneModel& scene, double z, double yaw, double pitch, double roll) {
  CameraPose pose;
  pose.z = z;
  pose.yaw = yaw;
  pose.pitch = pitch;
  pose.roll = roll;
  const Eigen::Vector2d c = scene.center(z);
  pose.position = Eigen::Vector3d(c.x(), c.y(), z);
  const Eigen::Vector2d slope = scene.center_slope(z);
  const Eigen::Vector3d forward = Eigen::Vector3d(slope.x(), slope.y(), 1.0).normalized();
  const Eigen::Vector3d right = (Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitX().dot(forward) * forward).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d base;
  base << right, down, forward;
  pose.rotation = base * axis_rotation(1, yaw) * axis_rotation(0, pitch) * axis_rotation(2, roll);
  return pose;
}

void LightingModel::validate() const {
  if (!(intensity >= 0.0) || !(ambient >= 0.0) || !(specular_strength >= 0.0) || !(attenuation >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "lighting terms must be non-negative");
  if (!(specular_exponent >= 1.0)) throw Error(ErrorCode::InvalidArgument, "specular exponent must be >= 1");
  if ((color.array() < 0.0).any()) throw Error(ErrorCode::InvalidArgument, "light color must be non-negative");
}

FramePair render_frame(const SceneModel& scene, const CameraPose& pose, const LightingModel& lighting,
                       const CameraIntrinsics& cam, Index width, Index height) {
  scene.validate();
  lighting.validate();
  cam.validate();
  if (width < 1 || height < 1) throw Error(ErrorCode::ShapeTooSmall, "image must have at least one pixel");
  if (!(scene.wall_function(pose.position) > kMinDepth))
    throw Error(ErrorCode::CameraOutsideLumen, "camera is not strictly inside the lumen");

  const double lipschitz = scene.lipschitz_bound();
  GridD depth = GridD::Constant(height, width, kMaxDepth);
  Mask valid = Mask::Constant(height, width, false);
  Mask highlight = Mask::Constant(height, width, false);
  std::vector<double> rgb(static_cast<std::size_t>(width * height * 3), 0.0);

  parallel_for(width * height, [&](Index pixel) {
    const Index row = pixel / width;
    const Index col = pixel % width;
    const Eigen::Vector3d dir_cam((col - cam.cx) / cam.fx, (row - cam.cy) / cam.fy, 1.0);
    const Eigen::Vector3d dir = pose.rotation * dir_cam;  // advancing t by 1 advances camera Z by 1
    const double dir_len = dir.norm();
    auto wall_at = [&](double t) { return scene.wall_function(pose.position + t * dir); };

    // Sphere tracing with a floor on the step; a sign change is refined by
    // bisection.
    double t_prev = 0.0;
    double t = 0.0;
    double f = wall_at(0.0);
    std::optional<double> hit;
    for (int step = 0; step < kMaxTraceSteps && t_prev <= kMaxDepth; ++step) {
      if (f < 0.0) {
        double lo = t_prev, hi = t;
        for (int it = 0; it < 80 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          (wall_at(mid) >= 0.0 ? lo : hi) = mid;
        }
        hit = lo;
        break;
      }
      if (f < kHitTolerance) {
        hit = t;
        break;
      }
      t_prev = t;
      t += std::max(f / (lipschitz * dir_len), 1e-3 + 0.01 * t);
      f = wall_at(t);
    }
    if (!hit || *hit < kMinDepth || *hit > kMaxDepth) return;

    depth(row, col) = *hit;
    valid(row, col) = true;

    const Eigen::Vector3d p = pose.position + *hit * dir;
    const Eigen::Vector3d n = scene.wall_normal(p);
    const Eigen::Vector3d v = -dir / dir_len;
    const double cos_nv = std::max(0.0, n.dot(v));
    const double dist = (*hit) * dir_len;
    const double att = 1.0 / (1.0 + lighting.attenuation * dist * dist);
    const Eigen::Vector3d albedo = scene.base_color * (0.55 + 0.45 * scene.texture(p));
    const double diffuse = lighting.ambient + lighting.intensity * cos_nv * att;
    double specular = 0.0;
    if (cos_nv >= lighting.specular_threshold)
      specular = lighting.specular_strength * lighting.intensity * att * std::pow(cos_nv, lighting.specular_exponent);
    highlight(row, col) = specular > 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      const double value = albedo[ch] * lighting.color[ch] * diffuse + lighting.color[ch] * specular;
      rgb[static_cast<std::size_t>(pixel * 3 + ch)] = std::clamp(value, 0.0, 1.0);
    }
  });

  return {RgbImage(width, height, std::move(rgb)), DepthMap(std::move(depth), std::move(valid)), pose,
          std::move(highlight)};
}

ManifestRecord FrameSpec::to_record() const {
  auto d = [](double v) { return format_double(v); };
  return {{"frame", std::to_string(index)},
          {"seed", std::to_string(scene_seed)},
          {"preset", std::string(to_string(preset))},
          {"width", std::to_string(width)},
          {"height", std::to_string(height)},
          {"fx", d(cam.fx)},
          {"fy", d(cam.fy)},
          {"cx", d(cam.cx)},
          {"cy", d(cam.cy)},
          {"pose_z", d(pose_z)},
          {"yaw", d(yaw)},
          {"pitch", d(pitch)},
          {"roll", d(roll)},
          {"intensity", d(lighting.intensity)},
          {"color", d(lighting.color.x()) + "," + d(lighting.color.y()) + "," + d(lighting.color.z())},
          {"ambient", d(lighting.ambient)},
          {"specular_strength", d(lighting.specular_strength)},
          {"specular_exponent", d(lighting.specular_exponent)},
          {"specular_threshold", d(lighting.specular_threshold)},
          {"attenuation", d(lighting.attenuation)},
          {"rgb", rgb_file},
          {"depth", depth_file}};
}

FrameSpec FrameSpec::from_record(const ManifestRecord& r) {
  auto num = [&](std::string_view key) { return parse_double(required(r, key)); };
  FrameSpec f;
  f.index = static_cast<int>(parse_u64(required(r, "frame")));
  f.scene_seed = parse_u64(required(r, "seed"));
  f.preset = parse_preset(required(r, "preset"));
  f.width = static_cast<Index>(parse_u64(required(r, "width")));
  f.height = static_cast<Index>(parse_u64(required(r, "height")));
  f.cam = {num("fx"), num("fy"), num("cx"), num("cy")};
  f.pose_z = num("pose_z");
  f.yaw = num("yaw");
  f.pitch = num("pitch");
  f.roll = num("roll");
  f.lighting.intensity = num("intensity");
  const std::string color = required(r, "color");
  const auto c1 = color.find(',');
  const auto c2 = color.find(',', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw Error(ErrorCode::MalformedHeader, "color must be r,g,b");
  f.lighting.color = {parse_double(color.substr(0, c1)), parse_double(color.substr(c1 + 1, c2 - c1 - 1)),
                      parse_double(color.substr(c2 + 1))};
  f.lighting.ambient = num("ambient");
  f.lighting.specular_strength = num("specular_strength");
  f.lighting.specular_exponent = num("specular_exponent");
  f.lighting.specular_threshold = num("specular_threshold");
  f.lighting.attenuation = num("attenuation");
  f.rgb_file = required(r, "rgb");
  f.depth_file = required(r, "depth");
  return f;
}

FramePair FrameSpec::render() const {
  const SceneModel scene = generate_scene(scene_seed, preset);
  return render_frame(scene, make_pose(scene, pose_z, yaw, pitch, roll), lighting, cam, width, height);
}

std::vector<FrameSpec> plan_dataset(const DatasetConfig& config) {
  if (config.count < 0) throw Error(ErrorCode::InvalidArgument, "frame count must be non-negative");
  if (config.presets.empty()) throw Error(ErrorCode::InvalidArgument, "at least one preset is required");
  if (!(config.intensity_min >= 0.0) || config.intensity_max < config.intensity_min)
    throw Error(ErrorCode::InvalidArgument, "intensity range must satisfy 0 <= min <= max");
  SeededRng rng(config.seed);
  std::vector<FrameSpec> frames;
  for (int i = 0; i < config.count; ++i) {
    FrameSpec f;
    f.index = i;
    f.scene_seed = rng.next_u64();
    f.preset = config.presets[static_cast<std::size_t>(i) % config.presets.size()];
    f.width = config.width;
    f.height = config.height;
    f.cam = CameraIntrinsics::default_for(config.width, config.height);
    SeededRng frame_rng(f.scene_seed ^ 0x5DEECE66Dull);
    f.pose_z = frame_rng.uniform(8.0, 40.0);
    f.yaw = frame_rng.uniform(-0.5, 0.5);
    f.pitch = frame_rng.uniform(-0.5, 0.5);
    f.roll = frame_rng.uniform(-kPi, kPi);
    f.lighting.intensity = config.intensity_min + (config.intensity_max - config.intensity_min) * frame_rng.uniform();
    f.lighting.color = {frame_rng.uniform(0.85, 1.0), frame_rng.uniform(0.85, 1.0), frame_rng.uniform(0.85, 1.0)};
    f.lighting.ambient = frame_rng.uniform(0.04, 0.12);
    f.lighting.specular_strength = frame_rng.uniform(0.2, 0.6);
    f.lighting.specular_exponent = frame_rng.uniform(16.0, 64.0);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d", i);
    f.rgb_file = std::string(name) + ".ppm";
    f.depth_file = std::string(name) + ".pfm";
    frames.push_back(std::move(f));
  }
  return frames;
}

std::filesystem::path write_dataset(const std::vector<FrameSpec>& frames, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create '" + dir.string() + "': " + ec.message());
  std::vector<ManifestRecord> records;
  for (const FrameSpec& f : frames) {
    const FramePair frame = f.render();
    write_rgb_ppm(frame.rgb, dir / f.rgb_file);
    write_depth_pfm(frame.depth, dir / f.depth_file);
    records.push_back(f.to_record());
  }
  const auto manifest = dir / "manifest.txt";
  write_manifest(records, manifest);
  return manifest;
}

std::filesystem::path generate_dataset(const DatasetConfig& config, const std::filesystem::path& dir) {
  return write_dataset(plan_dataset(config), dir);
}

std::filesystem::path regenerate_dataset(const std::filesystem::path& manifest, const std::filesystem::path& dir) {
  std::vector<FrameSpec> frames;
  for (const auto& record : read_manifest(manifest)) frames.push_back(FrameSpec::from_record(record));
  return write_dataset(frames, dir);
}

}  // namespace endogeo
