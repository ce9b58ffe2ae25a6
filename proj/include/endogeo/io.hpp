#pragma once

#include "endogeo/core.hpp"
#include "endogeo/metrics.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace endogeo {

enum class FileKind { depth_pfm, rgb_ppm, cloud_ply, report_json, manifest_txt };

struct FileFormatDescriptor {
  FileKind kind;
  std::string_view magic;    // first bytes of the file
  std::string_view version;
};

FileFormatDescriptor descriptor(FileKind kind);

/// Grayscale PFM: "Pf\n<W> <H>\n-1.0\n" then W*H little-endian float32 rows,
/// bottom row first. Masked pixels are written as -1.0 and read back masked
/// (value 0). Other negative values are rejected on read.
void write_depth_pfm(const DepthMap& map, const std::filesystem::path& path);
DepthMap read_depth_pfm(const std::filesystem::path& path);

/// Binary PPM: "P6\n<W> <H>\n255\n" then interleaved RGB bytes, top row
/// first. Each value v is stored as floor(v * 255 + 0.5); bytes b read back
/// as b / 255.
void write_rgb_ppm(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_rgb_ppm(const std::filesystem::path& path);
std::uint8_t quantize_channel(double v);

/// ASCII PLY point list with float x/y/z (and an optional float scalar
/// property), coordinates printed with 9 significant digits.
void write_cloud_ply(const PointCloud& cloud, const std::filesystem::path& path,
                     std::span<const double> scalars = {}, std::string_view scalar_name = "value");

/// Flat key/value JSON object; keys keep their given order.
void write_report_json(const std::vector<std::pair<std::string, double>>& fields,
                       const std::filesystem::path& path);

std::vector<std::pair<std::string, double>> report_fields(const MetricsReport& report);
std::vector<std::pair<std::string, double>> report_fields(const LossBreakdown& losses);

/// Plain-text manifest: a "# endogeo-manifest v1" line, then one record per
/// line as space-separated key=value tokens. Keys and values contain no
/// spaces.
using ManifestRecord = std::vector<std::pair<std::string, std::string>>;

void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
std::optional<std::string> find_field(const ManifestRecord& record, std::string_view key);

/// Shortest decimal that parses back to exactly the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace endogeo
