#include "endogeo/io.hpp"

#include <json.hpp>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace endogeo {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for reading");
  return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
}

// Next whitespace-delimited header token; '#' starts a comment to end of line.
std::string header_token(std::istream& in, const std::filesystem::path& path) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (!std::isspace(ch)) break;
  }
  while (ch != EOF && !std::isspace(ch)) {
    token.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  // `ch` is the single whitespace byte that ends the token.
  if (token.empty()) throw Error(ErrorCode::MalformedHeader, "truncated header in '" + path.string() + "'");
  return token;
}

Index header_dimension(std::istream& in, const std::filesystem::path& path) {
  const std::string t = header_token(in, path);
  Index v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || v <= 0)
    throw Error(ErrorCode::MalformedHeader, "bad dimension '" + t + "' in '" + path.string() + "'");
  return v;
}

}  // namespace

FileFormatDescriptor descriptor(FileKind kind) {
  switch (kind) {
    case FileKind::depth_pfm: return {kind, "Pf", "pfm-gray-le"};
    case FileKind::rgb_ppm: return {kind, "P6", "ppm-binary-255"};
    case FileKind::cloud_ply: return {kind, "ply", "ascii-1.0"};
    case FileKind::report_json: return {kind, "{", "flat-v1"};
    case FileKind::manifest_txt: return {kind, "# endogeo-manifest", "v1"};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown file kind");
}

void write_depth_pfm(const DepthMap& map, const std::filesystem::path& path) {
  validate_depth_map(map);
  std::ofstream out = open_out(path);
  out << "Pf\n" << map.width() << ' ' << map.height() << "\n-1.0\n";
  std::vector<char> row(static_cast<std::size_t>(map.width()) * 4);
  for (Index r = map.height() - 1; r >= 0; --r) {
    for (Index c = 0; c < map.width(); ++c) {
      const float v = map.valid(r, c) ? static_cast<float>(map(r, c)) : -1.0f;
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) row[static_cast<std::size_t>(c * 4 + b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  finish(out, path);
}

DepthMap read_depth_pfm(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const std::string magic = header_token(in, path);
  if (magic != "Pf")
    throw Error(ErrorCode::MalformedHeader, "expected grayscale 'Pf', found '" + magic + "'");
  const Index w = header_dimension(in, path);
  const Index h = header_dimension(in, path);
  const double scale = parse_double(header_token(in, path));
  if (scale == 0.0 || !std::isfinite(scale)) throw Error(ErrorCode::MalformedHeader, "bad PFM scale");
  const bool big_endian = scale > 0.0;

  std::vector<unsigned char> bytes(static_cast<std::size_t>(w * h * 4));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw Error(ErrorCode::IoFailure, "PFM payload truncated in '" + path.string() + "'");

  GridD values(h, w);
  Mask mask = Mask::Constant(h, w, true);
  for (Index r = 0; r < h; ++r) {
    const Index file_row = h - 1 - r;
    for (Index c = 0; c < w; ++c) {
      const unsigned char* p = &bytes[static_cast<std::size_t>((file_row * w + c) * 4)];
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= std::uint32_t(p[big_endian ? 3 - b : b]) << (8 * b);
      const float v = std::bit_cast<float>(bits);
      if (v == -1.0f) {
        mask(r, c) = false;
        values(r, c) = 0.0;
      } else if (v < 0.0f) {
        throw Error(ErrorCode::NegativeNonSentinel, "negative depth that is not the -1 sentinel",
                    r * w + c);
      } else {
        values(r, c) = static_cast<double>(v) * std::abs(scale);
      }
    }
  }
  DepthMap map(std::move(values), std::move(mask));
  validate_depth_map(map);
  return map;
}

std::uint8_t quantize_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v * 255.0 + 0.5), 0.0, 255.0));
}

void write_rgb_ppm(const RgbImage& image, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<char> bytes(image.data().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<char>(quantize_channel(image.data()[i]));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

RgbImage read_rgb_ppm(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const std::string magic = header_token(in, path);
  if (magic != "P6") throw Error(ErrorCode::MalformedHeader, "expected binary 'P6', found '" + magic + "'");
  const Index w = header_dimension(in, path);
  const Index h = header_dimension(in, path);
  const Index maxval = header_dimension(in, path);
  if (maxval != 255) throw Error(ErrorCode::MalformedHeader, "maxval must be 255, found " + std::to_string(maxval));
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w * h * 3));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw Error(ErrorCode::IoFailure, "PPM payload truncated in '" + path.string() + "'");
  std::vector<double> data(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) data[i] = bytes[i] / 255.0;
  return RgbImage(w, h, std::move(data));
}

void write_cloud_ply(const PointCloud& cloud, const std::filesystem::path& path, std::span<const double> scalars,
                     std::string_view scalar_name) {
  if (!scalars.empty() && scalars.size() != cloud.size())
    throw Error(ErrorCode::ShapeMismatch, "one scalar per point is required");
  std::ofstream out = open_out(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (!scalars.empty()) out << "property float " << scalar_name << '\n';
  out << "end_header\n";
  char line[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud[i];
    if (!p.allFinite()) throw Error(ErrorCode::NonFiniteValue, "cloud point is not finite", static_cast<Index>(i));
    int n = std::snprintf(line, sizeof line, "%.9g %.9g %.9g", p.x(), p.y(), p.z());
    out.write(line, n);
    if (!scalars.empty()) {
      n = std::snprintf(line, sizeof line, " %.9g", scalars[i]);
      out.write(line, n);
    }
    out.put('\n');
  }
  finish(out, path);
}

void write_report_json(const std::vector<std::pair<std::string, double>>& fields,
                       const std::filesystem::path& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : fields) j[k] = v;
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

std::vector<std::pair<std::string, double>> report_fields(const MetricsReport& report) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [k, v] : report.named()) out.emplace_back(std::string(k), v);
  out.emplace_back("n_valid", static_cast<double>(report.n_valid));
  out.emplace_back("n_excluded", static_cast<double>(report.n_excluded));
  return out;
}

std::vector<std::pair<std::string, double>> report_fields(const LossBreakdown& losses) {
  return {{"depth", losses.depth},   {"smooth", losses.smooth},
          {"grad", losses.grad},     {"normal", losses.normal},
          {"sdf", losses.sdf},       {"total", losses.total},
          {"lambda1", losses.weights.lambda1}, {"lambda2", losses.weights.lambda2},
          {"lambda3", losses.weights.lambda3}};
}

void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "# endogeo-manifest v1\n";
  for (const auto& record : records) {
    bool first = true;
    for (const auto& [k, v] : record) {
      if (k.find_first_of(" \n=") != std::string::npos || v.find_first_of(" \n") != std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "manifest keys and values must not contain spaces");
      if (!first) out.put(' ');
      out << k << '=' << v;
      first = false;
    }
    out.put('\n');
  }
  finish(out, path);
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "# endogeo-manifest v1")
    throw Error(ErrorCode::MalformedHeader, "'" + path.string() + "' is not an endogeo manifest");
  std::vector<ManifestRecord> records;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    ManifestRecord record;
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0)
        throw Error(ErrorCode::MalformedHeader, "manifest token '" + token + "' is not key=value");
      record.emplace_back(token.substr(0, eq), token.substr(eq + 1));
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::optional<std::string> find_field(const ManifestRecord& record, std::string_view key) {
  for (const auto& [k, v] : record)
    if (k == key) return v;
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(text) + "' is not a number");
  return v;
}

}  // namespace endogeo
