#include "sgsg/scene.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace sgsg {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'G', 'S', 'G', 'R', 'A', 'S', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_f64(std::ostream& out, double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  put_u32(out, static_cast<std::uint32_t>(u & 0xFFFFFFFFULL));
  put_u32(out, static_cast<std::uint32_t>(u >> 32));
}

std::uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw FormatError("raster: unexpected end of file reading " + what);
  }
  return std::uint32_t(bytes[0]) | (std::uint32_t(bytes[1]) << 8) |
         (std::uint32_t(bytes[2]) << 16) | (std::uint32_t(bytes[3]) << 24);
}

float get_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(get_u32(in, what));
}

double get_f64(std::istream& in, const std::string& what) {
  const std::uint64_t lo = get_u32(in, what);
  const std::uint64_t hi = get_u32(in, what);
  return std::bit_cast<double>(lo | (hi << 32));
}

}  // namespace

void SceneRaster::validate() const {
  if (channels < 1 || height < 1 || width < 1) {
    throw FormatError("raster: non-positive dimensions");
  }
  if (grid.size() != static_cast<Eigen::Index>(channels) * height * width) {
    throw FormatError("raster: grid size does not match dimensions");
  }
  if (meters_per_cell <= 0.0) throw FormatError("raster: meters_per_cell must be positive");
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      float total = 0.0f;
      for (int ch = 0; ch < channels; ++ch) {
        const float v = at(ch, r, c);
        if (v != 0.0f && v != 1.0f) {
          throw FormatError("raster: cell (" + std::to_string(r) + "," + std::to_string(c) +
                            ") is not one-hot");
        }
        total += v;
      }
      if (total != 1.0f) {
        throw FormatError("raster: cell (" + std::to_string(r) + "," + std::to_string(c) +
                          ") channels sum to " + std::to_string(total));
      }
    }
  }
}

void save_raster(const std::filesystem::path& path, const SceneRaster& raster) {
  raster.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open raster file for writing: " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(raster.channels));
  put_u32(out, static_cast<std::uint32_t>(raster.height));
  put_u32(out, static_cast<std::uint32_t>(raster.width));
  put_f64(out, raster.meters_per_cell);
  put_f64(out, raster.origin.x());
  put_f64(out, raster.origin.y());
  for (Eigen::Index i = 0; i < raster.grid.size(); ++i) put_f32(out, raster.grid[i]);
  if (!out) throw FormatError("short write to raster file: " + path.string());
}

SceneRaster load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open raster file: " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("raster: bad magic in " + path.string());
  }
  SceneRaster r;
  r.channels = static_cast<int>(get_u32(in, "channels"));
  r.height = static_cast<int>(get_u32(in, "height"));
  r.width = static_cast<int>(get_u32(in, "width"));
  if (r.channels < 1 || r.height < 1 || r.width < 1 || r.channels > 64 || r.height > 65536 ||
      r.width > 65536) {
    throw FormatError("raster: implausible dimensions in " + path.string());
  }
  r.meters_per_cell = get_f64(in, "meters_per_cell");
  r.origin.x() = get_f64(in, "origin");
  r.origin.y() = get_f64(in, "origin");
  const Eigen::Index n = static_cast<Eigen::Index>(r.channels) * r.height * r.width;
  r.grid.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) r.grid[i] = get_f32(in, "grid");
  r.validate();
  return r;
}

SceneRaster raster_from_text(std::istream& in, const std::string& origin_name, int channels,
                             double meters_per_cell, const Eigen::Vector2d& origin) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw FormatError(origin_name + ": empty label grid");
  const int height = static_cast<int>(lines.size());
  const int width = static_cast<int>(lines[0].size());
  SceneRaster r;
  r.channels = channels;
  r.height = height;
  r.width = width;
  r.meters_per_cell = meters_per_cell;
  r.origin = origin;
  r.grid = VecX<float>::Zero(static_cast<Eigen::Index>(channels) * height * width);
  for (int row = 0; row < height; ++row) {
    if (static_cast<int>(lines[static_cast<std::size_t>(row)].size()) != width) {
      throw FormatError(origin_name + ": ragged label grid at line " + std::to_string(row + 1));
    }
    for (int col = 0; col < width; ++col) {
      const char ch = lines[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
      if (ch < '0' || ch > '9') {
        throw FormatError(origin_name + ": non-digit label '" + std::string(1, ch) + "'");
      }
      const int cls = ch - '0';
      if (cls >= channels) {
        throw FormatError(origin_name + ": label " + std::to_string(cls) + " exceeds " +
                          std::to_string(channels) + " classes");
      }
      r.grid[(static_cast<Eigen::Index>(cls) * height + row) * width + col] = 1.0f;
    }
  }
  r.validate();
  return r;
}

SceneRaster make_uniform_raster(int channels, int height, int width, double meters_per_cell,
                                const Eigen::Vector2d& origin) {
  SceneRaster r;
  r.channels = channels;
  r.height = height;
  r.width = width;
  r.meters_per_cell = meters_per_cell;
  r.origin = origin;
  r.grid = VecX<float>::Zero(static_cast<Eigen::Index>(channels) * height * width);
  r.grid.head(static_cast<Eigen::Index>(height) * width).setOnes();
  return r;
}

SceneRaster rotate90_raster(const SceneRaster& src) {
  SceneRaster out;
  out.channels = src.channels;
  out.height = src.width;
  out.width = src.height;
  out.meters_per_cell = src.meters_per_cell;
  // The rotated grid covers the rotated bounding box: x' in
  // [-(oy + H m), -oy], y' in [ox, ox + W m].
  out.origin = {-(src.origin.y() + src.height * src.meters_per_cell), src.origin.x()};
  out.grid = VecX<float>::Zero(src.grid.size());
  for (int c = 0; c < src.channels; ++c) {
    for (int row = 0; row < src.height; ++row) {
      for (int col = 0; col < src.width; ++col) {
        // Old cell (row, col) lands at (row'=col, col'=H-1-row).
        const int nrow = col;
        const int ncol = src.height - 1 - row;
        out.grid[(static_cast<Eigen::Index>(c) * out.height + nrow) * out.width + ncol] =
            src.at(c, row, col);
      }
    }
  }
  return out;
}

MergeMode parse_merge_mode(const std::string& s) {
  if (s == "gating") return MergeMode::gating;
  if (s == "add") return MergeMode::add;
  if (s == "concat") return MergeMode::concat;
  throw ConfigError("unknown merge mode '" + s + "' (expected gating|add|concat)");
}

std::string merge_mode_name(MergeMode m) {
  switch (m) {
    case MergeMode::gating:
      return "gating";
    case MergeMode::add:
      return "add";
    case MergeMode::concat:
      return "concat";
  }
  return "?";
}

}  // namespace sgsg
