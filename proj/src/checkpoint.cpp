#include "sgsg/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>

namespace sgsg {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'G', 'S', 'G', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw FormatError("checkpoint: unexpected end of file reading " + what);
  }
  return std::uint32_t(bytes[0]) | (std::uint32_t(bytes[1]) << 8) |
         (std::uint32_t(bytes[2]) << 16) | (std::uint32_t(bytes[3]) << 24);
}

}  // namespace

void save_checkpoint_raw(const std::filesystem::path& path,
                         const std::vector<CheckpointTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const auto& t : tensors) {
    for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw FormatError("short write to checkpoint: " + path.string());
}

std::vector<CheckpointTensor> load_checkpoint_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("checkpoint: bad magic in " + path.string());
  }
  const std::uint32_t version = get_u32(in, "version");
  if (version != kVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(in, "tensor count");
  if (count > 1u << 20) throw FormatError("checkpoint: implausible tensor count");

  std::vector<CheckpointTensor> tensors(count);
  for (auto& t : tensors) {
    const std::uint32_t name_len = get_u32(in, "name length");
    if (name_len == 0 || name_len > 4096) throw FormatError("checkpoint: bad name length");
    t.name.resize(name_len);
    if (!in.read(t.name.data(), name_len)) {
      throw FormatError("checkpoint: unexpected end of file reading name");
    }
    const std::uint32_t rank = get_u32(in, "rank");
    if (rank == 0 || rank > 8) throw FormatError("checkpoint: bad tensor rank");
    t.shape.resize(rank);
    for (auto& d : t.shape) {
      d = static_cast<int>(get_u32(in, "dimension"));
      if (d < 1) throw FormatError("checkpoint: bad dimension");
    }
  }
  for (auto& t : tensors) {
    t.data.resize(static_cast<std::size_t>(shape_numel(t.shape)));
    for (auto& v : t.data) v = std::bit_cast<float>(get_u32(in, "payload"));
  }
  // Trailing bytes mean the header and payload disagree.
  char extra;
  if (in.read(&extra, 1)) throw FormatError("checkpoint: trailing bytes in " + path.string());
  return tensors;
}

}  // namespace sgsg
