#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sgsg/params.hpp"

namespace sgsg {

/// Self-describing tensor container: a header listing names and shapes,
/// followed by little-endian f32 payloads in header order. Loading a file
/// whose names or shapes disagree with the target store is a format error.
struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

void save_checkpoint_raw(const std::filesystem::path& path,
                         const std::vector<CheckpointTensor>& tensors);
std::vector<CheckpointTensor> load_checkpoint_raw(const std::filesystem::path& path);

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<Scalar>& params) {
  std::vector<CheckpointTensor> tensors;
  for (const auto& [name, entry] : params.entries()) {
    CheckpointTensor t;
    t.name = name;
    t.shape = entry.value.shape;
    t.data.resize(static_cast<std::size_t>(entry.value.numel()));
    for (Eigen::Index i = 0; i < entry.value.numel(); ++i) {
      t.data[static_cast<std::size_t>(i)] = static_cast<float>(entry.value.data[i]);
    }
    tensors.push_back(std::move(t));
  }
  save_checkpoint_raw(path, tensors);
}

template <typename Scalar>
void load_checkpoint(const std::filesystem::path& path, ParamStore<Scalar>& params) {
  const auto tensors = load_checkpoint_raw(path);
  if (tensors.size() != params.entries().size()) {
    throw FormatError("checkpoint " + path.string() + " holds " +
                      std::to_string(tensors.size()) + " tensors, model expects " +
                      std::to_string(params.entries().size()));
  }
  for (const auto& t : tensors) {
    if (!params.has(t.name)) {
      throw FormatError("checkpoint tensor '" + t.name + "' is not a model parameter");
    }
    Tensor<Scalar>& dst = params.value(t.name);
    if (dst.shape != t.shape) {
      throw FormatError("checkpoint tensor '" + t.name + "' has shape " + shape_str(t.shape) +
                        ", model expects " + shape_str(dst.shape));
    }
    for (Eigen::Index i = 0; i < dst.numel(); ++i) {
      dst.data[i] = static_cast<Scalar>(t.data[static_cast<std::size_t>(i)]);
    }
  }
}

}  // namespace sgsg
