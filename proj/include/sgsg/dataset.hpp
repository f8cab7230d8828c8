#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgsg/error.hpp"

namespace sgsg {

constexpr int kObsLen = 8;
constexpr int kPredLen = 12;
constexpr int kWindowLen = kObsLen + kPredLen;

/// One annotated observation: pedestrian `ped` at world position (x,y) in
/// meters at frame `frame`.
struct RawAnnotation {
  long frame = 0;
  long ped = 0;
  double x = 0.0;
  double y = 0.0;
};

/// Parse result: annotations sorted by (ped, frame), the auto-detected
/// annotation stride (modal inter-frame gap), and how many off-stride rows
/// were dropped.
struct ParsedScene {
  std::vector<RawAnnotation> annotations;
  long stride = 0;
  long dropped_off_stride = 0;
};

ParsedScene parse_scene(const std::filesystem::path& path);
ParsedScene parse_scene_text(std::istream& in, const std::string& origin);

/// One POI's fixed-length window: 8 observed and 12 ground-truth points in
/// meters, frames contiguous at the scene's annotation stride.
struct TrajWindow {
  std::string scene;
  long poi = 0;
  long start_frame = 0;
  long frame_stride = 0;
  std::vector<Eigen::Vector2d> obs;
  std::vector<Eigen::Vector2d> gt;
};

std::vector<TrajWindow> build_windows(const ParsedScene& scene, const std::string& scene_name,
                                      int t_obs = kObsLen, int t_pred = kPredLen);

/// Per-axis affine map [min,max] -> [-1,1]. Points outside the fitted bounds
/// map outside [-1,1] and are never clamped.
struct NormParams {
  double min_x = 0.0, max_x = 1.0;
  double min_y = 0.0, max_y = 1.0;

  Eigen::Vector2d normalize(const Eigen::Vector2d& p) const {
    return {2.0 * (p.x() - min_x) / (max_x - min_x) - 1.0,
            2.0 * (p.y() - min_y) / (max_y - min_y) - 1.0};
  }
  Eigen::Vector2d denormalize(const Eigen::Vector2d& p) const {
    return {(p.x() + 1.0) * 0.5 * (max_x - min_x) + min_x,
            (p.y() + 1.0) * 0.5 * (max_y - min_y) + min_y};
  }
};

NormParams fit_norm(std::span<const TrajWindow> windows);

/// frame -> co-present pedestrians with positions, sorted by ped id.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  explicit NeighborIndex(std::span<const RawAnnotation> annotations);

  /// Everyone annotated at `frame` except the POI; possibly empty.
  std::vector<std::pair<long, Eigen::Vector2d>> neighbors_at(long frame, long poi) const;

  /// Number of pedestrians annotated at `frame`.
  int count_at(long frame) const;

  const std::map<long, std::vector<std::pair<long, Eigen::Vector2d>>>& frames() const {
    return by_frame_;
  }

 private:
  std::map<long, std::vector<std::pair<long, Eigen::Vector2d>>> by_frame_;
};

inline Eigen::Vector2d rotate90(const Eigen::Vector2d& p) { return {-p.y(), p.x()}; }

TrajWindow rotate90_window(const TrajWindow& w, const std::string& rotated_scene_name);

/// A scene's parsed annotations plus the derived windows and neighbor index.
struct SceneData {
  std::string name;
  ParsedScene parsed;
  std::vector<TrajWindow> windows;
  NeighborIndex index;
};

SceneData make_scene_data(std::string name, ParsedScene parsed);
SceneData load_scene(const std::string& name, const std::filesystem::path& path);

/// Rotates every annotation by 90 degrees and rebuilds windows and index, so
/// neighbor positions stay consistent with the rotated trajectories.
SceneData rotate90_scene(const SceneData& scene, const std::string& rotated_name);

/// Manifest entry: where a scene's annotations and raster live.
struct SceneSpec {
  std::string name;
  std::filesystem::path annotations;
  std::filesystem::path raster;
};

struct LeaveOneOut {
  std::vector<SceneSpec> train;
  SceneSpec test;
};

LeaveOneOut leave_one_out_split(std::span<const SceneSpec> scenes, const std::string& held_out);

}  // namespace sgsg
