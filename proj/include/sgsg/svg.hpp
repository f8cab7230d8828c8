#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace sgsg {

/// One polyline of a window plot: kind is "obs", "gt", or "pred" (with its
/// sample index); coordinates in meters.
struct PlotTrack {
  std::string kind;
  int k = -1;
  std::vector<Eigen::Vector2d> points;
};

struct PlotWindow {
  long window = 0;
  long poi = 0;
  std::vector<PlotTrack> tracks;
};

/// Writes one SVG with grouped polylines: observed, ground truth, and the K
/// sampled predictions per window.
void write_scene_svg(const std::filesystem::path& path, const std::string& scene,
                     const std::vector<PlotWindow>& windows, int size_px = 800);

/// Renders a predictions dump (write_predictions_csv output) into one SVG per
/// scene under out_dir; returns the number of files written.
int plot_predictions(const std::filesystem::path& dump_csv, const std::filesystem::path& out_dir);

}  // namespace sgsg
