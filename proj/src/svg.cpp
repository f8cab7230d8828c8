#include "sgsg/svg.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "sgsg/error.hpp"

namespace sgsg {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream ss(line);
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

}  // namespace

void write_scene_svg(const std::filesystem::path& path, const std::string& scene,
                     const std::vector<PlotWindow>& windows, int size_px) {
  double min_x = std::numeric_limits<double>::max(), max_x = std::numeric_limits<double>::lowest();
  double min_y = min_x, max_y = max_x;
  for (const auto& w : windows) {
    for (const auto& t : w.tracks) {
      for (const auto& p : t.points) {
        min_x = std::min(min_x, p.x());
        max_x = std::max(max_x, p.x());
        min_y = std::min(min_y, p.y());
        max_y = std::max(max_y, p.y());
      }
    }
  }
  if (min_x > max_x) throw FormatError("plot: no points for scene " + scene);
  const double span = std::max(std::max(max_x - min_x, max_y - min_y), 1e-9);
  const double margin = 0.05 * span;
  min_x -= margin;
  min_y -= margin;
  const double scale = static_cast<double>(size_px) / (span + 2.0 * margin);

  // SVG y grows downward; flip so +y in meters points up.
  auto px = [&](const Eigen::Vector2d& p) {
    return Eigen::Vector2d((p.x() - min_x) * scale,
                           static_cast<double>(size_px) - (p.y() - min_y) * scale);
  };

  std::ofstream out(path);
  if (!out) throw FormatError("cannot write svg: " + path.string());
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size_px << "\" height=\""
      << size_px << "\">\n";
  out << "<title>" << scene << "</title>\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n";

  auto emit_group = [&](const char* kind, const char* stroke, double opacity, double width) {
    out << "<g class=\"" << kind << "\" fill=\"none\" stroke=\"" << stroke
        << "\" stroke-opacity=\"" << opacity << "\" stroke-width=\"" << width << "\">\n";
    for (const auto& w : windows) {
      for (const auto& t : w.tracks) {
        if (t.kind != kind || t.points.empty()) continue;
        out << "<polyline points=\"";
        for (const auto& p : t.points) {
          const Eigen::Vector2d q = px(p);
          out << q.x() << "," << q.y() << " ";
        }
        out << "\"/>\n";
      }
    }
    out << "</g>\n";
  };
  emit_group("pred", "#e75480", 0.45, 1.0);
  emit_group("obs", "#d7a021", 0.9, 2.0);
  emit_group("gt", "#2e8b57", 0.9, 2.0);
  out << "</svg>\n";
}

int plot_predictions(const std::filesystem::path& dump_csv, const std::filesystem::path& out_dir) {
  std::ifstream in(dump_csv);
  if (!in) throw FormatError("cannot open predictions dump: " + dump_csv.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty predictions dump");
  if (line.rfind("scene,window,poi,start_frame,kind,k,t,x_m,y_m", 0) != 0) {
    throw FormatError("predictions dump has an unexpected header: " + line);
  }

  // scene -> window id -> (kind,k) -> points, in row order.
  std::map<std::string, std::map<long, PlotWindow>> scenes;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) {
      throw FormatError(dump_csv.string() + ":" + std::to_string(line_no) + ": bad row");
    }
    try {
      const std::string& scene = f[0];
      const long window = std::stol(f[1]);
      PlotWindow& pw = scenes[scene][window];
      pw.window = window;
      pw.poi = std::stol(f[2]);
      const std::string& kind = f[4];
      const int k = std::stoi(f[5]);
      PlotTrack* track = nullptr;
      for (auto& t : pw.tracks) {
        if (t.kind == kind && t.k == k) track = &t;
      }
      if (track == nullptr) {
        pw.tracks.push_back(PlotTrack{kind, k, {}});
        track = &pw.tracks.back();
      }
      track->points.emplace_back(std::stod(f[7]), std::stod(f[8]));
    } catch (const std::exception&) {
      throw FormatError(dump_csv.string() + ":" + std::to_string(line_no) + ": bad row");
    }
  }

  std::filesystem::create_directories(out_dir);
  int written = 0;
  for (const auto& [scene, windows] : scenes) {
    std::vector<PlotWindow> list;
    list.reserve(windows.size());
    for (const auto& [id, w] : windows) list.push_back(w);
    write_scene_svg(out_dir / (scene + ".svg"), scene, list);
    ++written;
  }
  return written;
}

}  // namespace sgsg
