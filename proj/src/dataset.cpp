#include "sgsg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace sgsg {

namespace {

bool parse_double(const std::string& tok, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(tok, &pos);
    return pos == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

// Per-pedestrian frame sequences, in ped order.
std::map<long, std::vector<RawAnnotation>> group_by_ped(std::vector<RawAnnotation> rows) {
  std::map<long, std::vector<RawAnnotation>> by_ped;
  for (auto& r : rows) by_ped[r.ped].push_back(r);
  for (auto& [ped, track] : by_ped) {
    std::sort(track.begin(), track.end(),
              [](const RawAnnotation& a, const RawAnnotation& b) { return a.frame < b.frame; });
  }
  return by_ped;
}

}  // namespace

ParsedScene parse_scene_text(std::istream& in, const std::string& origin) {
  std::vector<RawAnnotation> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (toks.size() != 4) {
      throw FormatError(origin + ":" + std::to_string(line_no) +
                        ": expected 4 columns (frame ped x y), got " +
                        std::to_string(toks.size()));
    }
    double f, p, x, y;
    if (!parse_double(toks[0], f) || !parse_double(toks[1], p) || !parse_double(toks[2], x) ||
        !parse_double(toks[3], y)) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": malformed row '" + line + "'");
    }
    rows.push_back(RawAnnotation{static_cast<long>(std::llround(f)),
                                 static_cast<long>(std::llround(p)), x, y});
  }

  ParsedScene out;
  auto by_ped = group_by_ped(std::move(rows));

  // Duplicate (frame, ped) pairs violate the uniqueness invariant.
  for (const auto& [ped, track] : by_ped) {
    for (std::size_t i = 1; i < track.size(); ++i) {
      if (track[i].frame == track[i - 1].frame) {
        throw FormatError(origin + ": duplicate annotation for ped " + std::to_string(ped) +
                          " at frame " + std::to_string(track[i].frame));
      }
    }
  }

  // Modal inter-frame gap; ties resolved towards the smaller gap.
  std::map<long, long> gap_count;
  for (const auto& [ped, track] : by_ped) {
    for (std::size_t i = 1; i < track.size(); ++i) {
      ++gap_count[track[i].frame - track[i - 1].frame];
    }
  }
  long stride = 0, best = 0;
  for (const auto& [gap, count] : gap_count) {
    if (count > best) {
      best = count;
      stride = gap;
    }
  }
  out.stride = stride;

  // Keep rows whose gap from the previously kept row is a multiple of the
  // stride. A small non-multiple gap is an off-grid row and is dropped; a
  // large one is treated as a track restart at a new grid anchor.
  for (auto& [ped, track] : by_ped) {
    const RawAnnotation* prev = nullptr;
    for (const auto& r : track) {
      if (stride > 0 && prev != nullptr) {
        const long gap = r.frame - prev->frame;
        if (gap % stride != 0 && gap < 2 * stride) {
          ++out.dropped_off_stride;
          continue;
        }
      }
      out.annotations.push_back(r);
      prev = &out.annotations.back();
    }
  }
  return out;
}

ParsedScene parse_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open annotation file: " + path.string());
  return parse_scene_text(in, path.string());
}

std::vector<TrajWindow> build_windows(const ParsedScene& scene, const std::string& scene_name,
                                      int t_obs, int t_pred) {
  std::vector<TrajWindow> out;
  if (scene.stride <= 0) return out;
  const int len = t_obs + t_pred;

  // Maximal contiguous tracks at the annotation stride.
  std::vector<const RawAnnotation*> track;
  auto flush = [&]() {
    const int n = static_cast<int>(track.size());
    for (int s = 0; s + len <= n; ++s) {
      TrajWindow w;
      w.scene = scene_name;
      w.poi = track[static_cast<std::size_t>(s)]->ped;
      w.start_frame = track[static_cast<std::size_t>(s)]->frame;
      w.frame_stride = scene.stride;
      for (int i = 0; i < t_obs; ++i) {
        const auto* a = track[static_cast<std::size_t>(s + i)];
        w.obs.emplace_back(a->x, a->y);
      }
      for (int i = t_obs; i < len; ++i) {
        const auto* a = track[static_cast<std::size_t>(s + i)];
        w.gt.emplace_back(a->x, a->y);
      }
      out.push_back(std::move(w));
    }
    track.clear();
  };

  for (const auto& a : scene.annotations) {
    if (!track.empty() &&
        (a.ped != track.back()->ped || a.frame != track.back()->frame + scene.stride)) {
      flush();
    }
    track.push_back(&a);
  }
  flush();
  return out;
}

NormParams fit_norm(std::span<const TrajWindow> windows) {
  bool any = false;
  NormParams np;
  np.min_x = np.min_y = std::numeric_limits<double>::max();
  np.max_x = np.max_y = std::numeric_limits<double>::lowest();
  auto absorb = [&](const Eigen::Vector2d& p) {
    np.min_x = std::min(np.min_x, p.x());
    np.max_x = std::max(np.max_x, p.x());
    np.min_y = std::min(np.min_y, p.y());
    np.max_y = std::max(np.max_y, p.y());
    any = true;
  };
  for (const auto& w : windows) {
    for (const auto& p : w.obs) absorb(p);
    for (const auto& p : w.gt) absorb(p);
  }
  if (!any) throw ConfigError("fit_norm: no training points");
  if (np.max_x <= np.min_x || np.max_y <= np.min_y) {
    throw ConfigError("fit_norm: degenerate coordinate range");
  }
  return np;
}

NeighborIndex::NeighborIndex(std::span<const RawAnnotation> annotations) {
  for (const auto& a : annotations) {
    by_frame_[a.frame].emplace_back(a.ped, Eigen::Vector2d(a.x, a.y));
  }
  for (auto& [frame, peds] : by_frame_) {
    std::sort(peds.begin(), peds.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
}

std::vector<std::pair<long, Eigen::Vector2d>> NeighborIndex::neighbors_at(long frame,
                                                                          long poi) const {
  std::vector<std::pair<long, Eigen::Vector2d>> out;
  auto it = by_frame_.find(frame);
  if (it == by_frame_.end()) return out;
  for (const auto& entry : it->second) {
    if (entry.first != poi) out.push_back(entry);
  }
  return out;
}

int NeighborIndex::count_at(long frame) const {
  auto it = by_frame_.find(frame);
  return it == by_frame_.end() ? 0 : static_cast<int>(it->second.size());
}

TrajWindow rotate90_window(const TrajWindow& w, const std::string& rotated_scene_name) {
  TrajWindow out = w;
  out.scene = rotated_scene_name;
  for (auto& p : out.obs) p = rotate90(p);
  for (auto& p : out.gt) p = rotate90(p);
  return out;
}

SceneData make_scene_data(std::string name, ParsedScene parsed) {
  SceneData sd;
  sd.name = std::move(name);
  sd.windows = build_windows(parsed, sd.name);
  sd.index = NeighborIndex(parsed.annotations);
  sd.parsed = std::move(parsed);
  return sd;
}

SceneData load_scene(const std::string& name, const std::filesystem::path& path) {
  return make_scene_data(name, parse_scene(path));
}

SceneData rotate90_scene(const SceneData& scene, const std::string& rotated_name) {
  ParsedScene rotated = scene.parsed;
  for (auto& a : rotated.annotations) {
    const Eigen::Vector2d p = rotate90({a.x, a.y});
    a.x = p.x();
    a.y = p.y();
  }
  return make_scene_data(rotated_name, std::move(rotated));
}

LeaveOneOut leave_one_out_split(std::span<const SceneSpec> scenes, const std::string& held_out) {
  LeaveOneOut split;
  bool found = false;
  for (const auto& s : scenes) {
    if (s.name == held_out) {
      split.test = s;
      found = true;
    } else {
      split.train.push_back(s);
    }
  }
  if (!found) throw ConfigError("held-out scene '" + held_out + "' is not in the scene list");
  if (split.train.empty()) {
    throw ConfigError("leave-one-out split needs at least one training scene");
  }
  return split;
}

}  // namespace sgsg
