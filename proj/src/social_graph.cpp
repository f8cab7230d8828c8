#include "sgsg/social_graph.hpp"

namespace sgsg {

StarGraphSeq build_star_graph_seq(const TrajWindow& window, const NeighborIndex& index,
                                  const NormParams& norm) {
  StarGraphSeq seq;
  seq.poi = window.poi;
  const int t_obs = static_cast<int>(window.obs.size());
  seq.poi_pos.reserve(static_cast<std::size_t>(t_obs));
  seq.neighbor_ids.resize(static_cast<std::size_t>(t_obs));
  seq.neighbor_pos.resize(static_cast<std::size_t>(t_obs));
  for (int t = 0; t < t_obs; ++t) {
    seq.poi_pos.push_back(norm.normalize(window.obs[static_cast<std::size_t>(t)]));
    const long frame = window.start_frame + t * window.frame_stride;
    for (const auto& [ped, pos] : index.neighbors_at(frame, window.poi)) {
      seq.neighbor_ids[static_cast<std::size_t>(t)].push_back(ped);
      seq.neighbor_pos[static_cast<std::size_t>(t)].push_back(norm.normalize(pos));
    }
  }
  return seq;
}

}  // namespace sgsg
