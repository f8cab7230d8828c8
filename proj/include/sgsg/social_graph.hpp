#pragma once

#include <span>
#include <vector>

#include "sgsg/dataset.hpp"
#include "sgsg/layers.hpp"

namespace sgsg {

/// Per-timestep star graph around one POI over the observation period:
/// the POI node plus an edge to every co-present pedestrian, no
/// neighbor-neighbor edges. Positions are normalized coordinates; neighbor
/// lists are sorted by ped id so aggregation order is reproducible.
struct StarGraphSeq {
  long poi = -1;
  std::vector<Eigen::Vector2d> poi_pos;
  std::vector<std::vector<long>> neighbor_ids;
  std::vector<std::vector<Eigen::Vector2d>> neighbor_pos;

  int steps() const { return static_cast<int>(poi_pos.size()); }
  int edges_at(int t) const {
    return static_cast<int>(neighbor_ids[static_cast<std::size_t>(t)].size());
  }
};

StarGraphSeq build_star_graph_seq(const TrajWindow& window, const NeighborIndex& index,
                                  const NormParams& norm);

/// Messages needed to encode one POI's star graph at a timestep with n
/// pedestrians present, and the edge count of the full graph for reference.
inline long star_edges(int n_pedestrians) { return n_pedestrians - 1; }
inline long complete_edges(int n_pedestrians) {
  return static_cast<long>(n_pedestrians) * (n_pedestrians - 1) / 2;
}

template <typename Scalar>
struct GcnVars {
  Var<Scalar> w;  // {d_out, 2}
  Var<Scalar> b;  // {d_out}
};

/// Single graph-convolution layer over the star graph: per timestep,
/// a_t = ReLU(b + mean_j W x_j) over the neighbors' coordinates (layer-0
/// embeddings). An empty neighborhood contributes a zero aggregate, the
/// continuous limit of the mean, so a_t = ReLU(b). With `self_loop` the POI's
/// own coordinates join the aggregation.
template <typename Scalar>
std::vector<Var<Scalar>> gcn_forward(Tape<Scalar>& tape, const GcnVars<Scalar>& p,
                                     const StarGraphSeq& seq, bool self_loop = false) {
  const int d_out = p.w.value().dim(0);
  std::vector<Var<Scalar>> out;
  out.reserve(static_cast<std::size_t>(seq.steps()));
  const auto as_leaf = [&tape](const Eigen::Vector2d& pos) {
    VecX<Scalar> v(2);
    v << static_cast<Scalar>(pos.x()), static_cast<Scalar>(pos.y());
    return make_vec(tape, std::move(v));
  };
  for (int t = 0; t < seq.steps(); ++t) {
    const auto& neigh = seq.neighbor_pos[static_cast<std::size_t>(t)];
    std::vector<Var<Scalar>> messages;
    messages.reserve(neigh.size() + 1);
    for (const auto& pos : neigh) {
      messages.push_back(matvec(p.w, as_leaf(pos)));
    }
    if (self_loop) {
      messages.push_back(matvec(p.w, as_leaf(seq.poi_pos[static_cast<std::size_t>(t)])));
    }
    Var<Scalar> agg;
    if (messages.empty()) {
      agg = make_zeros(tape, d_out);
    } else {
      agg = average(std::span<const Var<Scalar>>(messages));
    }
    out.push_back(relu(add(p.b, agg)));
  }
  return out;
}

/// Encodes the per-timestep graph embeddings with an LSTM from a zero state;
/// returns the final hidden state g.
template <typename Scalar>
Var<Scalar> social_encode(Tape<Scalar>& tape, const LstmVars<Scalar>& p,
                          std::span<const Var<Scalar>> embeddings) {
  return run_lstm(tape, p, embeddings);
}

}  // namespace sgsg
