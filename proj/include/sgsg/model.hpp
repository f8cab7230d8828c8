#pragma once

#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sgsg/checkpoint.hpp"
#include "sgsg/random.hpp"
#include "sgsg/scene.hpp"
#include "sgsg/social_graph.hpp"

namespace sgsg {

struct ModelOptions {
  bool use_social = true;
  bool use_scene = true;
  bool use_vae = true;
  MergeMode merge = MergeMode::gating;
  bool gcn_self_loop = false;
  bool tie_decoder_embedding = true;
  bool prior_sampling = false;  // sample z from N(0,I) instead of Q(z|G) at inference

  int embed_dim = 32;       // phi output and GCN output
  int hidden_dim = 32;      // social/history LSTM hidden and feature width
  int dec_hidden_dim = 64;  // must equal 2 * hidden_dim (feature (+) history)
  int latent_dim = 8;

  int scene_channels = 3;
  int scene_height = 64;
  int scene_width = 64;
  int scene_conv1 = 8;
  int scene_conv2 = 16;

  double gamma_clamp = 50.0;  // log-variance clamp before exponentiation
};

/// Drawn latent with the retained noise, for reproducible sample dumps.
template <typename Scalar>
struct LatentSample {
  VecX<Scalar> mu, gamma, z, eps;
};

/// Sum of squared displacement over all predicted points (normalized
/// coordinates), the L2 part of the training loss.
template <typename Scalar>
Var<Scalar> l2_trajectory_loss(Tape<Scalar>& tape, std::span<const Var<Scalar>> pred,
                               std::span<const Eigen::Vector2d> gt) {
  if (pred.size() != gt.size()) {
    throw ShapeError("loss: prediction and ground truth lengths differ");
  }
  Var<Scalar> total = make_scalar(tape, Scalar(0));
  for (std::size_t t = 0; t < gt.size(); ++t) {
    VecX<Scalar> g(2);
    g << static_cast<Scalar>(gt[t].x()), static_cast<Scalar>(gt[t].y());
    total = add(total, sum_squares(sub(pred[t], make_vec(tape, std::move(g)))));
  }
  return total;
}

/// Inputs for one window, already normalized.
struct ModelInput {
  std::vector<Eigen::Vector2d> obs;  // T_obs points
  std::vector<Eigen::Vector2d> gt;   // T_pred points (empty at pure inference)
  StarGraphSeq graph;
  const SceneRaster* raster = nullptr;
};

/// The full network: star-graph social encoder, scene encoder with gating,
/// VAE over the merged feature, and the LSTM trajectory encoder-decoder.
template <typename Scalar>
class SgsgModel {
 public:
  SgsgModel(ModelOptions opt, std::uint64_t init_seed) : opt_(opt) {
    if (!opt_.use_social && !opt_.use_scene) {
      throw ConfigError("model needs at least one of the social or scene encoders");
    }
    if (opt_.dec_hidden_dim != opt_.hidden_dim + feature_dim()) {
      throw ConfigError("decoder hidden size " + std::to_string(opt_.dec_hidden_dim) +
                        " must equal feature+history width " +
                        std::to_string(opt_.hidden_dim + feature_dim()));
    }
    init_params(init_seed);
  }

  const ModelOptions& options() const { return opt_; }
  ParamStore<Scalar>& params() { return params_; }
  const ParamStore<Scalar>& params() const { return params_; }

  int feature_dim() const { return opt_.hidden_dim; }

  /// Flattened size after the two conv+pool stages.
  int scene_flat_dim() const {
    const int h = opt_.scene_height / 4;
    const int w = opt_.scene_width / 4;
    if (h < 1 || w < 1) throw ConfigError("scene raster too small for two pooling stages");
    return opt_.scene_conv2 * h * w;
  }

  /// Tape leaves for every enabled parameter; create once per tape.
  struct Bound {
    GcnVars<Scalar> gcn;
    LstmVars<Scalar> social;
    Var<Scalar> embed_w, embed_b;
    Var<Scalar> dec_embed_w, dec_embed_b;
    LstmVars<Scalar> enc;
    SceneEncoderVars<Scalar> scene;
    std::optional<Var<Scalar>> merge_w, merge_b;
    Var<Scalar> vae_enc_w, vae_enc_b, vae_dec_w, vae_dec_b;
    LstmVars<Scalar> dec;
    Var<Scalar> out_w, out_b;
  };

  Bound bind(Tape<Scalar>& tape) const {
    Bound b;
    if (opt_.use_social) {
      b.gcn = {params_.bind(tape, "gcn.w"), params_.bind(tape, "gcn.b")};
      b.social = bind_lstm(tape, "social_lstm");
    }
    b.embed_w = params_.bind(tape, "embed.w");
    b.embed_b = params_.bind(tape, "embed.b");
    if (opt_.tie_decoder_embedding) {
      b.dec_embed_w = b.embed_w;
      b.dec_embed_b = b.embed_b;
    } else {
      b.dec_embed_w = params_.bind(tape, "dec_embed.w");
      b.dec_embed_b = params_.bind(tape, "dec_embed.b");
    }
    b.enc = bind_lstm(tape, "enc_lstm");
    if (opt_.use_scene) {
      b.scene = {params_.bind(tape, "scene.conv1.w"), params_.bind(tape, "scene.conv1.b"),
                 params_.bind(tape, "scene.conv2.w"), params_.bind(tape, "scene.conv2.b"),
                 params_.bind(tape, "scene.fc.w"),    params_.bind(tape, "scene.fc.b")};
    }
    if (has_merge_projection()) {
      b.merge_w = params_.bind(tape, "merge.w");
      b.merge_b = params_.bind(tape, "merge.b");
    }
    if (opt_.use_vae) {
      b.vae_enc_w = params_.bind(tape, "vae_enc.w");
      b.vae_enc_b = params_.bind(tape, "vae_enc.b");
      b.vae_dec_w = params_.bind(tape, "vae_dec.w");
      b.vae_dec_b = params_.bind(tape, "vae_dec.b");
    }
    b.dec = bind_lstm(tape, "dec_lstm");
    b.out_w = params_.bind(tape, "out.w");
    b.out_b = params_.bind(tape, "out.b");
    return b;
  }

  Var<Scalar> social_feature(Tape<Scalar>& tape, const Bound& b, const StarGraphSeq& seq) const {
    std::vector<Var<Scalar>> emb = gcn_forward(tape, b.gcn, seq, opt_.gcn_self_loop);
    return social_encode(tape, b.social, std::span<const Var<Scalar>>(emb));
  }

  Var<Scalar> scene_feature(Tape<Scalar>& tape, const Bound& b, const SceneRaster& raster) const {
    if (raster.channels != opt_.scene_channels || raster.height != opt_.scene_height ||
        raster.width != opt_.scene_width) {
      throw ShapeError("raster is " + std::to_string(raster.channels) + "x" +
                       std::to_string(raster.height) + "x" + std::to_string(raster.width) +
                       ", model expects " + std::to_string(opt_.scene_channels) + "x" +
                       std::to_string(opt_.scene_height) + "x" + std::to_string(opt_.scene_width));
    }
    return encode_scene(tape, b.scene, raster);
  }

  /// The feature entering the VAE/decoder: gated/added/concat-projected when
  /// both encoders run, otherwise whichever single feature is enabled.
  Var<Scalar> merged_feature(const Bound& b, std::optional<Var<Scalar>> g,
                             std::optional<Var<Scalar>> s) const {
    if (g && s) return merge_features(*s, *g, opt_.merge, b.merge_w, b.merge_b);
    if (g) return *g;
    if (s) return *s;
    throw ConfigError("no upstream feature enabled");
  }

  Var<Scalar> history_feature(Tape<Scalar>& tape, const Bound& b,
                              std::span<const Eigen::Vector2d> obs) const {
    std::vector<Var<Scalar>> embedded;
    embedded.reserve(obs.size());
    for (const auto& p : obs) {
      embedded.push_back(affine(make_point(tape, p), b.embed_w, b.embed_b));
    }
    return run_lstm(tape, b.enc, std::span<const Var<Scalar>>(embedded));
  }

  struct LatentVars {
    Var<Scalar> mu, gamma, z;
    VecX<Scalar> eps;
  };

  /// VAE encoder + reparameterized draw: one affine map splits into mu and
  /// log-variance gamma; z = mu + exp(gamma/2) (.) eps. Gradients flow
  /// through mu and gamma only.
  LatentVars sample_latent(Tape<Scalar>& tape, const Bound& b, Var<Scalar> merged,
                           VecX<Scalar> eps) const {
    const int L = opt_.latent_dim;
    Var<Scalar> enc = affine(merged, b.vae_enc_w, b.vae_enc_b);
    Var<Scalar> mu = slice(enc, 0, L);
    Var<Scalar> gamma =
        clamp(slice(enc, L, L), Scalar(-opt_.gamma_clamp), Scalar(opt_.gamma_clamp));
    Var<Scalar> sigma = sgsg::exp(scale(gamma, Scalar(0.5)));
    Var<Scalar> z = add(mu, mul(sigma, make_vec(tape, eps)));
    return {mu, gamma, z, std::move(eps)};
  }

  /// VAE decoder: affine with ReLU back to the feature width.
  Var<Scalar> reconstruct(const Bound& b, Var<Scalar> z) const {
    return relu(affine(z, b.vae_dec_w, b.vae_dec_b));
  }

  /// Recurrent prediction. The decoder hidden state starts as feature (+)
  /// history (cell state zero); the first input is the embedded last observed
  /// point, after which each step embeds its own previous output (or the
  /// ground truth when teacher forcing).
  std::vector<Var<Scalar>> decode_trajectory(Tape<Scalar>& tape, const Bound& b,
                                             Var<Scalar> feature, Var<Scalar> history,
                                             const Eigen::Vector2d& last_obs,
                                             const std::vector<Eigen::Vector2d>* teacher,
                                             int t_pred = kPredLen) const {
    LstmState<Scalar> st{concat(feature, history), make_zeros(tape, opt_.dec_hidden_dim)};
    Var<Scalar> input = affine(make_point(tape, last_obs), b.dec_embed_w, b.dec_embed_b);
    std::vector<Var<Scalar>> points;
    points.reserve(static_cast<std::size_t>(t_pred));
    for (int t = 0; t < t_pred; ++t) {
      st = lstm_cell(input, st, b.dec);
      Var<Scalar> point = affine(st.h, b.out_w, b.out_b);
      points.push_back(point);
      if (t + 1 < t_pred) {
        Var<Scalar> next = teacher ? make_point(tape, (*teacher)[static_cast<std::size_t>(t)])
                                   : point;
        input = affine(next, b.dec_embed_w, b.dec_embed_b);
      }
    }
    return points;
  }

  struct Forward {
    std::vector<Var<Scalar>> pred;
    Var<Scalar> loss;
    Var<Scalar> l2;
    std::optional<Var<Scalar>> kld;
    std::optional<LatentVars> latent;
    Var<Scalar> merged;
    std::optional<Var<Scalar>> g, s;
  };

  /// Full training-mode pass over one window; the caller supplies the noise
  /// draw and may share a precomputed scene feature across windows of the
  /// same scene.
  Forward forward(Tape<Scalar>& tape, const Bound& b, const ModelInput& in,
                  const VecX<Scalar>& eps, Scalar kld_weight,
                  std::optional<Var<Scalar>> scene_feat = {},
                  const std::vector<Eigen::Vector2d>* teacher = nullptr) const {
    Forward f;
    if (opt_.use_social) f.g = social_feature(tape, b, in.graph);
    if (opt_.use_scene) {
      if (scene_feat) {
        f.s = *scene_feat;
      } else {
        if (in.raster == nullptr) throw ConfigError("scene encoder enabled but no raster given");
        f.s = scene_feature(tape, b, *in.raster);
      }
    }
    f.merged = merged_feature(b, f.g, f.s);

    Var<Scalar> history = history_feature(tape, b, in.obs);
    Var<Scalar> feature = f.merged;
    if (opt_.use_vae) {
      f.latent = sample_latent(tape, b, f.merged, eps);
      feature = reconstruct(b, f.latent->z);
    }
    f.pred = decode_trajectory(tape, b, feature, history, in.obs.back(), teacher,
                               static_cast<int>(in.gt.size()));

    f.l2 = l2_trajectory_loss(tape, std::span<const Var<Scalar>>(f.pred), in.gt);
    f.loss = f.l2;
    if (opt_.use_vae) {
      f.kld = kl_divergence(f.latent->mu, f.latent->gamma);
      f.loss = add(f.loss, scale(*f.kld, kld_weight));
    }
    return f;
  }

  struct Sampled {
    std::vector<Eigen::Vector2d> traj;  // normalized coordinates
    std::optional<LatentSample<Scalar>> latent;
  };

  /// K samples for one window. Sample 0 always uses eps = 0 (z = mu), so a
  /// K=1 evaluation is deterministic and larger K are supersets of smaller
  /// ones under the same stream. Without the VAE all samples coincide.
  std::vector<Sampled> predict_k(const ModelInput& in, int K, GaussianStream& stream,
                                 int t_pred = kPredLen) const {
    if (K < 1) throw ConfigError("K must be >= 1");
    Tape<Scalar> tape;
    const Bound b = bind(tape);
    std::optional<Var<Scalar>> g, s;
    if (opt_.use_social) g = social_feature(tape, b, in.graph);
    if (opt_.use_scene) {
      if (in.raster == nullptr) throw ConfigError("scene encoder enabled but no raster given");
      s = scene_feature(tape, b, *in.raster);
    }
    Var<Scalar> merged = merged_feature(b, g, s);
    Var<Scalar> history = history_feature(tape, b, in.obs);

    std::vector<Sampled> out;
    out.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      Var<Scalar> feature = merged;
      std::optional<LatentSample<Scalar>> latent;
      if (opt_.use_vae) {
        VecX<Scalar> eps = (k == 0) ? VecX<Scalar>(VecX<Scalar>::Zero(opt_.latent_dim))
                                    : stream.template vec<Scalar>(opt_.latent_dim);
        if (opt_.prior_sampling) {
          Var<Scalar> z = make_vec(tape, eps);
          latent = LatentSample<Scalar>{VecX<Scalar>::Zero(opt_.latent_dim),
                                        VecX<Scalar>::Zero(opt_.latent_dim), eps, eps};
          feature = reconstruct(b, z);
        } else {
          LatentVars lat = sample_latent(tape, b, merged, eps);
          latent = LatentSample<Scalar>{lat.mu.value().data, lat.gamma.value().data,
                                        lat.z.value().data, lat.eps};
          feature = reconstruct(b, lat.z);
        }
      }
      auto points = decode_trajectory(tape, b, feature, history, in.obs.back(), nullptr, t_pred);
      Sampled sample;
      sample.latent = std::move(latent);
      sample.traj.reserve(points.size());
      for (const auto& p : points) {
        sample.traj.emplace_back(static_cast<double>(p.value().data[0]),
                                 static_cast<double>(p.value().data[1]));
      }
      out.push_back(std::move(sample));
      if (!opt_.use_vae) {
        while (static_cast<int>(out.size()) < K) out.push_back(out.front());
        break;
      }
    }
    return out;
  }

  /// D_KL(N(mu, diag(e^gamma)) || N(0, I)) = -1/2 sum(1 + gamma - mu^2 - e^gamma).
  static Var<Scalar> kl_divergence(Var<Scalar> mu, Var<Scalar> gamma) {
    detail::check_same_shape(mu, gamma, "kl_divergence");
    Var<Scalar> inner = sub(sub(add_scalar(gamma, Scalar(1)), mul(mu, mu)), sgsg::exp(gamma));
    return scale(sum(inner), Scalar(-0.5));
  }

  /// Parameter counts per module, for the cost report.
  std::map<std::string, Eigen::Index> parameter_counts() const {
    std::map<std::string, Eigen::Index> counts;
    counts["social_graph"] = params_.count_prefix("gcn.") + params_.count_prefix("social_lstm.");
    counts["scene"] = params_.count_prefix("scene.") + params_.count_prefix("merge.");
    counts["vae"] = params_.count_prefix("vae_");
    counts["trajectory"] = params_.count_prefix("embed.") + params_.count_prefix("dec_embed.") +
                           params_.count_prefix("enc_lstm.") + params_.count_prefix("dec_lstm.") +
                           params_.count_prefix("out.");
    return counts;
  }

 private:
  bool has_merge_projection() const {
    return opt_.use_social && opt_.use_scene && opt_.merge == MergeMode::concat;
  }

  static Var<Scalar> make_point(Tape<Scalar>& tape, const Eigen::Vector2d& p) {
    VecX<Scalar> v(2);
    v << static_cast<Scalar>(p.x()), static_cast<Scalar>(p.y());
    return make_vec(tape, std::move(v));
  }

  LstmVars<Scalar> bind_lstm(Tape<Scalar>& tape, const std::string& prefix) const {
    return {params_.bind(tape, prefix + ".w_ih"), params_.bind(tape, prefix + ".w_hh"),
            params_.bind(tape, prefix + ".b")};
  }

  void add_lstm(const std::string& prefix, int input_dim, int hidden, std::mt19937_64& rng) {
    params_.add(prefix + ".w_ih", uniform_fan_in<Scalar>(Shape{4 * hidden, input_dim}, input_dim, rng));
    params_.add(prefix + ".w_hh", uniform_fan_in<Scalar>(Shape{4 * hidden, hidden}, hidden, rng));
    Tensor<Scalar> bias(Shape{4 * hidden});
    bias.data.segment(hidden, hidden).setConstant(Scalar(1));  // forget gate starts open
    params_.add(prefix + ".b", std::move(bias));
  }

  void init_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int E = opt_.embed_dim;
    const int H = opt_.hidden_dim;
    const int D = opt_.dec_hidden_dim;
    const int L = opt_.latent_dim;

    if (opt_.use_social) {
      params_.add("gcn.w", uniform_fan_in<Scalar>(Shape{E, 2}, 2, rng));
      params_.add("gcn.b", Tensor<Scalar>(Shape{E}));
      add_lstm("social_lstm", E, H, rng);
    }
    params_.add("embed.w", uniform_fan_in<Scalar>(Shape{E, 2}, 2, rng));
    params_.add("embed.b", Tensor<Scalar>(Shape{E}));
    if (!opt_.tie_decoder_embedding) {
      params_.add("dec_embed.w", uniform_fan_in<Scalar>(Shape{E, 2}, 2, rng));
      params_.add("dec_embed.b", Tensor<Scalar>(Shape{E}));
    }
    add_lstm("enc_lstm", E, H, rng);
    if (opt_.use_scene) {
      const int c1 = opt_.scene_conv1, c2 = opt_.scene_conv2, C = opt_.scene_channels;
      params_.add("scene.conv1.w", uniform_fan_in<Scalar>(Shape{c1, C, 3, 3}, C * 9, rng));
      params_.add("scene.conv1.b", Tensor<Scalar>(Shape{c1}));
      params_.add("scene.conv2.w", uniform_fan_in<Scalar>(Shape{c2, c1, 3, 3}, c1 * 9, rng));
      params_.add("scene.conv2.b", Tensor<Scalar>(Shape{c2}));
      const int flat = scene_flat_dim();
      params_.add("scene.fc.w", uniform_fan_in<Scalar>(Shape{H, flat}, flat, rng));
      params_.add("scene.fc.b", Tensor<Scalar>(Shape{H}));
    }
    if (has_merge_projection()) {
      params_.add("merge.w", uniform_fan_in<Scalar>(Shape{H, 2 * H}, 2 * H, rng));
      params_.add("merge.b", Tensor<Scalar>(Shape{H}));
    }
    if (opt_.use_vae) {
      params_.add("vae_enc.w", uniform_fan_in<Scalar>(Shape{2 * L, H}, H, rng));
      params_.add("vae_enc.b", Tensor<Scalar>(Shape{2 * L}));
      params_.add("vae_dec.w", uniform_fan_in<Scalar>(Shape{H, L}, L, rng));
      params_.add("vae_dec.b", Tensor<Scalar>(Shape{H}));
    }
    add_lstm("dec_lstm", E, D, rng);
    params_.add("out.w", uniform_fan_in<Scalar>(Shape{2, D}, D, rng));
    params_.add("out.b", Tensor<Scalar>(Shape{2}));
  }

  ModelOptions opt_;
  ParamStore<Scalar> params_;
};

}  // namespace sgsg
