#include "sgsg/harness.hpp"

#include "sgsg/adam.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace sgsg {

namespace {

constexpr std::uint64_t kValSplitSalt = 0x76616c73ULL;
constexpr std::uint64_t kShuffleSalt = 0x73687566ULL;
constexpr std::uint64_t kCapSalt = 0x63617073ULL;
constexpr std::uint64_t kNoiseSalt = 0x6e6f6973ULL;

std::string fmt_fixed(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string rotation_suffix(int quarter_turns) {
  switch (quarter_turns) {
    case 1:
      return "#r90";
    case 2:
      return "#r180";
    case 3:
      return "#r270";
    default:
      return "";
  }
}

void sort_windows(std::vector<TrajWindow>& windows) {
  std::sort(windows.begin(), windows.end(), [](const TrajWindow& a, const TrajWindow& b) {
    if (a.scene != b.scene) return a.scene < b.scene;
    if (a.poi != b.poi) return a.poi < b.poi;
    return a.start_frame < b.start_frame;
  });
}

std::vector<Eigen::Vector2d> denormalize_all(const std::vector<Eigen::Vector2d>& pts,
                                             const NormParams& norm) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(norm.denormalize(p));
  return out;
}

}  // namespace

ModelOptions model_options(const TrainConfig& cfg) {
  ModelOptions opt;
  opt.use_social = cfg.use_social;
  opt.use_scene = cfg.use_scene;
  opt.use_vae = cfg.use_vae;
  opt.merge = cfg.merge;
  opt.gcn_self_loop = cfg.gcn_self_loop;
  opt.prior_sampling = cfg.prior_sampling;
  opt.scene_channels = cfg.scene_channels;
  opt.scene_height = cfg.scene_size;
  opt.scene_width = cfg.scene_size;
  return opt;
}

DataBundle assemble_bundle(const TrainConfig& cfg, std::map<std::string, LoadedScene> scenes) {
  cfg.validate();
  if (cfg.held_out.empty()) throw ConfigError("no held-out scene configured");
  if (scenes.find(cfg.held_out) == scenes.end()) {
    throw ConfigError("held-out scene '" + cfg.held_out + "' is not in the scene list");
  }
  if (scenes.size() < 2) {
    throw ConfigError("leave-one-out split needs at least one training scene");
  }

  DataBundle bundle;
  bundle.test_scene = cfg.held_out;

  // Rotated copies of the training scenes, annotations and raster together.
  std::map<std::string, LoadedScene> augmented;
  for (const auto& [name, scene] : scenes) {
    if (name == cfg.held_out) continue;
    LoadedScene prev = scene;
    for (int r = 1; r <= cfg.augment_rotations; ++r) {
      LoadedScene rot;
      const std::string rot_name = name + rotation_suffix(r);
      rot.data = rotate90_scene(prev.data, rot_name);
      rot.raster = prev.raster.numel() > 0 ? rotate90_raster(prev.raster) : prev.raster;
      augmented.emplace(rot_name, rot);
      prev = std::move(rot);
    }
  }
  for (auto& [name, scene] : augmented) scenes.emplace(name, std::move(scene));
  bundle.scenes = std::move(scenes);

  for (const auto& [name, scene] : bundle.scenes) {
    if (name == cfg.held_out) continue;
    bundle.train_windows.insert(bundle.train_windows.end(), scene.data.windows.begin(),
                                scene.data.windows.end());
  }
  sort_windows(bundle.train_windows);

  if (cfg.max_train_windows > 0 &&
      static_cast<int>(bundle.train_windows.size()) > cfg.max_train_windows) {
    std::mt19937_64 rng(mix_seed(cfg.seed, kCapSalt));
    std::shuffle(bundle.train_windows.begin(), bundle.train_windows.end(), rng);
    bundle.train_windows.resize(static_cast<std::size_t>(cfg.max_train_windows));
    sort_windows(bundle.train_windows);
  }

  bundle.test_windows = bundle.scenes.at(cfg.held_out).data.windows;
  sort_windows(bundle.test_windows);

  bundle.norm.per_scene = cfg.norm_per_scene;
  if (cfg.norm_per_scene) {
    for (const auto& [name, scene] : bundle.scenes) {
      if (!scene.data.windows.empty()) {
        bundle.norm.scenes[name] = fit_norm(scene.data.windows);
      }
    }
  } else {
    bundle.norm.global = fit_norm(bundle.train_windows);
  }
  return bundle;
}

DataBundle load_data(const TrainConfig& cfg) {
  std::map<std::string, LoadedScene> scenes;
  for (const auto& spec : cfg.scenes) {
    LoadedScene ls;
    ls.data = load_scene(spec.name, spec.annotations);
    if (cfg.use_scene) {
      if (spec.raster.empty()) {
        throw ConfigError("scene '" + spec.name +
                          "' has no raster path but the scene encoder is enabled");
      }
      ls.raster = load_raster(spec.raster);
      if (ls.raster.channels != cfg.scene_channels || ls.raster.height != cfg.scene_size ||
          ls.raster.width != cfg.scene_size) {
        throw ConfigError("raster for scene '" + spec.name + "' is " +
                          std::to_string(ls.raster.channels) + "x" +
                          std::to_string(ls.raster.height) + "x" +
                          std::to_string(ls.raster.width) + ", config expects " +
                          std::to_string(cfg.scene_channels) + "x" +
                          std::to_string(cfg.scene_size) + "x" + std::to_string(cfg.scene_size));
      }
    }
    scenes.emplace(spec.name, std::move(ls));
  }
  return assemble_bundle(cfg, std::move(scenes));
}

ModelInput make_input(const DataBundle& bundle, const TrajWindow& w, bool with_raster) {
  const auto it = bundle.scenes.find(w.scene);
  if (it == bundle.scenes.end()) throw ConfigError("window references unknown scene " + w.scene);
  const NormParams& norm = bundle.norm.for_scene(w.scene);
  ModelInput in;
  in.obs.reserve(w.obs.size());
  for (const auto& p : w.obs) in.obs.push_back(norm.normalize(p));
  in.gt.reserve(w.gt.size());
  for (const auto& p : w.gt) in.gt.push_back(norm.normalize(p));
  in.graph = build_star_graph_seq(w, it->second.data.index, norm);
  in.raster = with_raster ? &it->second.raster : nullptr;
  return in;
}

namespace {

double mean_val_ade(const SgsgModel<float>& model, const DataBundle& bundle,
                    const std::vector<TrajWindow>& windows,
                    const std::vector<ModelInput>& inputs) {
  if (windows.empty()) return -1.0;
  GaussianStream unused(0);
  double total = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto samples = model.predict_k(inputs[i], 1, unused);
    const NormParams& norm = bundle.norm.for_scene(windows[i].scene);
    total += ade(denormalize_all(samples[0].traj, norm), windows[i].gt);
  }
  return total / static_cast<double>(windows.size());
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const DataBundle& bundle,
                  const std::filesystem::path& out_dir, SgsgModel<float>* model_out) {
  cfg.validate();
  if (bundle.train_windows.empty()) throw TrainError("training set is empty");
  std::filesystem::create_directories(out_dir);

  SgsgModel<float> model(model_options(cfg), cfg.seed);
  const bool with_raster = cfg.use_scene;

  // Validation split: a seeded shuffle takes the first val_fraction share.
  const std::size_t n = bundle.train_windows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  {
    std::mt19937_64 rng(mix_seed(cfg.seed, kValSplitSalt));
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::size_t val_n = static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(n));
  if (val_n >= n) val_n = n - 1;
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<long>(val_n));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(val_n), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  std::vector<ModelInput> inputs;
  inputs.reserve(n);
  for (const auto& w : bundle.train_windows) inputs.push_back(make_input(bundle, w, with_raster));

  std::vector<TrajWindow> val_windows;
  std::vector<ModelInput> val_inputs;
  for (std::size_t i : val_idx) {
    val_windows.push_back(bundle.train_windows[i]);
    val_inputs.push_back(inputs[i]);
  }

  AdamConfig<float> adam_cfg;
  adam_cfg.lr = static_cast<float>(cfg.lr);
  Adam<float> adam(adam_cfg);
  std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, kShuffleSalt));
  GaussianStream noise(mix_seed(cfg.seed, kNoiseSalt));

  TrainResult result;
  result.checkpoint = out_dir / "checkpoint.bin";
  result.log_csv = out_dir / "train_log.csv";

  if (cfg.epochs == 0) {
    save_checkpoint(result.checkpoint, model.params());
    write_train_log_csv(result.log_csv, result.log);
    if (model_out != nullptr) *model_out = model;
    return result;
  }

  double best_val = std::numeric_limits<double>::max();
  int epochs_since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> sched = train_idx;
    std::shuffle(sched.begin(), sched.end(), shuffle_rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < sched.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(sched.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Tape<float> tape;
      const auto bound = model.bind(tape);
      std::map<std::string, Var<float>> scene_cache;

      Var<float> batch_sum = make_scalar(tape, 0.0f);
      for (std::size_t bi = start; bi < stop; ++bi) {
        const std::size_t wi = sched[bi];
        const ModelInput& in = inputs[wi];
        std::optional<Var<float>> scene_feat;
        if (cfg.use_scene) {
          const std::string& scene_name = bundle.train_windows[wi].scene;
          auto it = scene_cache.find(scene_name);
          if (it == scene_cache.end()) {
            it = scene_cache.emplace(scene_name, model.scene_feature(tape, bound, *in.raster))
                     .first;
          }
          scene_feat = it->second;
        }
        VecX<float> eps;
        if (cfg.use_vae) eps = noise.vec<float>(model.options().latent_dim);
        const auto fwd = model.forward(tape, bound, in, eps, static_cast<float>(cfg.kld_weight),
                                       scene_feat, cfg.teacher_forcing ? &in.gt : nullptr);
        epoch_loss += static_cast<double>(fwd.loss.value().data[0]);
        batch_sum = add(batch_sum, fwd.loss);
      }
      const float batch_count = static_cast<float>(stop - start);
      Var<float> batch_loss = scale(batch_sum, 1.0f / batch_count);

      if (!std::isfinite(batch_loss.value().data[0])) {
        std::ostringstream ids;
        for (std::size_t bi = start; bi < stop; ++bi) {
          const auto& w = bundle.train_windows[sched[bi]];
          ids << " " << w.scene << "/" << w.poi << "@" << w.start_frame;
        }
        throw TrainError("non-finite loss in epoch " + std::to_string(epoch) +
                         "; offending batch windows:" + ids.str());
      }

      tape.backward(batch_loss.id());
      model.params().zero_grad();
      model.params().collect(tape);
      adam.step(model.params());
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss / static_cast<double>(sched.size());
    entry.val_ade = mean_val_ade(model, bundle, val_windows, val_inputs);
    result.log.push_back(entry);
    result.epochs_run = epoch;

    if (!val_windows.empty()) {
      if (entry.val_ade < best_val) {
        best_val = entry.val_ade;
        result.best_epoch = epoch;
        epochs_since_best = 0;
        save_checkpoint(result.checkpoint, model.params());
      } else if (cfg.patience > 0 && ++epochs_since_best >= cfg.patience) {
        break;
      }
    }
  }

  if (val_windows.empty()) {
    result.best_epoch = result.epochs_run;
    save_checkpoint(result.checkpoint, model.params());
  }
  write_train_log_csv(result.log_csv, result.log);
  if (model_out != nullptr) *model_out = model;
  return result;
}

EvalResult evaluate(const SgsgModel<float>& model, const DataBundle& bundle, int K,
                    std::uint64_t seed) {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (bundle.test_windows.empty()) {
    throw ConfigError("scene '" + bundle.test_scene + "' has zero test windows");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const bool with_raster = model.options().use_scene;

  EvalResult res;
  res.report.k = K;
  std::map<std::string, SceneMetrics> per_scene;

  for (std::size_t i = 0; i < bundle.test_windows.size(); ++i) {
    const TrajWindow& w = bundle.test_windows[i];
    const ModelInput in = make_input(bundle, w, with_raster);
    GaussianStream stream(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const auto samples = model.predict_k(in, K, stream);

    const NormParams& norm = bundle.norm.for_scene(w.scene);
    std::vector<std::vector<Eigen::Vector2d>> preds_m;
    preds_m.reserve(samples.size());
    double sigma_sum = 0.0;
    for (const auto& s : samples) {
      preds_m.push_back(denormalize_all(s.traj, norm));
      if (s.latent) sigma_sum += (s.latent->gamma.array() * 0.5).exp().mean();
    }
    const BestOfK best = best_of_k(preds_m, w.gt);
    const auto baseline = constant_velocity_baseline(w.obs, static_cast<int>(w.gt.size()));

    WindowEval we;
    we.scene = w.scene;
    we.poi = w.poi;
    we.start_frame = w.start_frame;
    we.min_ade = best.min_ade;
    we.min_fde = best.min_fde;
    we.baseline_ade = ade(baseline, w.gt);
    we.baseline_fde = fde(baseline, w.gt);
    we.mean_sigma = samples.empty() ? 0.0 : sigma_sum / static_cast<double>(samples.size());
    res.windows.push_back(we);

    SceneMetrics& sm = per_scene[w.scene];
    sm.scene = w.scene;
    sm.ade_m += we.min_ade;
    sm.fde_m += we.min_fde;
    sm.baseline_ade_m += we.baseline_ade;
    sm.baseline_fde_m += we.baseline_fde;
    sm.n_windows += 1;
  }

  SceneMetrics overall;
  overall.scene = "overall";
  for (auto& [name, sm] : per_scene) {
    overall.ade_m += sm.ade_m;
    overall.fde_m += sm.fde_m;
    overall.baseline_ade_m += sm.baseline_ade_m;
    overall.baseline_fde_m += sm.baseline_fde_m;
    overall.n_windows += sm.n_windows;
    const double inv = 1.0 / sm.n_windows;
    sm.ade_m *= inv;
    sm.fde_m *= inv;
    sm.baseline_ade_m *= inv;
    sm.baseline_fde_m *= inv;
    res.report.per_scene.push_back(sm);
  }
  const double inv = 1.0 / overall.n_windows;
  overall.ade_m *= inv;
  overall.fde_m *= inv;
  overall.baseline_ade_m *= inv;
  overall.baseline_fde_m *= inv;
  res.report.overall = overall;
  res.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write metrics csv: " + path.string());
  out << "scene,k,ade_m,fde_m,baseline_ade_m,baseline_fde_m,n_windows\n";
  for (const auto& sm : report.per_scene) {
    out << sm.scene << "," << report.k << "," << fmt_fixed(sm.ade_m) << "," << fmt_fixed(sm.fde_m)
        << "," << fmt_fixed(sm.baseline_ade_m) << "," << fmt_fixed(sm.baseline_fde_m) << ","
        << sm.n_windows << "\n";
  }
}

void write_train_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write train log: " + path.string());
  out << "epoch,train_loss,val_ade_m\n";
  for (const auto& e : log) {
    out << e.epoch << "," << fmt_fixed(e.train_loss, 9) << ",";
    if (e.val_ade >= 0.0) out << fmt_fixed(e.val_ade);
    out << "\n";
  }
}

void write_predictions_csv(const std::filesystem::path& path, const SgsgModel<float>& model,
                           const DataBundle& bundle, int K, std::uint64_t seed) {
  if (bundle.test_windows.empty()) {
    throw ConfigError("scene '" + bundle.test_scene + "' has zero test windows");
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write predictions csv: " + path.string());
  out << "scene,window,poi,start_frame,kind,k,t,x_m,y_m\n";
  const bool with_raster = model.options().use_scene;
  for (std::size_t i = 0; i < bundle.test_windows.size(); ++i) {
    const TrajWindow& w = bundle.test_windows[i];
    const ModelInput in = make_input(bundle, w, with_raster);
    GaussianStream stream(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const auto samples = model.predict_k(in, K, stream);
    const NormParams& norm = bundle.norm.for_scene(w.scene);

    auto emit = [&](const char* kind, int k, std::size_t t, const Eigen::Vector2d& p) {
      out << w.scene << "," << i << "," << w.poi << "," << w.start_frame << "," << kind << "," << k
          << "," << t << "," << fmt_fixed(p.x()) << "," << fmt_fixed(p.y()) << "\n";
    };
    for (std::size_t t = 0; t < w.obs.size(); ++t) emit("obs", -1, t, w.obs[t]);
    for (std::size_t t = 0; t < w.gt.size(); ++t) emit("gt", -1, t, w.gt[t]);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const auto traj = denormalize_all(samples[k].traj, norm);
      for (std::size_t t = 0; t < traj.size(); ++t) {
        emit("pred", static_cast<int>(k), t, traj[t]);
      }
    }
  }
}

CostReport cost_report(const std::map<std::string, LoadedScene>& scenes,
                       const std::map<std::string, Eigen::Index>& parameter_counts) {
  CostReport report;
  report.parameter_counts = parameter_counts;
  for (const auto& [name, scene] : scenes) {
    CostReport::SceneCost sc;
    sc.scene = name;
    for (const auto& [frame, peds] : scene.data.index.frames()) {
      const long n = static_cast<long>(peds.size());
      sc.star_messages += n * (n - 1);           // N POIs, N-1 messages each
      sc.complete_messages += n * (n * (n - 1) / 2);  // full graph per POI prediction
    }
    report.scenes.push_back(std::move(sc));
  }
  return report;
}

void write_graph_stats_csv(std::ostream& out, const std::map<std::string, LoadedScene>& scenes) {
  out << "scene,timestep,N,star_edges,complete_edges\n";
  for (const auto& [name, scene] : scenes) {
    for (const auto& [frame, peds] : scene.data.index.frames()) {
      const int n = static_cast<int>(peds.size());
      out << name << "," << frame << "," << n << "," << star_edges(n) << ","
          << complete_edges(n) << "\n";
    }
  }
}

}  // namespace sgsg
