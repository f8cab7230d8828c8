#include "sgsg/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace sgsg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

double parse_num(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("lr must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (kld_weight < 0.0) throw ConfigError("kld_weight must be >= 0");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("val_fraction must be in [0,1)");
  if (augment_rotations < 0 || augment_rotations > 3) {
    throw ConfigError("augment_rotations must be in 0..3");
  }
  if (scene_channels < 1) throw ConfigError("scene_channels must be >= 1");
  if (scene_size < 4) throw ConfigError("scene_size must be >= 4");
  if (scenes.empty()) throw ConfigError("config lists no scenes");
  if (!use_social && !use_scene) {
    throw ConfigError("at least one of use_social/use_scene must be enabled");
  }
  if (use_vae && !use_social && !use_scene) {
    throw ConfigError("the VAE needs an upstream social or scene feature");
  }
}

const SceneSpec& TrainConfig::scene(const std::string& name) const {
  for (const auto& s : scenes) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown scene '" + name + "'");
}

TrainConfig parse_config_text(std::istream& in, const std::string& origin,
                              const std::filesystem::path& base_dir) {
  TrainConfig cfg;
  std::map<std::string, SceneSpec> scenes;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));

    if (key.rfind("scene.", 0) == 0) {
      const auto rest = key.substr(6);
      const auto dot = rest.find('.');
      if (dot == std::string::npos || dot == 0) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": bad scene key '" + key +
                          "' (expected scene.<name>.annotations|raster)");
      }
      const std::string name = rest.substr(0, dot);
      const std::string field = rest.substr(dot + 1);
      SceneSpec& spec = scenes[name];
      spec.name = name;
      if (field == "annotations") {
        spec.annotations = resolve(base_dir, value);
      } else if (field == "raster") {
        spec.raster = resolve(base_dir, value);
      } else {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown scene field '" +
                          field + "'");
      }
      continue;
    }

    if (key == "lr") cfg.lr = parse_num(value, key);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_num(value, key));
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_num(value, key));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_num(value, key));
    else if (key == "kld_weight") cfg.kld_weight = parse_num(value, key);
    else if (key == "merge") cfg.merge = parse_merge_mode(value);
    else if (key == "use_social") cfg.use_social = parse_bool(value, key);
    else if (key == "use_scene") cfg.use_scene = parse_bool(value, key);
    else if (key == "use_vae") cfg.use_vae = parse_bool(value, key);
    else if (key == "held_out") cfg.held_out = value;
    else if (key == "patience") cfg.patience = static_cast<int>(parse_num(value, key));
    else if (key == "val_fraction") cfg.val_fraction = parse_num(value, key);
    else if (key == "max_train_windows") cfg.max_train_windows = static_cast<int>(parse_num(value, key));
    else if (key == "augment_rotations") cfg.augment_rotations = static_cast<int>(parse_num(value, key));
    else if (key == "norm_per_scene") cfg.norm_per_scene = parse_bool(value, key);
    else if (key == "teacher_forcing") cfg.teacher_forcing = parse_bool(value, key);
    else if (key == "prior_sampling") cfg.prior_sampling = parse_bool(value, key);
    else if (key == "gcn_self_loop") cfg.gcn_self_loop = parse_bool(value, key);
    else if (key == "scene_channels") cfg.scene_channels = static_cast<int>(parse_num(value, key));
    else if (key == "scene_size") cfg.scene_size = static_cast<int>(parse_num(value, key));
    else {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown config key '" + key +
                        "'");
    }
  }

  for (auto& [name, spec] : scenes) {
    if (spec.annotations.empty()) {
      throw ConfigError(origin + ": scene '" + name + "' has no annotations path");
    }
    cfg.scenes.push_back(spec);
  }
  std::sort(cfg.scenes.begin(), cfg.scenes.end(),
            [](const SceneSpec& a, const SceneSpec& b) { return a.name < b.name; });
  return cfg;
}

TrainConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse_config_text(in, path.string(), path.parent_path());
}

}  // namespace sgsg
