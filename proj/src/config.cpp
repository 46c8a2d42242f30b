#include "ultrasr/config.hpp"

#include <fstream>
#include <set>

namespace ultrasr {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
}

template <typename V>
void read(const json& j, const char* key, V& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<V, bool>) {
      if (!it->is_boolean()) throw ConfigError("not a boolean");
    } else if constexpr (std::is_unsigned_v<V>) {
      if (!it->is_number_unsigned()) throw ConfigError("not a non-negative integer");
    } else if constexpr (std::is_floating_point_v<V>) {
      if (!it->is_number()) throw ConfigError("not a number");
    }
    out = it->get<V>();
  } catch (const std::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (enc_channels == 0 || enc_blocks == 0 || hidden_width == 0 || hidden_layers == 0)
    throw ConfigError("model: enc_channels, enc_blocks, hidden_width and hidden_layers must be >= 1");
  if (encoding_dim == 0 || encoding_dim % 4 != 0)
    throw ConfigError("model: encoding_dim must be a positive multiple of 4, got " +
                      std::to_string(encoding_dim));
}

void TrainConfig::validate() const {
  model.validate();
  if (iters_per_epoch == 0 || batch_size == 0 || lr_patch == 0 || queries_per_item == 0)
    throw ConfigError("train: iters_per_epoch, batch_size, lr_patch and queries_per_item must be >= 1");
  if (!(scale_min >= 1.0) || !(scale_max >= scale_min))
    throw ConfigError("train: need 1 <= scale_min <= scale_max");
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
}

json to_json(const ModelConfig& c) {
  return json{{"enc_channels", c.enc_channels},   {"enc_blocks", c.enc_blocks},
              {"hidden_width", c.hidden_width},   {"hidden_layers", c.hidden_layers},
              {"encoding_dim", c.encoding_dim},   {"use_encoding", c.use_encoding},
              {"use_fusion", c.use_fusion},       {"use_residual", c.use_residual},
              {"freq_init", to_string(c.freq_init)}};
}

ModelConfig model_config_from_json(const json& j) {
  reject_unknown(j,
                 {"enc_channels", "enc_blocks", "hidden_width", "hidden_layers",
                  "encoding_dim", "use_encoding", "use_fusion", "use_residual",
                  "freq_init"},
                 "model");
  ModelConfig c;
  read(j, "enc_channels", c.enc_channels, "model");
  read(j, "enc_blocks", c.enc_blocks, "model");
  read(j, "hidden_width", c.hidden_width, "model");
  read(j, "hidden_layers", c.hidden_layers, "model");
  read(j, "encoding_dim", c.encoding_dim, "model");
  read(j, "use_encoding", c.use_encoding, "model");
  read(j, "use_fusion", c.use_fusion, "model");
  read(j, "use_residual", c.use_residual, "model");
  if (auto it = j.find("freq_init"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("model.freq_init: not a string");
    try {
      c.freq_init = parse_freq_init(it->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("model.") + e.what());
    }
  }
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return json{{"dataset_dir", c.dataset_dir.string()},
              {"epochs", c.epochs},
              {"iters_per_epoch", c.iters_per_epoch},
              {"batch_size", c.batch_size},
              {"lr_patch", c.lr_patch},
              {"queries_per_item", c.queries_per_item},
              {"scale_min", c.scale_min},
              {"scale_max", c.scale_max},
              {"lr", c.lr},
              {"lr_halve_epochs", c.lr_halve_epochs},
              {"seed", c.seed},
              {"precision", c.precision == Precision::single ? "single" : "double"},
              {"model", to_json(c.model)}};
}

TrainConfig train_config_from_json(const json& j) {
  reject_unknown(j,
                 {"dataset_dir", "epochs", "iters_per_epoch", "batch_size", "lr_patch",
                  "queries_per_item", "scale_min", "scale_max", "lr", "lr_halve_epochs",
                  "seed", "precision", "model"},
                 "config");
  TrainConfig c;
  if (auto it = j.find("dataset_dir"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("config.dataset_dir: not a string");
    c.dataset_dir = it->get<std::string>();
  }
  read(j, "epochs", c.epochs, "config");
  read(j, "iters_per_epoch", c.iters_per_epoch, "config");
  read(j, "batch_size", c.batch_size, "config");
  read(j, "lr_patch", c.lr_patch, "config");
  read(j, "queries_per_item", c.queries_per_item, "config");
  read(j, "scale_min", c.scale_min, "config");
  read(j, "scale_max", c.scale_max, "config");
  read(j, "lr", c.lr, "config");
  read(j, "seed", c.seed, "config");
  if (auto it = j.find("lr_halve_epochs"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("config.lr_halve_epochs: not an array");
    c.lr_halve_epochs.clear();
    for (const auto& e : *it) {
      if (!e.is_number_unsigned())
        throw ConfigError("config.lr_halve_epochs: entries must be non-negative integers");
      c.lr_halve_epochs.push_back(e.get<std::size_t>());
    }
  }
  if (auto it = j.find("precision"); it != j.end()) {
    const std::string p = it->is_string() ? it->get<std::string>() : "";
    if (p == "single")
      c.precision = Precision::single;
    else if (p == "double")
      c.precision = Precision::double_;
    else
      throw ConfigError("config.precision: must be \"single\" or \"double\"");
  }
  if (auto it = j.find("model"); it != j.end()) c.model = model_config_from_json(*it);
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
  TrainConfig cfg = train_config_from_json(j);
  if (!cfg.dataset_dir.empty() && cfg.dataset_dir.is_relative())
    cfg.dataset_dir = path.parent_path() / cfg.dataset_dir;
  return cfg;
}

std::string canonical_json(const ModelConfig& cfg) { return to_json(cfg).dump(); }

std::string config_schema_help() {
  return R"(Config file (JSON object; unknown keys are rejected):
  dataset_dir       string   directory of 8-bit RGB PNG training images; relative
                             paths are resolved against the config file
  epochs            int      number of epochs (default 20)
  iters_per_epoch   int      optimizer steps per epoch (default 100)
  batch_size        int      patches per step (default 4)
  lr_patch          int      LR patch side in pixels (default 48)
  queries_per_item  int      HR pixels rendered per patch (default 2304)
  scale_min         real     smallest training scale (default 2)
  scale_max         real     largest training scale (default 4)
  lr                real     initial ADAM learning rate (default 1e-4)
  lr_halve_epochs   [int]    epochs at which the learning rate halves (default [8, 14])
  seed              int      master seed (default 0)
  precision         string   "single" or "double" (default "single")
  model             object:
    enc_channels    int      encoder feature channels (default 32)
    enc_blocks      int      encoder residual blocks (default 4)
    hidden_width    int      decoder hidden width (default 256)
    hidden_layers   int      decoder hidden layers after the input layer (default 4)
    encoding_dim    int      spatial encoding width, multiple of 4 (default 48)
    use_encoding    bool     spatial encoding, S (default true)
    use_fusion      bool     coordinate fusion into hidden layers, C (default true)
    use_residual    bool     residual links every two layers, R (default true)
    freq_init       string   "paper_2e_n" (w_n = 2e^n) or "pow2" (w_n = 2^n)
)";
}

}  // namespace ultrasr
