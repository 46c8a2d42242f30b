#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ultrasr/implicit.hpp"

namespace ultrasr {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Network shape and the three design toggles: spatial encoding (S),
// coordinate fusion (C) and residual links (R).
struct ModelConfig {
  std::size_t enc_channels = 32;
  std::size_t enc_blocks = 4;
  std::size_t hidden_width = 256;
  std::size_t hidden_layers = 4;
  std::size_t encoding_dim = 48;
  bool use_encoding = true;
  bool use_fusion = true;
  bool use_residual = true;
  FreqInit freq_init = FreqInit::paper_2e_n;

  void validate() const;

  // Relative coordinate plus its encoding when S is on.
  std::size_t coord_width() const { return 2 + (use_encoding ? encoding_dim : 0); }
  // feature (9C) ++ coord bundle ++ cell (2).
  std::size_t decoder_input_width() const {
    return 9 * enc_channels + coord_width() + 2;
  }
  std::size_t hidden_input_width() const {
    return hidden_width + (use_fusion ? coord_width() : 0);
  }

  bool operator==(const ModelConfig&) const = default;
};

enum class Precision { single, double_ };

struct TrainConfig {
  std::filesystem::path dataset_dir;
  std::size_t epochs = 20;
  std::size_t iters_per_epoch = 100;
  std::size_t batch_size = 4;
  std::size_t lr_patch = 48;
  std::size_t queries_per_item = 2304;
  double scale_min = 2.0;
  double scale_max = 4.0;
  double lr = 1e-4;
  std::vector<std::size_t> lr_halve_epochs{8, 14};
  std::uint64_t seed = 0;
  Precision precision = Precision::single;
  ModelConfig model;

  void validate() const;
};

// Strict conversions: unknown keys and wrong types are rejected.
nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// A relative dataset_dir is taken relative to the config file.
TrainConfig load_train_config(const std::filesystem::path& path);

// Sorted keys, no whitespace.
std::string canonical_json(const ModelConfig& cfg);

// Human-readable description of every config key, used by --help.
std::string config_schema_help();

}  // namespace ultrasr
