#pragma once

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "ultrasr/adam.hpp"
#include "ultrasr/config.hpp"
#include "ultrasr/dataset.hpp"
#include "ultrasr/model.hpp"
#include "ultrasr/rng.hpp"

namespace ultrasr {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BatchItem {
  Image lr;
  std::size_t hr_side = 0;
  double scale = 1.0;
  std::vector<Vec2> targets;      // HR pixel centers in [-1, 1]^2
  std::vector<double> target_rgb;  // 3 per target
};

using Batch = std::vector<BatchItem>;

// One stream per purpose, all derived from the master seed.
struct BatchSampler {
  explicit BatchSampler(std::uint64_t seed)
      : image(make_rng(seed, Stream::image)),
        scale(make_rng(seed, Stream::scale)),
        crop(make_rng(seed, Stream::crop)),
        query(make_rng(seed, Stream::query)) {}

  Rng image, scale, crop, query;
};

// Per item: pick an image, draw a scale, crop an aligned LR/HR pair and pick
// queries_per_item HR pixel centers (without replacement when the patch has
// enough pixels).
Batch sample_batch(const Dataset& dataset, const TrainConfig& cfg, BatchSampler& sampler);

// Mean L1 loss of the ensembled prediction over all queries and channels.
template <typename T>
ad::Var<T> batch_loss(ad::Graph<T>& g, const BoundParams<T>& params, const ModelConfig& cfg,
                      const Batch& batch);

// Forward, backward and one ADAM update. Returns the loss before the update.
template <typename T>
double train_step(ModelParams<T>& params, const Batch& batch, AdamState<T>& opt,
                  const ModelConfig& cfg);

// lr0 * 2^-(number of halving epochs <= epoch); epochs count from 0.
double learning_rate_at(double lr0, const std::vector<std::size_t>& halve_epochs,
                        std::size_t epoch);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ModelParams<double> params;
  std::vector<EpochLog> log;
};

struct TrainOptions {
  std::filesystem::path checkpoint;  // empty: do not write
  std::filesystem::path log;         // default: <checkpoint>.log.jsonl
  std::ostream* progress = nullptr;
};

// Runs epochs * iters_per_epoch steps and writes the checkpoint and the
// per-epoch JSON-lines log.
TrainResult train(const TrainConfig& cfg, const TrainOptions& options = {});
TrainResult train(const TrainConfig& cfg, const Dataset& dataset,
                  const TrainOptions& options = {});

}  // namespace ultrasr
