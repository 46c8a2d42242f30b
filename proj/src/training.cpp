#include "ultrasr/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ultrasr/checkpoint.hpp"

namespace ultrasr {

Batch sample_batch(const Dataset& dataset, const TrainConfig& cfg, BatchSampler& sampler) {
  if (dataset.empty()) throw TrainingError("sample_batch: dataset is empty");
  Batch batch;
  batch.reserve(cfg.batch_size);
  std::uniform_real_distribution<double> scale_dist(cfg.scale_min, cfg.scale_max);
  for (std::size_t b = 0; b < cfg.batch_size; ++b) {
    const double scale = cfg.scale_min == cfg.scale_max ? cfg.scale_min : scale_dist(sampler.scale);
    const auto side = static_cast<std::size_t>(
        std::llround(scale * static_cast<double>(cfg.lr_patch)));

    std::vector<std::size_t> fits;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      if (dataset.images[i].height >= side && dataset.images[i].width >= side) fits.push_back(i);
    if (fits.empty())
      throw TrainingError("sample_batch: no image can hold a " + std::to_string(side) + "x" +
                          std::to_string(side) + " HR patch (lr_patch " +
                          std::to_string(cfg.lr_patch) + " at scale " + std::to_string(scale) +
                          ")");
    std::uniform_int_distribution<std::size_t> pick(0, fits.size() - 1);
    const Image& hr = dataset.images[fits[pick(sampler.image)]];
    PatchPair pair = make_lr_hr_pair(hr, scale, cfg.lr_patch, sampler.crop);

    BatchItem item;
    item.lr = std::move(pair.lr);
    item.hr_side = side;
    item.scale = scale;
    const std::size_t pixels = side * side;
    std::vector<std::size_t> chosen(cfg.queries_per_item);
    if (pixels >= cfg.queries_per_item) {
      // Partial Fisher-Yates: the first queries_per_item slots are a uniform
      // sample without replacement.
      std::vector<std::size_t> perm(pixels);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = 0; i < cfg.queries_per_item; ++i) {
        std::uniform_int_distribution<std::size_t> d(i, pixels - 1);
        std::swap(perm[i], perm[d(sampler.query)]);
      }
      std::copy_n(perm.begin(), cfg.queries_per_item, chosen.begin());
    } else {
      std::uniform_int_distribution<std::size_t> d(0, pixels - 1);
      for (std::size_t& c : chosen) c = d(sampler.query);
    }
    const std::vector<double> grid = coord_grid(side);
    for (std::size_t p : chosen) {
      const std::size_t y = p / side, x = p % side;
      item.targets.push_back({grid[y], grid[x]});
      for (std::size_t c = 0; c < 3; ++c) item.target_rgb.push_back(pair.hr.at(y, x, c));
    }
    batch.push_back(std::move(item));
  }
  return batch;
}

template <typename T>
ad::Var<T> batch_loss(ad::Graph<T>& g, const BoundParams<T>& params, const ModelConfig& cfg,
                      const Batch& batch) {
  if (batch.empty()) throw TrainingError("batch_loss: empty batch");
  ad::Var<T> total;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const BatchItem& item = batch[b];
    const ad::Var<T> fm = encoder_graph(params, cfg, g.constant(image_to_tensor<T>(item.lr)));
    const QueryLayout layout =
        locate_queries(item.lr.height, item.lr.width, item.targets, item.hr_side, item.hr_side);
    const ad::Var<T> pred = predict_graph(params, cfg, fm, layout);
    Tensor<T> gt(Shape{item.targets.size(), 3});
    for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = static_cast<T>(item.target_rgb[i]);
    const ad::Var<T> l1 = ad::mean(ad::abs(ad::sub(pred, g.constant(std::move(gt)))));
    total = b == 0 ? l1 : ad::add(total, l1);
  }
  // Items carry equal query counts, so the mean of item means is the overall mean.
  return ad::scalar_multiply(total, 1.0 / static_cast<double>(batch.size()));
}

template <typename T>
double train_step(ModelParams<T>& params, const Batch& batch, AdamState<T>& opt,
                  const ModelConfig& cfg) {
  ad::Graph<T> g;
  const BoundParams<T> bound = bind_params(g, params, true);
  const ad::Var<T> loss = batch_loss(g, bound, cfg, batch);
  const double value = static_cast<double>(loss.value()[0]);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite loss " << value << " at optimizer step " << opt.t + 1
        << " (lr " << opt.lr << ")";
    throw TrainingError(msg.str());
  }
  const ad::GradMap<T> grads = g.backward(loss);
  try {
    adam_step(params, grads, opt);
  } catch (const NonFiniteGradient& e) {
    throw TrainingError(std::string(e.what()) + " at optimizer step " +
                        std::to_string(opt.t + 1));
  }
  return value;
}

double learning_rate_at(double lr0, const std::vector<std::size_t>& halve_epochs,
                        std::size_t epoch) {
  const auto n = std::count_if(halve_epochs.begin(), halve_epochs.end(),
                               [epoch](std::size_t e) { return e <= epoch; });
  return std::ldexp(lr0, -static_cast<int>(n));
}

namespace {

template <typename T>
TrainResult train_impl(const TrainConfig& cfg, const Dataset& dataset,
                       const TrainOptions& options) {
  ModelParams<T> params = init_params<T>(cfg.model, cfg.seed);
  AdamState<T> opt;
  opt.lr = cfg.lr;
  BatchSampler sampler(cfg.seed);
  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.lr = learning_rate_at(cfg.lr, cfg.lr_halve_epochs, epoch);
    double loss_sum = 0.0;
    for (std::size_t it = 0; it < cfg.iters_per_epoch; ++it) {
      const Batch batch = sample_batch(dataset, cfg, sampler);
      loss_sum += train_step(params, batch, opt, cfg.model);
    }
    EpochLog e{epoch, loss_sum / static_cast<double>(cfg.iters_per_epoch), opt.lr};
    result.log.push_back(e);
    if (options.progress)
      *options.progress << "epoch " << e.epoch << " mean_loss " << e.mean_loss << " lr " << e.lr
                        << std::endl;
  }
  result.params = widen_params(params);

  if (!options.checkpoint.empty()) {
    save_checkpoint(params, cfg.model, options.checkpoint);
    std::filesystem::path log_path = options.log;
    if (log_path.empty()) {
      log_path = options.checkpoint;
      log_path += ".log.jsonl";
    }
    std::string lines;
    for (const EpochLog& e : result.log)
      lines += nlohmann::json{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"lr", e.lr}}.dump() +
               "\n";
    write_file_atomic(log_path, lines);
  }
  return result;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& dataset, const TrainOptions& options) {
  cfg.validate();
  return cfg.precision == Precision::single ? train_impl<float>(cfg, dataset, options)
                                            : train_impl<double>(cfg, dataset, options);
}

TrainResult train(const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  return train(cfg, load_dataset(cfg.dataset_dir), options);
}

template ad::Var<float> batch_loss<float>(ad::Graph<float>&, const BoundParams<float>&,
                                          const ModelConfig&, const Batch&);
template ad::Var<double> batch_loss<double>(ad::Graph<double>&, const BoundParams<double>&,
                                            const ModelConfig&, const Batch&);
template double train_step<float>(ModelParams<float>&, const Batch&, AdamState<float>&,
                                  const ModelConfig&);
template double train_step<double>(ModelParams<double>&, const Batch&, AdamState<double>&,
                                   const ModelConfig&);

}  // namespace ultrasr
