#include "ultrasr/evalbench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "ultrasr/checkpoint.hpp"
#include "ultrasr/hash.hpp"
#include "ultrasr/training.hpp"

namespace ultrasr {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

nlohmann::json num_list(const std::vector<double>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

std::string scale_str(double s) { return fmt::format("x{:g}", s); }

void require_scales(const std::vector<double>& scales) {
  if (scales.empty()) throw EvalError("at least one scale is required");
  for (double s : scales)
    if (!std::isfinite(s) || s < 1.0)
      throw EvalError(fmt::format("scale {} must be a finite value >= 1", s));
}

Dataset load_eval_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw EvalError("missing dataset directory: " + dir.string());
  return load_dataset(dir);
}

// Trains one model and evaluates it.
EvalReport train_and_eval(TrainConfig cfg, std::uint64_t seed, const Dataset& train_set,
                          const Dataset& eval_set, const std::string& dataset_fp,
                          const StudyOptions& options, const std::string& tag) {
  cfg.seed = seed;
  TrainOptions topts;
  if (!options.checkpoint_dir.empty()) {
    std::filesystem::create_directories(options.checkpoint_dir);
    topts.checkpoint = options.checkpoint_dir / fmt::format("{}_seed{}.ckpt", tag, seed);
  }
  topts.progress = options.progress;
  if (options.progress) *options.progress << "== " << tag << " seed " << seed << '\n';
  const TrainResult result = train(cfg, train_set, topts);
  const ModelParams<float> params = cast_params<float>(result.params);
  return evaluate_with(eval_set, dataset_fp, options.scales, model_renderer(params, cfg.model),
                       "model", config_fingerprint(params, cfg.model));
}

struct StudyData {
  Dataset train_set;
  Dataset eval_set;
  std::string dataset_fp;
  std::vector<std::uint64_t> seeds;
};

StudyData prepare_study(const TrainConfig& base, const std::filesystem::path& dataset_dir,
                        const StudyOptions& options) {
  require_scales(options.scales);
  base.validate();
  StudyData d;
  d.eval_set = load_eval_dataset(dataset_dir);
  d.dataset_fp = dataset_fingerprint(dataset_dir);
  d.train_set = base.dataset_dir.empty() ? d.eval_set : load_dataset(base.dataset_dir);
  d.seeds = options.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : options.seeds;
  return d;
}

// Mean per scale over runs.
std::vector<double> average_runs(const std::vector<EvalReport>& runs, std::size_t n_scales) {
  std::vector<double> out(n_scales, 0.0);
  for (std::size_t s = 0; s < n_scales; ++s) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.results[s].mean);
    out[s] = mean_of(v);
  }
  return out;
}

std::vector<double> deltas(const std::vector<double>& row, const std::vector<double>& base) {
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] - base[i];
  return out;
}

nlohmann::json stats_json(const LaplacianStats& s) {
  return {{"mean_abs_laplacian", num(s.mean_abs_laplacian)},
          {"mean_abs_laplacian_error", num(s.mean_abs_laplacian_error)}};
}

std::string seeds_str(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i)
    out += (i ? "," : "") + std::to_string(seeds[i]);
  return out;
}

std::string scale_header(const std::vector<double>& scales, const char* prefix) {
  std::string out;
  for (double s : scales) out += fmt::format(" {:>12}", prefix + scale_str(s));
  return out;
}

// Runs fn(i) for every image in parallel; the first failure (by image
// order) is rethrown with the image name.
template <typename F>
void for_each_image(const Dataset& ds, double scale, F&& fn) {
  const auto n = static_cast<std::ptrdiff_t>(ds.size());
  std::vector<std::string> errors(ds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!errors[i].empty())
      throw EvalError("evaluation failed at " + scale_str(scale) + " on " + ds.names[i] + ": " +
                      errors[i]);
}

}  // namespace

EvalPair make_eval_pair(const Image& hr, double scale) {
  if (!std::isfinite(scale) || scale < 1.0)
    throw EvalError(fmt::format("scale {} must be a finite value >= 1", scale));
  const auto lr_dim = [scale](std::size_t n) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) / scale + 1e-9));
  };
  const std::size_t lh = lr_dim(hr.height), lw = lr_dim(hr.width);
  if (lh == 0 || lw == 0)
    throw EvalError(fmt::format("scale {} is too large for a {}x{} image", scale, hr.height,
                                hr.width));
  const auto hr_dim = [scale](std::size_t n, std::size_t full) {
    return std::min(full, static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale)));
  };
  EvalPair p{Image(1, 1), center_crop(hr, hr_dim(lh, hr.height), hr_dim(lw, hr.width))};
  p.lr = bicubic_resize(p.hr, lh, lw);
  return p;
}

Renderer model_renderer(const ModelParams<float>& params, const ModelConfig& cfg) {
  return [&params, cfg](const Image& lr, const Image& hr) {
    return render(lr, hr.height, hr.width, params, cfg);
  };
}

Renderer bicubic_renderer() {
  return [](const Image& lr, const Image& hr) {
    Image up = bicubic_resize(lr, hr.height, hr.width);
    clamp_unit(up);
    return up;
  };
}

double EvalReport::mean_at(double scale) const {
  for (const auto& r : results)
    if (r.scale == scale) return r.mean;
  throw EvalError(fmt::format("report has no results at scale {}", scale));
}

std::string config_fingerprint(const ModelParams<float>& params, const ModelConfig& cfg) {
  Fnv1a h;
  h.mix(canonical_json(cfg));
  h.mix(serialize_checkpoint(params, cfg));
  return h.hex();
}

std::string protocol_fingerprint(const std::string& dataset_fp,
                                 const std::vector<double>& scales) {
  Fnv1a h;
  h.mix(dataset_fp);
  for (double s : scales) h.mix(fmt::format(";{:.17g}", s));
  return h.hex();
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

EvalReport evaluate_with(const Dataset& dataset, const std::string& dataset_fp,
                         const std::vector<double>& scales, const Renderer& renderer,
                         const std::string& method, const std::string& config_fp) {
  require_scales(scales);
  if (dataset.empty()) throw EvalError("evaluation dataset is empty");
  const auto t0 = Clock::now();
  EvalReport rep;
  rep.method = method;
  rep.config_fingerprint = config_fp;
  rep.protocol_fingerprint = protocol_fingerprint(dataset_fp, scales);
  rep.images = dataset.names;
  for (double scale : scales) {
    ScaleResult sr;
    sr.scale = scale;
    sr.psnr.assign(dataset.size(), 0.0);
    for_each_image(dataset, scale, [&](std::size_t i) {
      const EvalPair pair = make_eval_pair(dataset.images[i], scale);
      sr.psnr[i] = psnr(renderer(pair.lr, pair.hr), pair.hr);
    });
    sr.mean = mean_of(sr.psnr);
    rep.results.push_back(std::move(sr));
  }
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

EvalReport evaluate(const std::filesystem::path& ckpt, const std::filesystem::path& dataset_dir,
                    const std::vector<double>& scales) {
  std::vector<std::string> missing;
  if (!std::filesystem::is_regular_file(ckpt)) missing.push_back("checkpoint " + ckpt.string());
  if (!std::filesystem::is_directory(dataset_dir))
    missing.push_back("dataset directory " + dataset_dir.string());
  if (!missing.empty()) {
    std::string msg = "missing files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw EvalError(msg);
  }
  const Checkpoint c = load_checkpoint(ckpt);
  const Dataset ds = load_dataset(dataset_dir);
  return evaluate_with(ds, dataset_fingerprint(dataset_dir), scales,
                       model_renderer(c.params, c.config), "model",
                       config_fingerprint(c.params, c.config));
}

EvalReport evaluate_bicubic(const std::filesystem::path& dataset_dir,
                            const std::vector<double>& scales) {
  const Dataset ds = load_eval_dataset(dataset_dir);
  Fnv1a h;
  h.mix("bicubic");
  return evaluate_with(ds, dataset_fingerprint(dataset_dir), scales, bicubic_renderer(),
                       "bicubic", h.hex());
}

void check_comparable(const std::vector<const EvalReport*>& reports) {
  for (const EvalReport* r : reports)
    if (r->protocol_fingerprint != reports.front()->protocol_fingerprint)
      throw EvalError("fingerprint mismatch: reports " + reports.front()->protocol_fingerprint +
                      " and " + r->protocol_fingerprint +
                      " were produced under different datasets or scales");
}

std::string toggle_label(const ModelConfig& cfg) {
  std::string out;
  const auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(cfg.use_residual, "R");
  add(cfg.use_fusion, "C");
  add(cfg.use_encoding, "S");
  return out.empty() ? "none" : out;
}

AblationReport run_ablation(const TrainConfig& base, const std::filesystem::path& dataset_dir,
                            const StudyOptions& options) {
  const auto t0 = Clock::now();
  const StudyData d = prepare_study(base, dataset_dir, options);
  AblationReport rep;
  rep.scales = options.scales;
  rep.seeds = d.seeds;
  rep.protocol_fingerprint = protocol_fingerprint(d.dataset_fp, options.scales);
  std::vector<const EvalReport*> all;
  for (unsigned bits = 0; bits < 8; ++bits) {
    TrainConfig cfg = base;
    cfg.model.use_residual = bits & 1U;
    cfg.model.use_fusion = bits & 2U;
    cfg.model.use_encoding = bits & 4U;
    AblationRow row;
    row.use_encoding = cfg.model.use_encoding;
    row.use_fusion = cfg.model.use_fusion;
    row.use_residual = cfg.model.use_residual;
    row.label = toggle_label(cfg.model);
    row.parameter_count = parameter_count(cfg.model);
    for (std::uint64_t seed : d.seeds)
      row.runs.push_back(train_and_eval(cfg, seed, d.train_set, d.eval_set, d.dataset_fp,
                                        options, row.label));
    row.mean_psnr = average_runs(row.runs, options.scales.size());
    rep.rows.push_back(std::move(row));
  }
  for (const auto& row : rep.rows)
    for (const auto& r : row.runs) all.push_back(&r);
  check_comparable(all);
  for (auto& row : rep.rows) row.delta = deltas(row.mean_psnr, rep.rows.front().mean_psnr);
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

DimSweepReport run_dim_sweep(const TrainConfig& base, const std::vector<std::size_t>& dims,
                             const std::filesystem::path& dataset_dir,
                             const StudyOptions& options) {
  for (std::size_t dim : dims)
    if (dim == 0 || dim % 4 != 0)
      throw ConfigError(fmt::format("encoding dim {} must be a positive multiple of 4", dim));
  const auto t0 = Clock::now();
  const StudyData d = prepare_study(base, dataset_dir, options);
  DimSweepReport rep;
  rep.scales = options.scales;
  rep.seeds = d.seeds;
  rep.protocol_fingerprint = protocol_fingerprint(d.dataset_fp, options.scales);

  std::vector<std::size_t> all_dims{0};
  for (std::size_t dim : dims)
    if (std::find(all_dims.begin(), all_dims.end(), dim) == all_dims.end())
      all_dims.push_back(dim);
  for (std::size_t dim : all_dims) {
    TrainConfig cfg = base;
    cfg.model.use_residual = true;
    cfg.model.use_fusion = true;
    cfg.model.use_encoding = dim > 0;
    if (dim > 0) cfg.model.encoding_dim = dim;
    cfg.model.validate();
    DimRow row;
    row.dim = dim;
    row.layer0_width = cfg.model.decoder_input_width();
    row.parameter_count = parameter_count(cfg.model);
    for (std::uint64_t seed : d.seeds)
      row.runs.push_back(train_and_eval(cfg, seed, d.train_set, d.eval_set, d.dataset_fp,
                                        options, fmt::format("dim{}", dim)));
    row.mean_psnr = average_runs(row.runs, options.scales.size());
    rep.rows.push_back(std::move(row));
  }
  rep.base_layer0_width = rep.rows.front().layer0_width;
  std::vector<const EvalReport*> all;
  for (const auto& row : rep.rows)
    for (const auto& r : row.runs) all.push_back(&r);
  check_comparable(all);
  for (auto& row : rep.rows) row.delta = deltas(row.mean_psnr, rep.rows.front().mean_psnr);
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

double delta_percent(double a, double b) {
  if (a == b) return 0.0;
  if (b == 0.0) return a > 0 ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
  return 100.0 * (a - b) / b;
}

LaplacianReport laplacian_study_with(const Dataset& dataset, const std::string& dataset_fp,
                                     const std::vector<double>& scales,
                                     const Renderer& with_s, const Renderer& without_s,
                                     const std::string& fp_with_s,
                                     const std::string& fp_without_s) {
  require_scales(scales);
  if (dataset.empty()) throw EvalError("evaluation dataset is empty");
  const auto t0 = Clock::now();
  LaplacianReport rep;
  rep.fingerprint_with_s = fp_with_s;
  rep.fingerprint_without_s = fp_without_s;
  rep.protocol_fingerprint = protocol_fingerprint(dataset_fp, scales);
  const std::size_t n = dataset.size();
  for (double scale : scales) {
    std::vector<LaplacianStats> a(n), b(n);
    for_each_image(dataset, scale, [&](std::size_t k) {
      const EvalPair pair = make_eval_pair(dataset.images[k], scale);
      a[k] = laplacian_stats(with_s(pair.lr, pair.hr), pair.hr);
      b[k] = laplacian_stats(without_s(pair.lr, pair.hr), pair.hr);
    });
    LaplacianRow row;
    row.scale = scale;
    for (std::size_t k = 0; k < n; ++k) {
      row.with_s.mean_abs_laplacian += a[k].mean_abs_laplacian / static_cast<double>(n);
      row.with_s.mean_abs_laplacian_error += a[k].mean_abs_laplacian_error / static_cast<double>(n);
      row.without_s.mean_abs_laplacian += b[k].mean_abs_laplacian / static_cast<double>(n);
      row.without_s.mean_abs_laplacian_error +=
          b[k].mean_abs_laplacian_error / static_cast<double>(n);
    }
    row.delta_mean_abs_pct =
        delta_percent(row.with_s.mean_abs_laplacian, row.without_s.mean_abs_laplacian);
    row.delta_error_pct = delta_percent(row.with_s.mean_abs_laplacian_error,
                                        row.without_s.mean_abs_laplacian_error);
    rep.rows.push_back(row);
  }
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

LaplacianReport laplacian_study(const std::filesystem::path& ckpt_with_s,
                                const std::filesystem::path& ckpt_without_s,
                                const std::filesystem::path& dataset_dir,
                                const std::vector<double>& scales) {
  std::vector<std::string> missing;
  for (const auto& p : {ckpt_with_s, ckpt_without_s})
    if (!std::filesystem::is_regular_file(p)) missing.push_back("checkpoint " + p.string());
  if (!std::filesystem::is_directory(dataset_dir))
    missing.push_back("dataset directory " + dataset_dir.string());
  if (!missing.empty()) {
    std::string msg = "missing files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw EvalError(msg);
  }
  const Checkpoint s = load_checkpoint(ckpt_with_s);
  const Checkpoint nos = load_checkpoint(ckpt_without_s);
  const Dataset ds = load_dataset(dataset_dir);
  return laplacian_study_with(ds, dataset_fingerprint(dataset_dir), scales,
                              model_renderer(s.params, s.config),
                              model_renderer(nos.params, nos.config),
                              config_fingerprint(s.params, s.config),
                              config_fingerprint(nos.params, nos.config));
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& s : r.results)
    results.push_back({{"scale", s.scale}, {"mean_psnr", num(s.mean)}, {"psnr", num_list(s.psnr)}});
  return {{"kind", "eval"},
          {"method", r.method},
          {"config_fingerprint", r.config_fingerprint},
          {"protocol_fingerprint", r.protocol_fingerprint},
          {"images", r.images},
          {"results", results}};
}

nlohmann::json to_json(const AblationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json fps = nlohmann::json::array();
    for (const auto& run : row.runs) fps.push_back(run.config_fingerprint);
    rows.push_back({{"label", row.label},
                    {"spatial_encoding", row.use_encoding},
                    {"coordinate_fusion", row.use_fusion},
                    {"residual", row.use_residual},
                    {"parameter_count", row.parameter_count},
                    {"mean_psnr", num_list(row.mean_psnr)},
                    {"delta_db", num_list(row.delta)},
                    {"config_fingerprints", fps}});
  }
  return {{"kind", "ablation"},
          {"scales", r.scales},
          {"seeds", r.seeds},
          {"protocol_fingerprint", r.protocol_fingerprint},
          {"rows", rows}};
}

nlohmann::json to_json(const DimSweepReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json fps = nlohmann::json::array();
    for (const auto& run : row.runs) fps.push_back(run.config_fingerprint);
    rows.push_back({{"dim", row.dim},
                    {"layer0_width", row.layer0_width},
                    {"parameter_count", row.parameter_count},
                    {"mean_psnr", num_list(row.mean_psnr)},
                    {"delta_db", num_list(row.delta)},
                    {"config_fingerprints", fps}});
  }
  return {{"kind", "dimsweep"},
          {"scales", r.scales},
          {"seeds", r.seeds},
          {"protocol_fingerprint", r.protocol_fingerprint},
          {"base_layer0_width", r.base_layer0_width},
          {"rows", rows}};
}

nlohmann::json to_json(const LaplacianReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"scale", row.scale},
                    {"with_s", stats_json(row.with_s)},
                    {"without_s", stats_json(row.without_s)},
                    {"delta_mean_abs_pct", num(row.delta_mean_abs_pct)},
                    {"delta_error_pct", num(row.delta_error_pct)}});
  return {{"kind", "lapstudy"},
          {"fingerprint_with_s", r.fingerprint_with_s},
          {"fingerprint_without_s", r.fingerprint_without_s},
          {"protocol_fingerprint", r.protocol_fingerprint},
          {"rows", rows}};
}

std::string to_text(const EvalReport& r) {
  std::string out = fmt::format("method {}  config {}  protocol {}\n", r.method,
                                r.config_fingerprint, r.protocol_fingerprint);
  out += fmt::format("{:<20}", "image");
  for (const auto& s : r.results) out += fmt::format(" {:>10}", scale_str(s.scale));
  out += '\n';
  for (std::size_t i = 0; i < r.images.size(); ++i) {
    out += fmt::format("{:<20}", r.images[i]);
    for (const auto& s : r.results) out += fmt::format(" {:>10.4f}", s.psnr[i]);
    out += '\n';
  }
  out += fmt::format("{:<20}", "mean");
  for (const auto& s : r.results) out += fmt::format(" {:>10.4f}", s.mean);
  out += fmt::format("\nwall clock {:.2f} s\n", r.wall_seconds);
  return out;
}

std::string to_text(const AblationReport& r) {
  std::string out = fmt::format("ablation  seeds {}  protocol {}\n", seeds_str(r.seeds),
                                r.protocol_fingerprint);
  out += fmt::format("{:<8} {:>10}", "config", "params") + scale_header(r.scales, "psnr ") +
         scale_header(r.scales, "delta ") + '\n';
  for (const auto& row : r.rows) {
    out += fmt::format("{:<8} {:>10}", row.label, row.parameter_count);
    for (double v : row.mean_psnr) out += fmt::format(" {:>12.4f}", v);
    for (double v : row.delta) out += fmt::format(" {:>+12.4f}", v);
    out += '\n';
  }
  out += fmt::format("wall clock {:.2f} s\n", r.wall_seconds);
  return out;
}

std::string to_text(const DimSweepReport& r) {
  std::string out = fmt::format("dimension sweep  seeds {}  protocol {}  base layer-0 width {}\n",
                                seeds_str(r.seeds), r.protocol_fingerprint, r.base_layer0_width);
  out += fmt::format("{:<5} {:>8} {:>10}", "dim", "layer0", "params") +
         scale_header(r.scales, "psnr ") + scale_header(r.scales, "delta ") + '\n';
  for (const auto& row : r.rows) {
    out += fmt::format("{:<5} {:>8} {:>10}", row.dim, row.layer0_width, row.parameter_count);
    for (double v : row.mean_psnr) out += fmt::format(" {:>12.4f}", v);
    for (double v : row.delta) out += fmt::format(" {:>+12.4f}", v);
    out += '\n';
  }
  out += fmt::format("wall clock {:.2f} s\n", r.wall_seconds);
  return out;
}

std::string to_text(const LaplacianReport& r) {
  std::string out = fmt::format("laplacian study  +S {}  -S {}  protocol {}\n",
                                r.fingerprint_with_s, r.fingerprint_without_s,
                                r.protocol_fingerprint);
  out += fmt::format("{:<8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n", "scale", "|L| +S",
                     "|L| -S", "delta %", "err +S", "err -S", "delta %");
  for (const auto& row : r.rows)
    out += fmt::format("{:<8} {:>12.6f} {:>12.6f} {:>+12.3f} {:>12.6f} {:>12.6f} {:>+12.3f}\n",
                       scale_str(row.scale), row.with_s.mean_abs_laplacian,
                       row.without_s.mean_abs_laplacian, row.delta_mean_abs_pct,
                       row.with_s.mean_abs_laplacian_error,
                       row.without_s.mean_abs_laplacian_error, row.delta_error_pct);
  out += fmt::format("wall clock {:.2f} s\n", r.wall_seconds);
  return out;
}

void write_report(const nlohmann::json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace ultrasr
