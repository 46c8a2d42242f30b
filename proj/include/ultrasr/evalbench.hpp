#pragma once

// Evaluation protocols: multi-scale PSNR tables, the S/C/R ablation, the
// encoding-dimension sweep and the Laplacian sharpness study.
//
// JSON reports are deterministic (no timings); the text rendering adds
// wall-clock figures. Infinite PSNR is written as the string "inf".

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ultrasr/config.hpp"
#include "ultrasr/dataset.hpp"
#include "ultrasr/image.hpp"
#include "ultrasr/model.hpp"

namespace ultrasr {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// HR center-cropped to round(floor(H/k) * k) per axis, LR its bicubic shrink
// to floor(H/k) x floor(W/k).
struct EvalPair {
  Image lr;
  Image hr;
};
EvalPair make_eval_pair(const Image& hr, double scale);

// Produces the SR image for an evaluation pair; must return hr's dimensions.
using Renderer = std::function<Image(const Image& lr, const Image& hr)>;

// params must outlive the returned renderer.
Renderer model_renderer(const ModelParams<float>& params, const ModelConfig& cfg);
Renderer bicubic_renderer();

struct ScaleResult {
  double scale = 0.0;
  std::vector<double> psnr;  // one per image, dataset order
  double mean = 0.0;
};

struct EvalReport {
  std::string method;                // "model" or "bicubic"
  std::string config_fingerprint;    // config + checkpoint bytes
  std::string protocol_fingerprint;  // dataset + scales
  std::vector<std::string> images;
  std::vector<ScaleResult> results;
  double wall_seconds = 0.0;

  double mean_at(double scale) const;
};

// Hash of the canonical config and the serialized checkpoint.
std::string config_fingerprint(const ModelParams<float>& params, const ModelConfig& cfg);
// Hash of the dataset fingerprint and the scale list.
std::string protocol_fingerprint(const std::string& dataset_fp,
                                 const std::vector<double>& scales);

double mean_of(const std::vector<double>& values);

EvalReport evaluate_with(const Dataset& dataset, const std::string& dataset_fp,
                         const std::vector<double>& scales, const Renderer& renderer,
                         const std::string& method, const std::string& config_fp);

EvalReport evaluate(const std::filesystem::path& ckpt, const std::filesystem::path& dataset_dir,
                    const std::vector<double>& scales);
EvalReport evaluate_bicubic(const std::filesystem::path& dataset_dir,
                            const std::vector<double>& scales);

// Throws EvalError unless every report shares one protocol fingerprint.
void check_comparable(const std::vector<const EvalReport*>& reports);

struct StudyOptions {
  std::vector<double> scales{2.0, 4.0, 8.0};
  std::vector<std::uint64_t> seeds;         // empty: the config's seed
  std::filesystem::path checkpoint_dir;     // empty: keep models in memory
  std::ostream* progress = nullptr;
};

struct AblationRow {
  bool use_encoding = false;
  bool use_fusion = false;
  bool use_residual = false;
  std::string label;
  std::size_t parameter_count = 0;
  std::vector<double> mean_psnr;  // per scale, averaged over seeds
  std::vector<double> delta;      // against the all-off row
  std::vector<EvalReport> runs;   // one per seed
};

struct AblationReport {
  std::vector<double> scales;
  std::vector<std::uint64_t> seeds;
  std::string protocol_fingerprint;
  std::vector<AblationRow> rows;  // row 0 is all-off
  double wall_seconds = 0.0;
};

// "R+C+S" style label, "none" when every toggle is off.
std::string toggle_label(const ModelConfig& cfg);

// Trains on base.dataset_dir (dataset_dir when empty), evaluates on dataset_dir.
AblationReport run_ablation(const TrainConfig& base, const std::filesystem::path& dataset_dir,
                            const StudyOptions& options = {});

struct DimRow {
  std::size_t dim = 0;  // 0: no spatial encoding
  std::size_t layer0_width = 0;
  std::size_t parameter_count = 0;
  std::vector<double> mean_psnr;
  std::vector<double> delta;
  std::vector<EvalReport> runs;
};

struct DimSweepReport {
  std::vector<double> scales;
  std::vector<std::uint64_t> seeds;
  std::string protocol_fingerprint;
  std::size_t base_layer0_width = 0;
  std::vector<DimRow> rows;  // row 0 is dim 0
  double wall_seconds = 0.0;
};

// R and C are forced on; every dim must be a positive multiple of 4.
DimSweepReport run_dim_sweep(const TrainConfig& base, const std::vector<std::size_t>& dims,
                             const std::filesystem::path& dataset_dir,
                             const StudyOptions& options = {});

struct LaplacianRow {
  double scale = 0.0;
  LaplacianStats with_s;
  LaplacianStats without_s;
  double delta_mean_abs_pct = 0.0;
  double delta_error_pct = 0.0;
};

struct LaplacianReport {
  std::string fingerprint_with_s;
  std::string fingerprint_without_s;
  std::string protocol_fingerprint;
  std::vector<LaplacianRow> rows;
  double wall_seconds = 0.0;
};

// 100 * (a - b) / b, with 0 when both are 0.
double delta_percent(double a, double b);

LaplacianReport laplacian_study_with(const Dataset& dataset, const std::string& dataset_fp,
                                     const std::vector<double>& scales,
                                     const Renderer& with_s, const Renderer& without_s,
                                     const std::string& fp_with_s,
                                     const std::string& fp_without_s);
LaplacianReport laplacian_study(const std::filesystem::path& ckpt_with_s,
                                const std::filesystem::path& ckpt_without_s,
                                const std::filesystem::path& dataset_dir,
                                const std::vector<double>& scales);

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const AblationReport& r);
nlohmann::json to_json(const DimSweepReport& r);
nlohmann::json to_json(const LaplacianReport& r);

std::string to_text(const EvalReport& r);
std::string to_text(const AblationReport& r);
std::string to_text(const DimSweepReport& r);
std::string to_text(const LaplacianReport& r);

// Pretty JSON with a trailing newline, written atomically.
void write_report(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace ultrasr
