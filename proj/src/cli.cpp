#include "ultrasr/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ultrasr/checkpoint.hpp"
#include "ultrasr/config.hpp"
#include "ultrasr/dataset.hpp"
#include "ultrasr/evalbench.hpp"
#include "ultrasr/image.hpp"
#include "ultrasr/kernels.hpp"
#include "ultrasr/model.hpp"
#include "ultrasr/training.hpp"

namespace fs = std::filesystem;

namespace ultrasr {
namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Args {
  int threads = 0;
  fs::path config, out, ckpt, ckpt_s, ckpt_nos, input, output, dataset, report, ckpt_dir;
  std::optional<double> scale;
  std::string out_size, baseline;
  std::vector<double> eval_scales{2, 3, 4}, study_scales{2, 4, 8}, lap_scales{2, 4, 8};
  std::vector<std::size_t> dims{12, 24, 48};
  std::vector<std::uint64_t> seeds;
  std::size_t count = 16, size = 96;
  std::uint64_t seed = 0;
};

// "HxW" with both parts >= 1.
std::pair<std::size_t, std::size_t> parse_size(const std::string& s) {
  const auto x = s.find_first_of("xX");
  std::size_t h = 0, w = 0, used_h = 0, used_w = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    h = std::stoul(s.substr(0, x), &used_h);
    w = std::stoul(s.substr(x + 1), &used_w);
  } catch (const std::exception&) {
    throw UsageError("--out-size expects HxW, got '" + s + "'");
  }
  if (used_h != x || used_w != s.size() - x - 1 || h == 0 || w == 0)
    throw UsageError("--out-size expects HxW with positive integers, got '" + s + "'");
  return {h, w};
}

std::size_t scaled_dim(std::size_t n, double scale) {
  const double v = std::floor(scale * static_cast<double>(n) + 1e-9);
  if (v < 1.0) throw UsageError(fmt::format("scale {} gives an empty output", scale));
  return static_cast<std::size_t>(v);
}

void emit(std::ostream& out, const nlohmann::json& j, const std::string& text,
          const fs::path& report) {
  if (!report.empty()) write_report(j, report);
  out << text;
}

TrainConfig study_config(const Args& a) { return load_train_config(a.config); }

void cmd_train(const Args& a, std::ostream& out) {
  TrainConfig cfg = load_train_config(a.config);
  if (!a.dataset.empty()) cfg.dataset_dir = a.dataset;
  TrainOptions opts;
  opts.checkpoint = a.out;
  opts.progress = &out;
  train(cfg, opts);
  out << "wrote " << a.out.string() << '\n';
}

void cmd_upscale(const Args& a, std::ostream& out) {
  const Checkpoint c = load_checkpoint(a.ckpt);
  const Image lr = load_png(a.input);
  std::size_t h = 0, w = 0;
  if (a.scale) {
    if (!std::isfinite(*a.scale) || *a.scale <= 0.0)
      throw UsageError("--scale must be a positive number");
    h = scaled_dim(lr.height, *a.scale);
    w = scaled_dim(lr.width, *a.scale);
  } else if (!a.out_size.empty()) {
    std::tie(h, w) = parse_size(a.out_size);
  } else {
    throw UsageError("one of --scale or --out-size is required");
  }
  save_png(render(lr, h, w, c.params, c.config), a.output);
  out << fmt::format("{}x{} -> {}x{} {}\n", lr.height, lr.width, h, w, a.output.string());
}

void cmd_eval(const Args& a, std::ostream& out) {
  EvalReport r;
  if (a.baseline == "bicubic") {
    r = evaluate_bicubic(a.dataset, a.eval_scales);
  } else {
    if (a.ckpt.empty()) throw UsageError("--ckpt is required unless --baseline bicubic is given");
    r = evaluate(a.ckpt, a.dataset, a.eval_scales);
  }
  emit(out, to_json(r), to_text(r), a.report);
}

StudyOptions study_options(const Args& a, std::ostream& out) {
  StudyOptions o;
  o.scales = a.study_scales;
  o.seeds = a.seeds;
  o.checkpoint_dir = a.ckpt_dir;
  o.progress = &out;
  return o;
}

void cmd_ablate(const Args& a, std::ostream& out) {
  const AblationReport r = run_ablation(study_config(a), a.dataset, study_options(a, out));
  emit(out, to_json(r), to_text(r), a.report);
}

void cmd_dimsweep(const Args& a, std::ostream& out) {
  const DimSweepReport r =
      run_dim_sweep(study_config(a), a.dims, a.dataset, study_options(a, out));
  emit(out, to_json(r), to_text(r), a.report);
}

void cmd_lapstudy(const Args& a, std::ostream& out) {
  const LaplacianReport r = laplacian_study(a.ckpt_s, a.ckpt_nos, a.dataset, a.lap_scales);
  emit(out, to_json(r), to_text(r), a.report);
}

void cmd_make_dataset(const Args& a, std::ostream& out) {
  if (a.count == 0 || a.size == 0) throw UsageError("--count and --size must be >= 1");
  const auto paths = write_synthetic_corpus(a.out, a.count, a.size, a.seed);
  out << "wrote " << paths.size() << " images to " << a.out.string() << '\n';
}

void cmd_make_lr(const Args& a, std::ostream& out) {
  if (!a.scale || !std::isfinite(*a.scale) || *a.scale < 1.0)
    throw UsageError("--scale must be a number >= 1");
  const Dataset ds = load_dataset(a.input);
  fs::create_directories(a.out);
  for (std::size_t i = 0; i < ds.size(); ++i)
    save_png(make_eval_pair(ds.images[i], *a.scale).lr, a.out / ds.names[i]);
  out << "wrote " << ds.size() << " images to " << a.out.string() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Arbitrary-scale super-resolution with an implicit image decoder."};
  app.name("ultrasr");
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(config_schema_help());
  Args a;
  app.add_option("--threads", a.threads, "worker count (default: machine parallelism)")
      ->envname("ULTRASR_THREADS")
      ->check(CLI::PositiveNumber);

  const auto sub = [&app](const char* name, const char* desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->footer(config_schema_help());
    return s;
  };
  const auto scales_opt = [](CLI::App* s, std::vector<double>& v) {
    s->add_option("--scales", v, "comma-separated scale list")->delimiter(',')->capture_default_str();
  };

  CLI::App* train_cmd = sub("train", "train a model from a JSON config");
  train_cmd->add_option("--config", a.config, "training config (JSON)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", a.out, "checkpoint path; the log goes to <out>.log.jsonl")->required();
  train_cmd->add_option("--dataset", a.dataset, "overrides dataset_dir from the config");

  CLI::App* up = sub("upscale", "upscale one PNG; output dims = floor(scale * input dims)");
  up->add_option("--ckpt", a.ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  up->add_option("--input", a.input, "input PNG (8-bit RGB)")->required()->check(CLI::ExistingFile);
  up->add_option("--output", a.output, "output PNG")->required();
  auto* sc = up->add_option("--scale", a.scale, "real-valued upscaling factor");
  auto* os = up->add_option("--out-size", a.out_size, "explicit output size HxW");
  sc->excludes(os);

  CLI::App* ev = sub("eval", "multi-scale PSNR of a checkpoint or the bicubic baseline");
  ev->add_option("--ckpt", a.ckpt, "checkpoint (not needed with --baseline)");
  ev->add_option("--dataset", a.dataset, "directory of HR PNGs")->required();
  scales_opt(ev, a.eval_scales);
  ev->add_option("--report", a.report, "JSON report path");
  ev->add_option("--baseline", a.baseline, "skip the model and run a baseline")
      ->check(CLI::IsMember({"bicubic"}));

  CLI::App* ab = sub("ablate", "train and evaluate all eight S/C/R combinations");
  ab->add_option("--config", a.config, "base training config (JSON)")->required()->check(CLI::ExistingFile);
  ab->add_option("--dataset", a.dataset, "evaluation directory of HR PNGs")->required();
  ab->add_option("--report", a.report, "JSON report path");
  scales_opt(ab, a.study_scales);
  ab->add_option("--seeds", a.seeds, "seeds to average over (default: the config seed)")->delimiter(',');
  ab->add_option("--ckpt-dir", a.ckpt_dir, "keep every trained checkpoint here");

  CLI::App* ds = sub("dimsweep", "sweep the spatial encoding width with R and C on");
  ds->add_option("--config", a.config, "base training config (JSON)")->required()->check(CLI::ExistingFile);
  ds->add_option("--dims", a.dims, "encoding widths, multiples of 4")->delimiter(',')->capture_default_str();
  ds->add_option("--dataset", a.dataset, "evaluation directory of HR PNGs")->required();
  ds->add_option("--report", a.report, "JSON report path");
  scales_opt(ds, a.study_scales);
  ds->add_option("--seeds", a.seeds, "seeds to average over (default: the config seed)")->delimiter(',');
  ds->add_option("--ckpt-dir", a.ckpt_dir, "keep every trained checkpoint here");

  CLI::App* lp = sub("lapstudy", "Laplacian sharpness of a model with and without S");
  lp->add_option("--ckpt-s", a.ckpt_s, "checkpoint trained with spatial encoding")->required();
  lp->add_option("--ckpt-nos", a.ckpt_nos, "checkpoint trained without it")->required();
  lp->add_option("--dataset", a.dataset, "directory of HR PNGs")->required();
  lp->add_option("--report", a.report, "JSON report path");
  scales_opt(lp, a.lap_scales);

  CLI::App* md = sub("make-dataset", "write the seeded synthetic corpus");
  md->add_option("--out", a.out, "output directory")->required();
  md->add_option("--count", a.count, "number of images")->capture_default_str();
  md->add_option("--size", a.size, "image side in pixels")->capture_default_str();
  md->add_option("--seed", a.seed, "corpus seed")->capture_default_str();

  CLI::App* ml = sub("make-lr", "bicubically shrink every PNG in a directory");
  ml->add_option("--input", a.input, "directory of HR PNGs")->required();
  ml->add_option("--scale", a.scale, "downscaling factor >= 1")->required();
  ml->add_option("--out", a.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    CLI::App* shown = &app;
    for (CLI::App* s : app.get_subcommands({})) if (s->parsed()) shown = s;
    out << shown->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    CLI::App* shown = &app;
    for (CLI::App* s : app.get_subcommands({})) if (s->parsed()) shown = s;
    err << "error: " << e.what() << "\n\n" << shown->help();
    return kExitUsage;
  }
  CLI::App* which = app.get_subcommands().front();
  try {
    if (a.threads > 0) kernels::set_num_threads(a.threads);
    const std::string name = which->get_name();
    if (name == "train") cmd_train(a, out);
    else if (name == "upscale") cmd_upscale(a, out);
    else if (name == "eval") cmd_eval(a, out);
    else if (name == "ablate") cmd_ablate(a, out);
    else if (name == "dimsweep") cmd_dimsweep(a, out);
    else if (name == "lapstudy") cmd_lapstudy(a, out);
    else if (name == "make-dataset") cmd_make_dataset(a, out);
    else cmd_make_lr(a, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << which->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace ultrasr
