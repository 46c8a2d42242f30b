// Runs the eight acceptance criteria and prints one PASS/FAIL line each.
//
// Exit status is 0 once every criterion has been evaluated; --strict turns
// any FAIL into exit status 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "fd.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "ultrasr/checkpoint.hpp"
#include "ultrasr/cli.hpp"
#include "ultrasr/evalbench.hpp"
#include "ultrasr/training.hpp"

using namespace ultrasr;
namespace fs = std::filesystem;
using testutil::Leaves;
using testutil::random_tensor;
using V = ad::Var<double>;
using VarMap = std::map<std::string, V>;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradTol = 1e-4;
constexpr double kOracleTol = 1e-9;
constexpr double kUnityTol = 1e-6;
constexpr double kToggleGainDb = 0.05;
constexpr double kBicubicMarginDb = 1.0;
constexpr double kGradSeconds = 120.0;
constexpr double kOracleSeconds = 60.0;
constexpr double kAblationSeconds = 1800.0;

constexpr std::size_t kCorpusCount = 16;
constexpr std::size_t kCorpusSize = 96;
constexpr std::uint64_t kCorpusSeed = 0;
constexpr std::uint64_t kHeldOutSeed = 1;
const std::vector<std::uint64_t> kSeeds{0, 1, 2};

// About 2000 steps of a desk-sized network.
TrainConfig desk_config(const fs::path& data) {
  TrainConfig c;
  c.dataset_dir = data;
  c.epochs = 20;
  c.iters_per_epoch = 100;
  c.batch_size = 32;
  c.lr_patch = 24;
  c.queries_per_item = 36;
  c.lr = 1e-3;
  c.lr_halve_epochs = {6, 10, 14, 17};
  c.model.enc_channels = 16;
  c.model.enc_blocks = 2;
  c.model.hidden_width = 64;
  c.model.hidden_layers = 4;
  c.model.encoding_dim = 48;
  return c;
}

TrainConfig tiny_config(const fs::path& data) {
  TrainConfig c;
  c.dataset_dir = data;
  c.epochs = 2;
  c.iters_per_epoch = 3;
  c.batch_size = 2;
  c.lr_patch = 8;
  c.queries_per_item = 24;
  c.lr = 1e-3;
  c.lr_halve_epochs = {1};
  c.model.enc_channels = 3;
  c.model.enc_blocks = 1;
  c.model.hidden_width = 8;
  c.model.hidden_layers = 2;
  c.model.encoding_dim = 8;
  return c;
}

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

V weighted_sum(ad::Graph<double>& g, V out) {
  return ad::sum(ad::multiply(out, g.constant(random_tensor<double>(out.shape(), 999))));
}

Tensor<double> off_zero(Shape s, std::uint64_t seed) {
  Tensor<double> t = random_tensor<double>(std::move(s), seed);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += t[i] >= 0 ? 0.05 : -0.05;
  return t;
}

Verdict gradient_suite() {
  Verdict v;
  double worst = 0.0;
  auto check = [&](const std::string& name, const testutil::LossFn& fn, const Leaves& leaves,
                   double h = 1e-5) {
    const double err = testutil::gradient_error(fn, leaves, h);
    worst = std::max(worst, err);
    v.require(err < kGradTol, fmt::format("{} rel err {:.3g}", name, err));
  };

  const std::vector<Shape> rhs{{4, 3}, {}, {3}, {4, 1}};
  for (const Shape& bshape : rhs)
    for (ad::OpKind kind : {ad::OpKind::add, ad::OpKind::sub, ad::OpKind::multiply})
      check(std::string(ad::op_name(kind)),
            [kind](ad::Graph<double>& g, const VarMap& m) {
              const std::vector<V> in{m.at("a"), m.at("b")};
              return weighted_sum(g, ad::eval_op<double>(kind, in));
            },
            {{"a", random_tensor<double>({4, 3}, 1)}, {"b", random_tensor<double>(bshape, 2)}});
  check("matmul",
        [](ad::Graph<double>& g, const VarMap& m) {
          return weighted_sum(g, ad::matmul(m.at("a"), m.at("b")));
        },
        {{"a", random_tensor<double>({5, 4}, 3)}, {"b", random_tensor<double>({4, 3}, 4)}});
  check("conv2d3x3",
        [](ad::Graph<double>& g, const VarMap& m) {
          return weighted_sum(g, ad::conv2d3x3(m.at("x"), m.at("w"), m.at("b")));
        },
        {{"x", random_tensor<double>({2, 5, 4}, 5)},
         {"w", random_tensor<double>({3, 2, 3, 3}, 6)},
         {"b", random_tensor<double>({3}, 7)}});
  for (ad::OpKind kind : {ad::OpKind::relu, ad::OpKind::sin, ad::OpKind::cos, ad::OpKind::abs,
                          ad::OpKind::scalar_multiply, ad::OpKind::mean, ad::OpKind::sum})
    check(std::string(ad::op_name(kind)),
          [kind](ad::Graph<double>& g, const VarMap& m) {
            const std::vector<V> in{m.at("x")};
            ad::OpAttrs attrs;
            attrs.scalar = -2.5;
            return weighted_sum(g, ad::eval_op<double>(kind, in, attrs));
          },
          {{"x", off_zero({3, 4}, 8)}});
  const Leaves ab{{"a", random_tensor<double>({3, 2}, 9)}, {"b", random_tensor<double>({3, 4}, 10)}};
  check("concat", [](ad::Graph<double>& g, const VarMap& m) {
    return weighted_sum(g, ad::concat<double>({m.at("a"), m.at("b"), m.at("a")}));
  }, ab);
  check("slice", [](ad::Graph<double>& g, const VarMap& m) {
    return weighted_sum(g, ad::slice(m.at("b"), 1, 3));
  }, ab);
  check("reshape", [](ad::Graph<double>& g, const VarMap& m) {
    return weighted_sum(g, ad::reshape(m.at("b"), Shape{2, 6}));
  }, ab);
  check("sum_groups", [](ad::Graph<double>& g, const VarMap& m) {
    return weighted_sum(g, ad::sum_groups(ad::reshape(m.at("b"), Shape{6, 2}), 3));
  }, ab);
  const Leaves fm{{"x", random_tensor<double>({2, 3, 4}, 11)}};
  check("unfold3x3", [](ad::Graph<double>& g, const VarMap& m) {
    return weighted_sum(g, ad::unfold3x3(m.at("x")));
  }, fm);
  check("gather_columns", [](ad::Graph<double>& g, const VarMap& m) {
    return weighted_sum(g, ad::gather_columns(m.at("x"), {0, 11, 5, 5, 2}));
  }, fm);
  check("periodic_encode",
        [](ad::Graph<double>& g, const VarMap& m) {
          return weighted_sum(g, ad::periodic_encode(m.at("d"), m.at("f")));
        },
        {{"d", random_tensor<double>({6, 2}, 12)},
         {"f", random_tensor<double>({3}, 13, 0.5, 4.0)}});

  // Full render + L1 pipeline on 8x8 LR patches.
  TrainConfig c = tiny_config({});
  c.scale_min = 2.0;
  c.scale_max = 3.0;
  c.model.enc_channels = 2;
  c.model.hidden_width = 6;
  Dataset ds;
  ds.names = {"a"};
  ds.images = {synthesize_image(32, 5, 0)};
  BatchSampler sampler(3);
  const Batch batch = sample_batch(ds, c, sampler);
  Leaves params;
  for (const auto& [k, t] : init_params<double>(c.model, 4)) params[k] = t;
  check("render+L1",
        [&](ad::Graph<double>& g, const VarMap& m) {
          return batch_loss(g, BoundParams<double>{m}, c.model, batch);
        },
        params, 1e-6);
  v.note(fmt::format("worst rel err {:.2e} over every op and the pipeline", worst));
  return v;
}

Verdict oracle_suite() {
  Verdict v;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const std::size_t h = 1 + s % 9, w = 1 + (s / 9) % 11;
    const Image a = testutil::random_image(h, w, 2 * s), b = testutil::random_image(h, w, 2 * s + 1);
    worst = std::max(worst, std::abs(psnr(a, b) - testutil::brute_psnr(a, b)));
    const LaplacianStats got = laplacian_stats(a, b), want = testutil::brute_laplacian(a, b);
    worst = std::max({worst, std::abs(got.mean_abs_laplacian - want.mean_abs_laplacian),
                      std::abs(got.mean_abs_laplacian_error - want.mean_abs_laplacian_error)});
    const std::size_t ci = 1 + s % 3, co = 1 + s % 4;
    const auto x = random_tensor<double>({ci, h, w}, 3 * s);
    const auto k = random_tensor<double>({co, ci, 3, 3}, 3 * s + 1);
    const auto bias = random_tensor<double>({co}, 3 * s + 2);
    ad::Graph<double> g;
    const auto y = ad::conv2d3x3(g.constant(x), g.constant(k), g.constant(bias)).value();
    const auto ref = testutil::brute_conv3x3(x, k, bias);
    for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y[i] - ref[i]));
  }
  v.require(worst < kOracleTol, fmt::format("max deviation {:.3g}", worst));
  v.note(fmt::format("max deviation {:.2e} over 100 inputs each", worst));
  return v;
}

Verdict encoding_suite() {
  Verdict v;
  const EncodingParams e12 = make_encoding_params(48);
  v.require(e12.freqs.size() == 12 && e12.dim() == 48, "F = 12 gives 48 dims");
  const auto zero = spatial_encoding({0.0, 0.0}, e12);
  v.require(zero.size() == 48, "length 4F");
  for (std::size_t i = 0; i < zero.size(); ++i)
    v.require(zero[i] == (i % 2 == 0 ? 0.0 : 1.0), fmt::format("phi(0)[{}]", i));
  Rng rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto phi = spatial_encoding({3 * u(rng), 3 * u(rng)}, e12);
    v.require(std::all_of(phi.begin(), phi.end(), [](double x) { return std::abs(x) <= 1.0; }),
              "encoding range");
  }

  double worst = 0.0;
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t fh = dim(rng), fw = dim(rng), oh = dim(rng) * 3, ow = dim(rng) * 3;
    const Vec2 t{u(rng), u(rng)};
    const QueryLayout q = locate_queries(fh, fw, std::span<const Vec2>(&t, 1), oh, ow);
    double sum = 0.0;
    for (double w : q.weight) {
      v.require(w >= 0.0 && w <= 1.0, "weight in [0, 1]");
      sum += w;
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  v.require(worst <= kUnityTol, fmt::format("weight sum off by {:.3g}", worst));
  v.note(fmt::format("max |sum - 1| = {:.1e} over 10^4 queries", worst));
  return v;
}

struct DeskRuns {
  AblationReport ablation;
  std::vector<EvalReport> bicubic;  // corpus, held-out
  double seconds = 0.0;
};

DeskRuns desk_runs(const fs::path& work, const fs::path& corpus, const fs::path& held_out) {
  DeskRuns d;
  const auto t0 = Clock::now();
  const TrainConfig base = desk_config(corpus);
  StudyOptions o;
  o.scales = {2.0, 4.0, 8.0};
  o.seeds = kSeeds;
  o.checkpoint_dir = work / "desk";
  o.progress = &std::cerr;
  // Only the two rows compared by the criterion are trained.
  for (bool on : {false, true}) {
    TrainConfig cfg = base;
    cfg.model.use_encoding = cfg.model.use_fusion = cfg.model.use_residual = on;
    AblationRow row;
    row.use_encoding = row.use_fusion = row.use_residual = on;
    row.label = toggle_label(cfg.model);
    row.parameter_count = parameter_count(cfg.model);
    for (std::uint64_t seed : kSeeds) {
      cfg.seed = seed;
      const fs::path ckpt = o.checkpoint_dir / fmt::format("{}_seed{}.ckpt", row.label, seed);
      std::cerr << "training " << row.label << " seed " << seed << std::endl;
      train(cfg, TrainOptions{ckpt, {}, nullptr});
      row.runs.push_back(evaluate(ckpt, corpus, o.scales));
    }
    for (std::size_t k = 0; k < o.scales.size(); ++k) {
      std::vector<double> per_seed;
      for (const auto& r : row.runs) per_seed.push_back(r.results[k].mean);
      row.mean_psnr.push_back(mean_of(per_seed));
    }
    d.ablation.rows.push_back(std::move(row));
  }
  for (auto& row : d.ablation.rows)
    for (std::size_t k = 0; k < o.scales.size(); ++k)
      row.delta.push_back(row.mean_psnr[k] - d.ablation.rows[0].mean_psnr[k]);
  d.ablation.scales = o.scales;
  d.ablation.seeds = kSeeds;
  d.ablation.protocol_fingerprint = d.ablation.rows[0].runs[0].protocol_fingerprint;
  d.seconds = since(t0);
  d.bicubic.push_back(evaluate_bicubic(corpus, {2.0}));
  d.bicubic.push_back(evaluate_bicubic(held_out, {2.0}));
  return d;
}

Verdict toggle_gain(const DeskRuns& d) {
  Verdict v;
  const AblationRow& none = d.ablation.rows[0];
  const AblationRow& all = d.ablation.rows[1];
  for (std::size_t k : {std::size_t{1}, std::size_t{2}}) {
    const double gain = all.mean_psnr[k] - none.mean_psnr[k];
    v.require(gain >= kToggleGainDb, fmt::format("x{:g} gain {:+.3f} dB", d.ablation.scales[k], gain));
    v.note(fmt::format("x{:g}: R+C+S {:.3f} dB, none {:.3f} dB, gain {:+.3f} dB",
                       d.ablation.scales[k], all.mean_psnr[k], none.mean_psnr[k], gain));
  }
  v.require(d.seconds < kAblationSeconds, fmt::format("took {:.0f} s", d.seconds));
  v.note(fmt::format("{} seeds, {:.0f} s", kSeeds.size(), d.seconds));
  return v;
}

Verdict arbitrary_scale(const DeskRuns& d, const fs::path& work, const fs::path& corpus,
                        const fs::path& held_out) {
  Verdict v;
  const Checkpoint ckpt = load_checkpoint(work / "desk" / "R+C+S_seed0.ckpt");
  const Image input = crop(load_png(corpus / "img_000.png"), 10, 20, 40, 33);
  for (double s : {2.0, 2.5, 3.7, 12.0, 18.0}) {
    const auto oh = static_cast<std::size_t>(std::floor(s * 40 + 1e-9));
    const auto ow = static_cast<std::size_t>(std::floor(s * 33 + 1e-9));
    try {
      const Image out = render(input, oh, ow, ckpt.params, ckpt.config);
      v.require(out.height == oh && out.width == ow, fmt::format("x{:g} dims", s));
    } catch (const std::exception& e) {
      v.require(false, fmt::format("x{:g}: {}", s, e.what()));
    }
  }
  v.note("x2, x2.5, x3.7, x12, x18 rendered from one checkpoint");

  const double bicubic = d.bicubic[0].mean_at(2.0);
  for (const AblationRow& row : d.ablation.rows)
    for (std::size_t i = 0; i < row.runs.size(); ++i) {
      const double margin = row.runs[i].mean_at(2.0) - bicubic;
      v.require(margin >= kBicubicMarginDb,
                fmt::format("{} seed {} leads bicubic by {:+.3f} dB at x2", row.label,
                            kSeeds[i], margin));
    }
  v.note(fmt::format("bicubic x2 on the corpus {:.3f} dB", bicubic));

  // Informational: the same checkpoints on a second, unseen corpus.
  const auto seen = evaluate(work / "desk" / "R+C+S_seed0.ckpt", held_out, {2.0});
  v.note(fmt::format("held-out corpus x2: R+C+S seed 0 {:.3f} dB, bicubic {:.3f} dB",
                     seen.mean_at(2.0), d.bicubic[1].mean_at(2.0)));
  return v;
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"ultrasr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != kExitOk) std::cerr << err.str();
  return code;
}

Verdict determinism(const fs::path& work, const fs::path& corpus) {
  Verdict v;
  const fs::path dir = work / "determinism";
  fs::create_directories(dir);
  write_report(to_json(tiny_config(corpus)), dir / "config.json");
  const std::string cfg = (dir / "config.json").string();
  for (const char* run : {"a", "b"}) {
    const fs::path r = dir / run;
    fs::create_directories(r);
    v.require(cli({"train", "--config", cfg, "--out", (r / "m.ckpt").string()}) == kExitOk,
              "train");
    v.require(cli({"eval", "--ckpt", (r / "m.ckpt").string(), "--dataset", corpus.string(),
                   "--report", (r / "eval.json").string()}) == kExitOk,
              "eval");
    v.require(cli({"ablate", "--config", cfg, "--dataset", corpus.string(), "--scales", "2,4",
                   "--report", (r / "ablate.json").string()}) == kExitOk,
              "ablate");
  }
  for (const char* f : {"m.ckpt", "m.ckpt.log.jsonl", "eval.json", "ablate.json"}) {
    const bool same = fs::exists(dir / "a" / f) &&
                      read_file(dir / "a" / f) == read_file(dir / "b" / f);
    v.require(same, std::string(f) + " differs between runs");
  }
  v.note("train, eval and ablate outputs byte-identical across two runs");
  return v;
}

Verdict checkpoint_roundtrip(const fs::path& work) {
  Verdict v;
  const ModelConfig m = desk_config({}).model;
  const auto params = cast_params<float>(init_params<double>(m, 9));
  const fs::path path = work / "roundtrip.ckpt";
  save_checkpoint(params, m, path);
  const Checkpoint back = load_checkpoint(path);
  v.require(back.config == m, "config");
  for (const auto& [name, t] : params)
    v.require(back.params.count(name) &&
                  std::equal(t.data().begin(), t.data().end(), back.params.at(name).data().begin()),
              name);
  v.require(serialize_checkpoint(back.params, back.config) == read_file(path), "re-serialized bytes");

  auto kind = [](const std::string& bytes) -> std::string {
    try {
      parse_checkpoint(bytes);
      return "accepted";
    } catch (const CheckpointError& e) {
      switch (e.kind()) {
        case CheckpointError::Kind::bad_magic: return "bad_magic";
        case CheckpointError::Kind::truncated: return "truncated";
        default: return "other";
      }
    }
  };
  std::string bytes = read_file(path);
  std::string magic = bytes;
  magic[1] = '?';
  v.require(kind(magic) == "bad_magic", "corrupted magic gives " + kind(magic));
  for (std::size_t cut : {std::size_t{3}, std::size_t{30}, bytes.size() / 2, bytes.size() - 1})
    v.require(kind(bytes.substr(0, cut)) == "truncated",
              fmt::format("cut at {} gives {}", cut, kind(bytes.substr(0, cut))));
  v.note(fmt::format("{} arrays bit-exact; bad magic and truncation reported distinctly",
                     params.size()));
  return v;
}

Verdict structure(const fs::path& corpus) {
  Verdict v;
  const ModelConfig m = desk_config({}).model;
  const std::size_t L = m.hidden_layers, W = m.hidden_width, E = m.encoding_dim;
  ModelConfig no_c = m;
  no_c.use_fusion = false;
  ModelConfig no_cs = no_c;
  no_cs.use_encoding = false;
  ModelConfig no_s = m;
  no_s.use_encoding = false;
  v.require(parameter_count(m) - parameter_count(no_c) == L * (2 + E) * W, "C with S on");
  v.require(parameter_count(no_s) - parameter_count(no_cs) == L * 2 * W, "C with S off");
  v.require(parameter_count(no_c) - parameter_count(no_cs) == E * W + E / 4, "S with C off");
  v.require(parameter_count(m) - parameter_count(no_s) == E * W + E / 4 + L * E * W,
            "S with C on");
  for (const ModelConfig* cfg : std::array<const ModelConfig*, 4>{&m, &no_c, &no_cs, &no_s})
    v.require(parameter_count(init_params<float>(*cfg, 0)) == parameter_count(*cfg),
              "instantiated count");

  StudyOptions o;
  o.scales = {2.0};
  TrainConfig tiny = tiny_config(corpus);
  tiny.epochs = 1;
  tiny.iters_per_epoch = 1;
  const DimSweepReport r = run_dim_sweep(tiny, {12, 24, 48}, corpus, o);
  v.require(r.rows.size() == 4, "sweep rows");
  for (std::size_t i = 1; i < r.rows.size(); ++i)
    v.require(r.rows[i].layer0_width == r.base_layer0_width + r.rows[i].dim,
              fmt::format("dim {} layer-0 width {}", r.rows[i].dim, r.rows[i].layer0_width));
  v.note(fmt::format("layer-0 widths {} + 12/24/48 = {}/{}/{}", r.base_layer0_width,
                     r.rows[1].layer0_width, r.rows[2].layer0_width, r.rows[3].layer0_width));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  fs::path work = fs::temp_directory_path() / "ultrasr_acceptance";
  bool strict = false;
  app.add_option("--workdir", work, "scratch directory");
  app.add_flag("--strict", strict, "exit 1 when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path corpus = work / "corpus", held_out = work / "heldout";
  write_synthetic_corpus(corpus, kCorpusCount, kCorpusSize, kCorpusSeed);
  write_synthetic_corpus(held_out, kCorpusCount, kCorpusSize, kHeldOutSeed);

  std::vector<std::pair<std::string, Verdict>> results;
  auto run = [&](int n, const std::string& name, double limit, const std::function<Verdict()>& fn) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.require(false, e.what());
    }
    const double secs = since(t0);
    if (limit > 0) v.require(secs < limit, fmt::format("runtime {:.1f} s over {:.0f} s", secs, limit));
    std::cout << fmt::format("criterion {}: {} {} ({:.1f} s)\n", n, v.pass ? "PASS" : "FAIL", name,
                             secs);
    for (const auto& note : v.notes) std::cout << "    " << note << "\n";
    std::cout.flush();
    results.emplace_back(name, v);
  };

  run(1, "gradient suite", kGradSeconds, gradient_suite);
  run(2, "oracle equivalence", kOracleSeconds, oracle_suite);
  run(3, "encoding contracts", 0, encoding_suite);
  DeskRuns desk;
  bool desk_ok = true;
  std::string desk_error;
  try {
    desk = desk_runs(work, corpus, held_out);
  } catch (const std::exception& e) {
    desk_ok = false;
    desk_error = e.what();
  }
  auto needs_desk = [&](std::function<Verdict()> fn) {
    return [=, &desk_ok, &desk_error]() {
      if (!desk_ok) throw std::runtime_error("desk training failed: " + desk_error);
      return fn();
    };
  };
  run(4, "R+C+S beats none at x4 and x8", 0, needs_desk([&] { return toggle_gain(desk); }));
  run(5, "arbitrary-scale contract", 0,
      needs_desk([&] { return arbitrary_scale(desk, work, corpus, held_out); }));
  run(6, "determinism", 0, [&] { return determinism(work, corpus); });
  run(7, "checkpoint round trip", 0, [&] { return checkpoint_roundtrip(work); });
  run(8, "structural arithmetic", 0, [&] { return structure(corpus); });

  const auto passed = std::count_if(results.begin(), results.end(),
                                    [](const auto& r) { return r.second.pass; });
  std::cout << fmt::format("{}/{} criteria passed\n", passed, results.size());
  return strict && passed != static_cast<long>(results.size()) ? 1 : 0;
}
