#include "ultrasr/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ultrasr/rng.hpp"

namespace ultrasr {
namespace {

std::string layer_name(std::size_t l) { return "dec.layer" + std::to_string(l); }
std::string block_name(std::size_t i, int conv) {
  return "enc.block" + std::to_string(i) + ".conv" + std::to_string(conv);
}

// Number of target pixels decoded per graph during rendering.
constexpr std::size_t kRenderChunk = 2048;

}  // namespace

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_rng(seed, Stream::init);
  ModelParams<T> p;
  auto uniform = [&](const std::string& name, Shape shape, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor<T> t(std::move(shape));
    for (T& v : t.data()) v = static_cast<T>(dist(rng));
    p[name] = std::move(t);
  };
  const std::size_t C = cfg.enc_channels;
  uniform("enc.head.w", {C, 3, 3, 3}, 27);
  uniform("enc.head.b", {C}, 27);
  for (std::size_t i = 0; i < cfg.enc_blocks; ++i)
    for (int conv = 1; conv <= 2; ++conv) {
      uniform(block_name(i, conv) + ".w", {C, C, 3, 3}, C * 9);
      uniform(block_name(i, conv) + ".b", {C}, C * 9);
    }
  const std::size_t W = cfg.hidden_width;
  uniform(layer_name(0) + ".w", {cfg.decoder_input_width(), W}, cfg.decoder_input_width());
  uniform(layer_name(0) + ".b", {W}, cfg.decoder_input_width());
  for (std::size_t l = 1; l <= cfg.hidden_layers; ++l) {
    uniform(layer_name(l) + ".w", {cfg.hidden_input_width(), W}, cfg.hidden_input_width());
    uniform(layer_name(l) + ".b", {W}, cfg.hidden_input_width());
  }
  uniform("dec.out.w", {W, 3}, W);
  uniform("dec.out.b", {3}, W);
  if (cfg.use_encoding) {
    const EncodingParams enc = make_encoding_params(cfg.encoding_dim, cfg.freq_init);
    Tensor<T> f(Shape{enc.freqs.size()});
    for (std::size_t k = 0; k < enc.freqs.size(); ++k) f[k] = static_cast<T>(enc.freqs[k]);
    p["pe.freqs"] = std::move(f);
  }
  return p;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const std::size_t C = cfg.enc_channels;
  const std::size_t W = cfg.hidden_width;
  const std::size_t encoder = (27 * C + C) + cfg.enc_blocks * 2 * (9 * C * C + C);
  const std::size_t decoder = (cfg.decoder_input_width() + 1) * W +
                              cfg.hidden_layers * (cfg.hidden_input_width() + 1) * W +
                              (W + 1) * 3;
  const std::size_t freqs = cfg.use_encoding ? cfg.encoding_dim / 4 : 0;
  return encoder + decoder + freqs;
}

template <typename T>
std::size_t parameter_count(const ModelParams<T>& params) {
  std::size_t n = 0;
  for (const auto& [_, t] : params) n += t.size();
  return n;
}

template <typename T>
ModelParams<T> cast_params(const ModelParams<double>& p) {
  ModelParams<T> out;
  for (const auto& [k, v] : p) out[k] = v.template cast<T>();
  return out;
}

template <typename T>
ModelParams<double> widen_params(const ModelParams<T>& p) {
  ModelParams<double> out;
  for (const auto& [k, v] : p) out[k] = v.template cast<double>();
  return out;
}

template <typename T>
Tensor<T> image_to_tensor(const Image& img) {
  Tensor<T> t(Shape{3, img.height, img.width});
  const std::size_t hw = img.height * img.width;
  for (std::size_t i = 0; i < hw; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      t[c * hw + i] = static_cast<T>(img.data[i * 3 + c] * 2.0 - 1.0);
  return t;
}

template <typename T>
ad::Var<T> BoundParams<T>::operator[](const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) throw std::out_of_range("model parameter '" + name + "' missing");
  return it->second;
}

template <typename T>
BoundParams<T> bind_params(ad::Graph<T>& g, const ModelParams<T>& params, bool trainable) {
  BoundParams<T> b;
  for (const auto& [name, t] : params)
    b.vars[name] = trainable ? g.parameter(name, t) : g.constant(t);
  return b;
}

template <typename T>
ad::Var<T> encoder_graph(const BoundParams<T>& p, const ModelConfig& cfg, ad::Var<T> image) {
  ad::Var<T> x = ad::conv2d3x3(image, p["enc.head.w"], p["enc.head.b"]);
  for (std::size_t i = 0; i < cfg.enc_blocks; ++i) {
    ad::Var<T> t = ad::conv2d3x3(x, p[block_name(i, 1) + ".w"], p[block_name(i, 1) + ".b"]);
    t = ad::relu(t);
    t = ad::conv2d3x3(t, p[block_name(i, 2) + ".w"], p[block_name(i, 2) + ".b"]);
    x = ad::add(x, t);
  }
  return x;
}

namespace {

template <typename T>
ad::Var<T> linear(const BoundParams<T>& p, const std::string& name, std::size_t index,
                  ad::Var<T> input) {
  const ad::Var<T> w = p[name + ".w"];
  const std::size_t in_w = input.shape().at(1);
  if (in_w != w.shape()[0])
    throw ShapeError("decoder layer " + (index == SIZE_MAX ? std::string("out")
                                                           : std::to_string(index)) +
                     ": input width " + std::to_string(in_w) +
                     " does not match weight rows " + std::to_string(w.shape()[0]));
  return ad::add(ad::matmul(input, w), p[name + ".b"]);
}

}  // namespace

template <typename T>
ad::Var<T> decoder_graph(const BoundParams<T>& p, const ModelConfig& cfg,
                         ad::Var<T> feature, ad::Var<T> rel,
                         const ad::Var<T>* encoding, ad::Var<T> cell) {
  if (cfg.use_encoding && !encoding)
    throw ShapeError("decoder layer 0: spatial encoding enabled but not supplied");
  std::vector<ad::Var<T>> coords{rel};
  if (cfg.use_encoding) coords.push_back(*encoding);

  std::vector<ad::Var<T>> first{feature};
  first.insert(first.end(), coords.begin(), coords.end());
  first.push_back(cell);
  const ad::Var<T> x0 = ad::concat<T>(std::span<const ad::Var<T>>(first));

  // The coordinate bundle is assembled once and shared by every hidden layer.
  const ad::Var<T> bundle =
      coords.size() == 1 ? coords[0] : ad::concat<T>(std::span<const ad::Var<T>>(coords));

  std::vector<ad::Var<T>> h{ad::relu(linear(p, layer_name(0), 0, x0))};
  for (std::size_t l = 1; l <= cfg.hidden_layers; ++l) {
    const ad::Var<T> in = cfg.use_fusion ? ad::concat<T>({h.back(), bundle}) : h.back();
    ad::Var<T> z = linear(p, layer_name(l), l, in);
    if (cfg.use_residual && l % 2 == 0) z = ad::add(z, h[l - 2]);
    h.push_back(ad::relu(z));
  }
  return linear(p, "dec.out", SIZE_MAX, h.back());
}

template <typename T>
ad::Var<T> predict_graph(const BoundParams<T>& p, const ModelConfig& cfg,
                         ad::Var<T> feature_map, const QueryLayout& layout) {
  ad::Graph<T>& g = *feature_map.graph;
  const std::size_t rows = layout.pixel.size();
  const ad::Var<T> unfolded = ad::unfold3x3(feature_map);
  const ad::Var<T> feature = ad::gather_columns(unfolded, layout.pixel);

  Tensor<T> rel(Shape{rows, 2}), cell(Shape{rows, 2}), weight(Shape{rows, 1});
  for (std::size_t i = 0; i < 2 * rows; ++i) {
    rel[i] = static_cast<T>(layout.rel[i]);
    cell[i] = static_cast<T>(layout.cell[i]);
  }
  for (std::size_t i = 0; i < rows; ++i) weight[i] = static_cast<T>(layout.weight[i]);
  const ad::Var<T> rel_v = g.constant(std::move(rel));
  const ad::Var<T> cell_v = g.constant(std::move(cell));

  ad::Var<T> rgb;
  if (cfg.use_encoding) {
    const ad::Var<T> enc = ad::periodic_encode(rel_v, p["pe.freqs"]);
    rgb = decoder_graph(p, cfg, feature, rel_v, &enc, cell_v);
  } else {
    rgb = decoder_graph<T>(p, cfg, feature, rel_v, nullptr, cell_v);
  }
  const ad::Var<T> weighted = ad::multiply(rgb, g.constant(std::move(weight)));
  return ad::sum_groups(weighted, 4);
}

template <typename T>
Tensor<T> encode(const Image& lr, const ModelParams<T>& params, const ModelConfig& cfg) {
  ad::Graph<T> g;
  const BoundParams<T> p = bind_params(g, params, false);
  return encoder_graph(p, cfg, g.constant(image_to_tensor<T>(lr))).value();
}

template <typename T>
std::array<double, 3> decode(const QueryBundle& bundle, const ModelParams<T>& params,
                             const ModelConfig& cfg) {
  const std::size_t expected_feature = 9 * cfg.enc_channels;
  if (bundle.feature.size() != expected_feature)
    throw ShapeError("decoder layer 0: feature width " + std::to_string(bundle.feature.size()) +
                     ", expected " + std::to_string(expected_feature));
  if (cfg.use_encoding && bundle.encoding.size() != cfg.encoding_dim)
    throw ShapeError("decoder layer 0: encoding width " + std::to_string(bundle.encoding.size()) +
                     ", expected " + std::to_string(cfg.encoding_dim));
  ad::Graph<T> g;
  const BoundParams<T> p = bind_params(g, params, false);
  auto row = [&](const auto& values) {
    Tensor<T> t(Shape{1, values.size()});
    for (std::size_t i = 0; i < values.size(); ++i) t[i] = static_cast<T>(values[i]);
    return g.constant(std::move(t));
  };
  const ad::Var<T> feature = row(bundle.feature);
  const ad::Var<T> rel = row(bundle.rel_coord);
  const ad::Var<T> cell = row(bundle.cell);
  ad::Var<T> out;
  if (cfg.use_encoding) {
    const ad::Var<T> enc = row(bundle.encoding);
    out = decoder_graph(p, cfg, feature, rel, &enc, cell);
  } else {
    out = decoder_graph<T>(p, cfg, feature, rel, nullptr, cell);
  }
  const Tensor<T>& v = out.value();
  return {static_cast<double>(v[0]), static_cast<double>(v[1]), static_cast<double>(v[2])};
}

template <typename T>
EncodingParams encoding_params(const ModelParams<T>& params) {
  EncodingParams e;
  auto it = params.find("pe.freqs");
  if (it != params.end())
    for (T v : it->second.data()) e.freqs.push_back(static_cast<double>(v));
  return e;
}

template <typename T>
Image render(const Image& lr, std::size_t out_h, std::size_t out_w,
             const ModelParams<T>& params, const ModelConfig& cfg) {
  if (out_h == 0 || out_w == 0) throw ImageError("render: output dimensions must be >= 1");
  const Tensor<T> fm = encode(lr, params, cfg);
  const std::vector<Vec2> targets = pixel_centers(out_h, out_w);
  Image out(out_h, out_w);
  for (std::size_t begin = 0; begin < targets.size(); begin += kRenderChunk) {
    const std::size_t end = std::min(targets.size(), begin + kRenderChunk);
    const QueryLayout layout =
        locate_queries(lr.height, lr.width,
                       std::span<const Vec2>(targets).subspan(begin, end - begin), out_h,
                       out_w);
    ad::Graph<T> g;
    const BoundParams<T> p = bind_params(g, params, false);
    const Tensor<T>& rgb = predict_graph(p, cfg, g.constant(fm), layout).value();
    for (std::size_t i = 0; i < rgb.size(); ++i)
      out.data[begin * 3 + i] = std::clamp(static_cast<double>(rgb[i]), 0.0, 1.0);
  }
  return out;
}

#define ULTRASR_INSTANTIATE(T)                                                          \
  template ModelParams<T> init_params<T>(const ModelConfig&, std::uint64_t);           \
  template std::size_t parameter_count<T>(const ModelParams<T>&);                      \
  template ModelParams<T> cast_params<T>(const ModelParams<double>&);                  \
  template ModelParams<double> widen_params<T>(const ModelParams<T>&);                 \
  template Tensor<T> image_to_tensor<T>(const Image&);                                 \
  template struct BoundParams<T>;                                                      \
  template BoundParams<T> bind_params<T>(ad::Graph<T>&, const ModelParams<T>&, bool);  \
  template ad::Var<T> encoder_graph<T>(const BoundParams<T>&, const ModelConfig&,      \
                                       ad::Var<T>);                                    \
  template ad::Var<T> decoder_graph<T>(const BoundParams<T>&, const ModelConfig&,      \
                                       ad::Var<T>, ad::Var<T>, const ad::Var<T>*,      \
                                       ad::Var<T>);                                    \
  template ad::Var<T> predict_graph<T>(const BoundParams<T>&, const ModelConfig&,      \
                                       ad::Var<T>, const QueryLayout&);                \
  template Tensor<T> encode<T>(const Image&, const ModelParams<T>&, const ModelConfig&); \
  template std::array<double, 3> decode<T>(const QueryBundle&, const ModelParams<T>&,  \
                                           const ModelConfig&);                        \
  template EncodingParams encoding_params<T>(const ModelParams<T>&);                   \
  template Image render<T>(const Image&, std::size_t, std::size_t,                     \
                           const ModelParams<T>&, const ModelConfig&);

ULTRASR_INSTANTIATE(float)
ULTRASR_INSTANTIATE(double)
#undef ULTRASR_INSTANTIATE

}  // namespace ultrasr
