#pragma once

// Residual convolutional encoder and the ResMLP decoder with deep
// coordinate fusion.
//
// Parameter names:
//   enc.head.{w,b}               3 -> C conv
//   enc.block<i>.conv<1|2>.{w,b} residual blocks, i = 0..enc_blocks-1
//   dec.layer<l>.{w,b}           l = 0 is the input layer, 1..hidden_layers
//                                are hidden layers; weights are [in, out]
//   dec.out.{w,b}                hidden -> RGB
//   pe.freqs                     encoding frequencies (only when S is on)
//
// Decoder wiring for rows of queries:
//   h0 = relu([feature, delta, phi(delta)?, cell] W0 + b0)
//   z_l = [h_{l-1}, (delta, phi(delta)?) if C] W_l + b_l
//   z_l += h_{l-2} when R and l is even
//   h_l = relu(z_l)
//   rgb = h_L W_out + b_out

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "ultrasr/adam.hpp"
#include "ultrasr/autodiff.hpp"
#include "ultrasr/config.hpp"
#include "ultrasr/image.hpp"
#include "ultrasr/implicit.hpp"

namespace ultrasr {

template <typename T>
using ModelParams = ParamMap<T>;

// Uniform in +-1/sqrt(fan_in) for every weight and bias.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed);

// Parameter count implied by cfg, in closed form.
std::size_t parameter_count(const ModelConfig& cfg);
template <typename T>
std::size_t parameter_count(const ModelParams<T>& params);

template <typename T>
ModelParams<T> cast_params(const ModelParams<double>& p);
template <typename T>
ModelParams<double> widen_params(const ModelParams<T>& p);

// [3, h, w] tensor with intensities mapped from [0, 1] to [-1, 1].
template <typename T>
Tensor<T> image_to_tensor(const Image& img);

// Parameters registered in a graph, either as trainable leaves or constants.
template <typename T>
struct BoundParams {
  std::map<std::string, ad::Var<T>> vars;

  ad::Var<T> operator[](const std::string& name) const;
  bool has(const std::string& name) const { return vars.count(name) > 0; }
};

template <typename T>
BoundParams<T> bind_params(ad::Graph<T>& g, const ModelParams<T>& params, bool trainable);

// [3, h, w] -> [C, h, w].
template <typename T>
ad::Var<T> encoder_graph(const BoundParams<T>& p, const ModelConfig& cfg, ad::Var<T> image);

// Decoder over rows. feature [n, 9C], rel [n, 2], encoding [n, E] or null,
// cell [n, 2] -> [n, 3].
template <typename T>
ad::Var<T> decoder_graph(const BoundParams<T>& p, const ModelConfig& cfg,
                         ad::Var<T> feature, ad::Var<T> rel,
                         const ad::Var<T>* encoding, ad::Var<T> cell);

// Ensembled, unclamped RGB for every target of `layout`: [targets, 3].
template <typename T>
ad::Var<T> predict_graph(const BoundParams<T>& p, const ModelConfig& cfg,
                         ad::Var<T> feature_map, const QueryLayout& layout);

template <typename T>
Tensor<T> encode(const Image& lr, const ModelParams<T>& params, const ModelConfig& cfg);

// Single bundle, unclamped RGB.
template <typename T>
std::array<double, 3> decode(const QueryBundle& bundle, const ModelParams<T>& params,
                             const ModelConfig& cfg);

template <typename T>
EncodingParams encoding_params(const ModelParams<T>& params);

// Full image at out_h x out_w, clamped to [0, 1].
template <typename T>
Image render(const Image& lr, std::size_t out_h, std::size_t out_w,
             const ModelParams<T>& params, const ModelConfig& cfg);

}  // namespace ultrasr
