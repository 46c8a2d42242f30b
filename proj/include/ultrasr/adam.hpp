#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "ultrasr/tensor.hpp"

namespace ultrasr {

template <typename T>
using ParamMap = std::map<std::string, Tensor<T>>;

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& param)
      : std::runtime_error("non-finite gradient for parameter '" + param + "'"),
        param_(param) {}
  const std::string& param() const { return param_; }

 private:
  std::string param_;
};

// Bias-corrected ADAM. Moments are created lazily, one pair per parameter.
template <typename T>
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  ParamMap<T> m;
  ParamMap<T> v;
};

// Applies one update to every parameter. All gradients are validated before
// anything is modified, so a failed step leaves params and state untouched.
template <typename T>
void adam_step(ParamMap<T>& params, const ParamMap<T>& grads, AdamState<T>& state);

}  // namespace ultrasr
