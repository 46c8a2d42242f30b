#include "ultrasr/adam.hpp"

#include <cmath>

namespace ultrasr {

template <typename T>
void adam_step(ParamMap<T>& params, const ParamMap<T>& grads, AdamState<T>& state) {
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end())
      throw std::invalid_argument("adam_step: no gradient for parameter '" + name + "'");
    if (it->second.shape() != p.shape())
      throw ShapeError("adam_step: gradient shape " + shape_str(it->second.shape()) +
                       " does not match parameter '" + name + "' " +
                       shape_str(p.shape()));
    for (T g : it->second.data())
      if (!std::isfinite(static_cast<double>(g))) throw NonFiniteGradient(name);
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);

  for (auto& [name, p] : params) {
    const Tensor<T>& g = grads.at(name);
    Tensor<T>& m = state.m.try_emplace(name, p.shape()).first->second;
    Tensor<T>& v = state.v.try_emplace(name, p.shape()).first->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (T{1} - b1) * g[i];
      v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
      const double mhat = static_cast<double>(m[i]) / bc1;
      const double vhat = static_cast<double>(v[i]) / bc2;
      p[i] -= static_cast<T>(state.lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

template void adam_step<float>(ParamMap<float>&, const ParamMap<float>&, AdamState<float>&);
template void adam_step<double>(ParamMap<double>&, const ParamMap<double>&,
                                AdamState<double>&);

}  // namespace ultrasr
