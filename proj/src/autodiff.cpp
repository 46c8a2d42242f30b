#include "ultrasr/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "ultrasr/kernels.hpp"

namespace ultrasr::ad {
namespace {

// Elementwise loops below this size stay on the calling thread.
constexpr std::size_t kParallelThreshold = 1 << 14;

template <typename F>
void for_each_index(std::size_t n, F&& f) {
  if (n < kParallelThreshold) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    f(static_cast<std::size_t>(i));
}

[[noreturn]] void shape_fail(OpKind kind, const std::string& what) {
  throw ShapeError(std::string(op_name(kind)) + ": " + what);
}

enum class Bcast { same, scalar, row, column };

Bcast classify(OpKind kind, const Shape& a, const Shape& b) {
  if (a == b) return Bcast::same;
  if (shape_size(b) == 1 && b.size() <= 1) return Bcast::scalar;
  if (a.size() == 2 && b.size() == 1 && b[0] == a[1]) return Bcast::row;
  if (a.size() == 2 && b.size() == 2 && b[1] == 1 && b[0] == a[0])
    return Bcast::column;
  shape_fail(kind, "cannot broadcast " + shape_str(b) + " onto " + shape_str(a));
}

// Applies f(i, j) for every element i of a and its broadcast partner j in b.
template <typename F>
void for_each_pair(Bcast mode, std::size_t n, std::size_t cols, F&& f) {
  switch (mode) {
    case Bcast::same:
      for_each_index(n, [&](std::size_t i) { f(i, i); });
      break;
    case Bcast::scalar:
      for_each_index(n, [&](std::size_t i) { f(i, std::size_t{0}); });
      break;
    case Bcast::row:
      for_each_index(n / cols, [&](std::size_t r) {
        const std::size_t base = r * cols;
        for (std::size_t c = 0; c < cols; ++c) f(base + c, c);
      });
      break;
    case Bcast::column:
      for_each_index(n / cols, [&](std::size_t r) {
        const std::size_t base = r * cols;
        for (std::size_t c = 0; c < cols; ++c) f(base + c, r);
      });
      break;
  }
}

// Reduce a gradient of a's shape into b's shape and accumulate.
template <typename T>
void reduce_into(Bcast mode, const Tensor<T>& g, Tensor<T>& gb, std::size_t cols,
                 T sign = T{1}) {
  switch (mode) {
    case Bcast::same:
      for_each_index(g.size(), [&](std::size_t i) { gb[i] += sign * g[i]; });
      break;
    case Bcast::scalar:
      gb[0] += sign * static_cast<T>(kernels::sum_all(g.size(), g.ptr()));
      break;
    case Bcast::row: {
      Tensor<T> tmp(Shape{cols});
      kernels::sum_rows(g.size() / cols, cols, g.ptr(), tmp.ptr());
      for (std::size_t c = 0; c < cols; ++c) gb[c] += sign * tmp[c];
      break;
    }
    case Bcast::column: {
      const std::size_t rows = g.size() / cols;
      for_each_index(rows, [&](std::size_t r) {
        T acc{0};
        for (std::size_t c = 0; c < cols; ++c) acc += g[r * cols + c];
        gb[r] += sign * acc;
      });
      break;
    }
  }
}

std::size_t last_dim(const Shape& s) { return s.empty() ? 1 : s.back(); }

template <typename T>
Var<T> binary(OpKind kind, Var<T> a, Var<T> b) {
  if (a.graph != b.graph) shape_fail(kind, "operands belong to different graphs");
  Graph<T>& g = *a.graph;
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  const Bcast mode = classify(kind, av.shape(), bv.shape());
  const std::size_t cols = last_dim(av.shape());
  Tensor<T> out(av.shape());
  const T* pa = av.ptr();
  const T* pb = bv.ptr();
  T* po = out.ptr();
  switch (kind) {
    case OpKind::add:
      for_each_pair(mode, out.size(), cols,
                    [&](std::size_t i, std::size_t j) { po[i] = pa[i] + pb[j]; });
      break;
    case OpKind::sub:
      for_each_pair(mode, out.size(), cols,
                    [&](std::size_t i, std::size_t j) { po[i] = pa[i] - pb[j]; });
      break;
    default:
      for_each_pair(mode, out.size(), cols,
                    [&](std::size_t i, std::size_t j) { po[i] = pa[i] * pb[j]; });
      break;
  }
  const std::size_t ia = a.id, ib = b.id;
  return g.record(kind, std::move(out), {ia, ib},
                  [kind, mode, cols, ia, ib](Graph<T>& gr, std::size_t self) {
                    const Tensor<T>& go = gr.grad_buffer(self);
                    if (kind == OpKind::multiply) {
                      const T* av2 = gr.value(ia).ptr();
                      const T* bv2 = gr.value(ib).ptr();
                      if (gr.requires_grad(ia)) {
                        T* ga = gr.grad_buffer(ia).ptr();
                        for_each_pair(mode, go.size(), cols, [&](std::size_t i, std::size_t j) {
                          ga[i] += go[i] * bv2[j];
                        });
                      }
                      if (gr.requires_grad(ib)) {
                        Tensor<T> prod(go.shape());
                        for_each_index(go.size(),
                                       [&](std::size_t i) { prod[i] = go[i] * av2[i]; });
                        reduce_into(mode, prod, gr.grad_buffer(ib), cols);
                      }
                      return;
                    }
                    if (gr.requires_grad(ia)) {
                      Tensor<T>& ga = gr.grad_buffer(ia);
                      for_each_index(go.size(), [&](std::size_t i) { ga[i] += go[i]; });
                    }
                    if (gr.requires_grad(ib))
                      reduce_into(mode, go, gr.grad_buffer(ib), cols,
                                  kind == OpKind::sub ? T{-1} : T{1});
                  });
}

template <typename T, typename Fwd, typename Deriv>
Var<T> unary(OpKind kind, Var<T> a, Fwd fwd, Deriv deriv) {
  Graph<T>& g = *a.graph;
  const Tensor<T>& av = a.value();
  Tensor<T> out(av.shape());
  for_each_index(out.size(), [&](std::size_t i) { out[i] = fwd(av[i]); });
  const std::size_t ia = a.id;
  return g.record(kind, std::move(out), {ia},
                  [ia, deriv](Graph<T>& gr, std::size_t self) {
                    if (!gr.requires_grad(ia)) return;
                    const Tensor<T>& go = gr.grad_buffer(self);
                    const Tensor<T>& x = gr.value(ia);
                    Tensor<T>& ga = gr.grad_buffer(ia);
                    for_each_index(go.size(), [&](std::size_t i) {
                      ga[i] += go[i] * deriv(x[i]);
                    });
                  });
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::constant: return "constant";
    case OpKind::parameter: return "parameter";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::multiply: return "multiply";
    case OpKind::matmul: return "matmul";
    case OpKind::conv2d3x3: return "conv2d3x3";
    case OpKind::relu: return "relu";
    case OpKind::sin: return "sin";
    case OpKind::cos: return "cos";
    case OpKind::abs: return "abs";
    case OpKind::scalar_multiply: return "scalar_multiply";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::mean: return "mean";
    case OpKind::sum: return "sum";
    case OpKind::reshape: return "reshape";
    case OpKind::unfold3x3: return "unfold3x3";
    case OpKind::gather_columns: return "gather_columns";
    case OpKind::periodic_encode: return "periodic_encode";
    case OpKind::sum_groups: return "sum_groups";
  }
  return "unknown";
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> value) {
  return record(OpKind::constant, std::move(value), {}, nullptr);
}

template <typename T>
Var<T> Graph<T>::parameter(std::string name, Tensor<T> value) {
  Var<T> v = record(OpKind::parameter, std::move(value), {}, nullptr);
  nodes_[v.id].requires_grad = true;
  nodes_[v.id].name = std::move(name);
  return v;
}

template <typename T>
Var<T> Graph<T>::record(OpKind kind, Tensor<T> value,
                        std::vector<std::size_t> parents, Backward backward) {
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  for (std::size_t p : parents) n.requires_grad |= nodes_.at(p).requires_grad;
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Tensor<T>& Graph<T>::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.shape() != n.value.shape() || n.grad.size() != n.value.size())
    n.grad = Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
Tensor<T> Graph<T>::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (n.grad.size() == n.value.size() && n.grad.shape() == n.value.shape())
    return n.grad;
  return Tensor<T>(n.value.shape());
}

template <typename T>
GradMap<T> Graph<T>::backward(Var<T> root) {
  if (root.graph != this) throw std::invalid_argument("backward: foreign root");
  if (value(root.id).size() != 1)
    throw ShapeError("backward: root must be a scalar, got shape " +
                     shape_str(value(root.id).shape()));
  for (Node& n : nodes_) n.grad = Tensor<T>();

  std::vector<char> reachable(root.id + 1, 0);
  reachable[root.id] = 1;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    if (!reachable[id]) continue;
    for (std::size_t p : nodes_[id].parents) reachable[p] = 1;
  }

  grad_buffer(root.id)[0] = T{1};
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!reachable[id] || !n.requires_grad || !n.backward) continue;
    if (n.grad.size() != n.value.size()) continue;  // nothing flowed here
    n.backward(*this, id);
  }

  GradMap<T> out;
  for (std::size_t id = 0; id < nodes_.size(); ++id)
    if (nodes_[id].kind == OpKind::parameter) out[nodes_[id].name] = grad(id);
  return out;
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return binary(OpKind::add, a, b);
}
template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return binary(OpKind::sub, a, b);
}
template <typename T>
Var<T> multiply(Var<T> a, Var<T> b) {
  return binary(OpKind::multiply, a, b);
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2)
    shape_fail(OpKind::matmul, "operands must be 2-d, got " + shape_str(sa) +
                                   " and " + shape_str(sb));
  if (sa[1] != sb[0])
    shape_fail(OpKind::matmul, "inner dimensions differ: " + shape_str(sa) +
                                   " x " + shape_str(sb));
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  Tensor<T> out(Shape{m, n});
  kernels::gemm(false, false, m, n, k, a.value().ptr(), b.value().ptr(),
                out.ptr(), false);
  const std::size_t ia = a.id, ib = b.id;
  return a.graph->record(
      OpKind::matmul, std::move(out), {ia, ib},
      [ia, ib, m, n, k](Graph<T>& g, std::size_t self) {
        const Tensor<T>& go = g.grad_buffer(self);
        if (g.requires_grad(ia))
          kernels::gemm(false, true, m, k, n, go.ptr(), g.value(ib).ptr(),
                        g.grad_buffer(ia).ptr(), true);
        if (g.requires_grad(ib))
          kernels::gemm(true, false, k, n, m, g.value(ia).ptr(), go.ptr(),
                        g.grad_buffer(ib).ptr(), true);
      });
}

namespace {

template <typename T>
Var<T> conv_impl(Var<T> x, Var<T> w, const Var<T>* bias) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 3)
    shape_fail(OpKind::conv2d3x3, "input must be [c,h,w], got " + shape_str(sx));
  if (sw.size() != 4 || sw[2] != 3 || sw[3] != 3 || sw[1] != sx[0])
    shape_fail(OpKind::conv2d3x3, "weight " + shape_str(sw) +
                                      " incompatible with input " + shape_str(sx));
  if (bias && (bias->shape().size() != 1 || bias->shape()[0] != sw[0]))
    shape_fail(OpKind::conv2d3x3, "bias " + shape_str(bias->shape()) +
                                      " does not match " + std::to_string(sw[0]) +
                                      " output channels");
  const kernels::ConvDims d{sx[0], sw[0], sx[1], sx[2]};
  Tensor<T> out(Shape{d.out_channels, d.height, d.width});
  kernels::conv3x3_forward(d, x.value().ptr(), w.value().ptr(),
                           bias ? bias->value().ptr() : nullptr, out.ptr());
  std::vector<std::size_t> parents{x.id, w.id};
  if (bias) parents.push_back(bias->id);
  const std::size_t ix = x.id, iw = w.id;
  const std::size_t ib = bias ? bias->id : SIZE_MAX;
  return x.graph->record(
      OpKind::conv2d3x3, std::move(out), std::move(parents),
      [d, ix, iw, ib](Graph<T>& g, std::size_t self) {
        const Tensor<T>& go = g.grad_buffer(self);
        T* dx = g.requires_grad(ix) ? g.grad_buffer(ix).ptr() : nullptr;
        T* dw = g.requires_grad(iw) ? g.grad_buffer(iw).ptr() : nullptr;
        T* db = (ib != SIZE_MAX && g.requires_grad(ib)) ? g.grad_buffer(ib).ptr()
                                                         : nullptr;
        kernels::conv3x3_backward(d, g.value(ix).ptr(), g.value(iw).ptr(),
                                  go.ptr(), dx, dw, db);
      });
}

}  // namespace

template <typename T>
Var<T> conv2d3x3(Var<T> x, Var<T> weight) {
  return conv_impl<T>(x, weight, nullptr);
}
template <typename T>
Var<T> conv2d3x3(Var<T> x, Var<T> weight, Var<T> bias) {
  return conv_impl<T>(x, weight, &bias);
}

template <typename T>
Var<T> relu(Var<T> a) {
  return unary(
      OpKind::relu, a, [](T v) { return v > T{0} ? v : T{0}; },
      [](T v) { return v > T{0} ? T{1} : T{0}; });
}
template <typename T>
Var<T> sin(Var<T> a) {
  return unary(
      OpKind::sin, a, [](T v) { return std::sin(v); },
      [](T v) { return std::cos(v); });
}
template <typename T>
Var<T> cos(Var<T> a) {
  return unary(
      OpKind::cos, a, [](T v) { return std::cos(v); },
      [](T v) { return -std::sin(v); });
}
template <typename T>
Var<T> abs(Var<T> a) {
  // Subgradient 0 at the kink.
  return unary(
      OpKind::abs, a, [](T v) { return std::abs(v); },
      [](T v) { return v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0}); });
}
template <typename T>
Var<T> scalar_multiply(Var<T> a, double s) {
  const T f = static_cast<T>(s);
  return unary(
      OpKind::scalar_multiply, a, [f](T v) { return f * v; },
      [f](T) { return f; });
}

template <typename T>
Var<T> concat(std::span<const Var<T>> parts) {
  if (parts.empty()) shape_fail(OpKind::concat, "no inputs");
  const Shape& s0 = parts[0].shape();
  if (s0.empty()) shape_fail(OpKind::concat, "scalar inputs cannot be concatenated");
  const std::size_t rows = shape_size(s0) / s0.back();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var<T>& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size() ||
        !std::equal(s.begin(), s.end() - 1, s0.begin()))
      shape_fail(OpKind::concat, "leading dims of " + shape_str(s) +
                                     " differ from " + shape_str(s0));
    widths.push_back(s.back());
    total += s.back();
  }
  Shape out_shape = s0;
  out_shape.back() = total;
  Tensor<T> out(out_shape);
  std::vector<std::size_t> ids;
  std::size_t offset = 0;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const T* src = parts[j].value().ptr();
    const std::size_t w = widths[j];
    for_each_index(rows, [&](std::size_t r) {
      std::copy(src + r * w, src + (r + 1) * w, out.ptr() + r * total + offset);
    });
    offset += w;
    ids.push_back(parts[j].id);
  }
  return parts[0].graph->record(
      OpKind::concat, std::move(out), ids,
      [ids, widths, rows, total](Graph<T>& g, std::size_t self) {
        const Tensor<T>& go = g.grad_buffer(self);
        std::size_t off = 0;
        for (std::size_t j = 0; j < ids.size(); ++j) {
          const std::size_t w = widths[j];
          if (g.requires_grad(ids[j])) {
            T* dst = g.grad_buffer(ids[j]).ptr();
            for_each_index(rows, [&](std::size_t r) {
              for (std::size_t c = 0; c < w; ++c)
                dst[r * w + c] += go[r * total + off + c];
            });
          }
          off += w;
        }
      });
}

template <typename T>
Var<T> slice(Var<T> a, std::size_t begin, std::size_t end) {
  const Shape& s = a.shape();
  if (s.empty() || begin >= end || end > s.back())
    shape_fail(OpKind::slice, "range [" + std::to_string(begin) + "," +
                                  std::to_string(end) + ") invalid for " +
                                  shape_str(s));
  const std::size_t width = s.back();
  const std::size_t rows = shape_size(s) / width;
  const std::size_t w = end - begin;
  Shape out_shape = s;
  out_shape.back() = w;
  Tensor<T> out(out_shape);
  const T* src = a.value().ptr();
  for_each_index(rows, [&](std::size_t r) {
    std::copy(src + r * width + begin, src + r * width + end, out.ptr() + r * w);
  });
  const std::size_t ia = a.id;
  return a.graph->record(
      OpKind::slice, std::move(out), {ia},
      [ia, rows, width, begin, w](Graph<T>& g, std::size_t self) {
        if (!g.requires_grad(ia)) return;
        const Tensor<T>& go = g.grad_buffer(self);
        T* dst = g.grad_buffer(ia).ptr();
        for_each_index(rows, [&](std::size_t r) {
          for (std::size_t c = 0; c < w; ++c)
            dst[r * width + begin + c] += go[r * w + c];
        });
      });
}

namespace {

template <typename T>
Var<T> reduce_total(OpKind kind, Var<T> a) {
  const Tensor<T>& av = a.value();
  if (av.size() == 0) shape_fail(kind, "empty input");
  const double total = kernels::sum_all(av.size(), av.ptr());
  const double scale = kind == OpKind::mean ? 1.0 / static_cast<double>(av.size()) : 1.0;
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total * scale));
  const std::size_t ia = a.id;
  return a.graph->record(kind, std::move(out), {ia},
                         [ia, scale](Graph<T>& g, std::size_t self) {
                           if (!g.requires_grad(ia)) return;
                           const T gs = g.grad_buffer(self)[0] * static_cast<T>(scale);
                           Tensor<T>& ga = g.grad_buffer(ia);
                           for_each_index(ga.size(), [&](std::size_t i) { ga[i] += gs; });
                         });
}

}  // namespace

template <typename T>
Var<T> mean(Var<T> a) {
  return reduce_total(OpKind::mean, a);
}
template <typename T>
Var<T> sum(Var<T> a) {
  return reduce_total(OpKind::sum, a);
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  if (shape_size(shape) != a.value().size())
    shape_fail(OpKind::reshape, "cannot view " + shape_str(a.shape()) + " as " +
                                    shape_str(shape));
  const std::size_t ia = a.id;
  return a.graph->record(OpKind::reshape, a.value().reshaped(std::move(shape)),
                         {ia}, [ia](Graph<T>& g, std::size_t self) {
                           if (!g.requires_grad(ia)) return;
                           const Tensor<T>& go = g.grad_buffer(self);
                           Tensor<T>& ga = g.grad_buffer(ia);
                           for_each_index(go.size(),
                                          [&](std::size_t i) { ga[i] += go[i]; });
                         });
}

template <typename T>
Var<T> unfold3x3(Var<T> x) {
  const Shape& s = x.shape();
  if (s.size() != 3)
    shape_fail(OpKind::unfold3x3, "input must be [c,h,w], got " + shape_str(s));
  const std::size_t c = s[0], h = s[1], w = s[2];
  Tensor<T> out(Shape{9 * c, h, w});
  kernels::unfold3x3_forward(c, h, w, x.value().ptr(), out.ptr());
  const std::size_t ix = x.id;
  return x.graph->record(OpKind::unfold3x3, std::move(out), {ix},
                         [ix, c, h, w](Graph<T>& g, std::size_t self) {
                           if (!g.requires_grad(ix)) return;
                           kernels::unfold3x3_backward(c, h, w,
                                                       g.grad_buffer(self).ptr(),
                                                       g.grad_buffer(ix).ptr());
                         });
}

template <typename T>
Var<T> gather_columns(Var<T> table, std::vector<std::int64_t> index) {
  const Shape& s = table.shape();
  if (s.empty())
    shape_fail(OpKind::gather_columns, "table must have a channel axis");
  const std::size_t channels = s[0];
  const std::size_t positions = shape_size(s) / std::max<std::size_t>(channels, 1);
  for (std::int64_t i : index)
    if (i < 0 || static_cast<std::size_t>(i) >= positions)
      shape_fail(OpKind::gather_columns,
                 "index " + std::to_string(i) + " outside " +
                     std::to_string(positions) + " positions of " + shape_str(s));
  Tensor<T> out(Shape{index.size(), channels});
  kernels::gather_columns<T>(channels, positions, index, table.value().ptr(),
                             out.ptr());
  const std::size_t it = table.id;
  return table.graph->record(
      OpKind::gather_columns, std::move(out), {it},
      [it, channels, positions, index = std::move(index)](Graph<T>& g,
                                                          std::size_t self) {
        if (!g.requires_grad(it)) return;
        kernels::gather_columns_backward<T>(channels, positions, index,
                                            g.grad_buffer(self).ptr(),
                                            g.grad_buffer(it).ptr());
      });
}

template <typename T>
Var<T> periodic_encode(Var<T> delta, Var<T> freqs) {
  const Shape& sd = delta.shape();
  const Shape& sf = freqs.shape();
  if (sd.size() != 2 || sd[1] != 2)
    shape_fail(OpKind::periodic_encode, "delta must be [n,2], got " + shape_str(sd));
  if (sf.size() != 1 || sf[0] == 0)
    shape_fail(OpKind::periodic_encode, "freqs must be [f] with f >= 1, got " +
                                            shape_str(sf));
  const std::size_t rows = sd[0], nf = sf[0];
  Tensor<T> out(Shape{rows, 4 * nf});
  kernels::periodic_encode(rows, nf, delta.value().ptr(), freqs.value().ptr(),
                           out.ptr());
  const std::size_t id = delta.id, ifr = freqs.id;
  return delta.graph->record(
      OpKind::periodic_encode, std::move(out), {id, ifr},
      [id, ifr, rows, nf](Graph<T>& g, std::size_t self) {
        T* dd = g.requires_grad(id) ? g.grad_buffer(id).ptr() : nullptr;
        T* df = g.requires_grad(ifr) ? g.grad_buffer(ifr).ptr() : nullptr;
        kernels::periodic_encode_backward(rows, nf, g.value(id).ptr(),
                                          g.value(ifr).ptr(), g.value(self).ptr(),
                                          g.grad_buffer(self).ptr(), dd, df);
      });
}

template <typename T>
Var<T> sum_groups(Var<T> x, std::size_t group) {
  const Shape& s = x.shape();
  if (s.size() != 2 || group == 0 || s[0] % group != 0)
    shape_fail(OpKind::sum_groups, "cannot group " + shape_str(s) + " rows by " +
                                       std::to_string(group));
  const std::size_t rows = s[0] / group, cols = s[1];
  Tensor<T> out(Shape{rows, cols});
  const T* src = x.value().ptr();
  for_each_index(rows, [&](std::size_t r) {
    for (std::size_t k = 0; k < group; ++k)
      for (std::size_t c = 0; c < cols; ++c)
        out[r * cols + c] += src[(r * group + k) * cols + c];
  });
  const std::size_t ix = x.id;
  return x.graph->record(OpKind::sum_groups, std::move(out), {ix},
                         [ix, group, rows, cols](Graph<T>& g, std::size_t self) {
                           if (!g.requires_grad(ix)) return;
                           const Tensor<T>& go = g.grad_buffer(self);
                           T* dst = g.grad_buffer(ix).ptr();
                           for_each_index(rows, [&](std::size_t r) {
                             for (std::size_t k = 0; k < group; ++k)
                               for (std::size_t c = 0; c < cols; ++c)
                                 dst[(r * group + k) * cols + c] += go[r * cols + c];
                           });
                         });
}

template <typename T>
Var<T> eval_op(OpKind kind, std::span<const Var<T>> in, const OpAttrs& attrs) {
  auto need = [&](std::size_t n) {
    if (in.size() != n)
      shape_fail(kind, "expected " + std::to_string(n) + " inputs, got " +
                           std::to_string(in.size()));
  };
  switch (kind) {
    case OpKind::add: need(2); return add(in[0], in[1]);
    case OpKind::sub: need(2); return sub(in[0], in[1]);
    case OpKind::multiply: need(2); return multiply(in[0], in[1]);
    case OpKind::matmul: need(2); return matmul(in[0], in[1]);
    case OpKind::conv2d3x3:
      if (in.size() == 2) return conv2d3x3(in[0], in[1]);
      need(3);
      return conv2d3x3(in[0], in[1], in[2]);
    case OpKind::relu: need(1); return relu(in[0]);
    case OpKind::sin: need(1); return sin(in[0]);
    case OpKind::cos: need(1); return cos(in[0]);
    case OpKind::abs: need(1); return abs(in[0]);
    case OpKind::scalar_multiply: need(1); return scalar_multiply(in[0], attrs.scalar);
    case OpKind::concat: return concat(in);
    case OpKind::slice: need(1); return slice(in[0], attrs.begin, attrs.end);
    case OpKind::mean: need(1); return mean(in[0]);
    case OpKind::sum: need(1); return sum(in[0]);
    case OpKind::reshape: need(1); return reshape(in[0], attrs.shape);
    case OpKind::unfold3x3: need(1); return unfold3x3(in[0]);
    case OpKind::periodic_encode: need(2); return periodic_encode(in[0], in[1]);
    case OpKind::sum_groups: need(1); return sum_groups(in[0], attrs.group);
    default: shape_fail(kind, "not available through eval_op");
  }
}

#define ULTRASR_INSTANTIATE(T)                                                  \
  template class Graph<T>;                                                      \
  template Var<T> add<T>(Var<T>, Var<T>);                                       \
  template Var<T> sub<T>(Var<T>, Var<T>);                                       \
  template Var<T> multiply<T>(Var<T>, Var<T>);                                  \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                    \
  template Var<T> conv2d3x3<T>(Var<T>, Var<T>);                                 \
  template Var<T> conv2d3x3<T>(Var<T>, Var<T>, Var<T>);                         \
  template Var<T> relu<T>(Var<T>);                                              \
  template Var<T> sin<T>(Var<T>);                                               \
  template Var<T> cos<T>(Var<T>);                                               \
  template Var<T> abs<T>(Var<T>);                                               \
  template Var<T> scalar_multiply<T>(Var<T>, double);                           \
  template Var<T> concat<T>(std::span<const Var<T>>);                           \
  template Var<T> slice<T>(Var<T>, std::size_t, std::size_t);                   \
  template Var<T> mean<T>(Var<T>);                                              \
  template Var<T> sum<T>(Var<T>);                                               \
  template Var<T> reshape<T>(Var<T>, Shape);                                    \
  template Var<T> unfold3x3<T>(Var<T>);                                         \
  template Var<T> gather_columns<T>(Var<T>, std::vector<std::int64_t>);         \
  template Var<T> periodic_encode<T>(Var<T>, Var<T>);                           \
  template Var<T> sum_groups<T>(Var<T>, std::size_t);                           \
  template Var<T> eval_op<T>(OpKind, std::span<const Var<T>>, const OpAttrs&);

ULTRASR_INSTANTIATE(float)
ULTRASR_INSTANTIATE(double)
#undef ULTRASR_INSTANTIATE

}  // namespace ultrasr::ad
