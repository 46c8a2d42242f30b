#include "ultrasr/kernels.hpp"

#include <omp.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <vector>

namespace ultrasr::kernels {
namespace {

constexpr std::size_t kRowBlock = 256;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

std::ptrdiff_t as_signed(std::size_t v) { return static_cast<std::ptrdiff_t>(v); }

}  // namespace

void set_num_threads(int n) {
  n = std::max(1, n);
  omp_set_num_threads(n);
  Eigen::setNbThreads(n);
}

int num_threads() { return omp_get_max_threads(); }

template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  MutMap<T> C(c, as_signed(m), as_signed(n));
  if (k == 0) {
    if (!accumulate) C.setZero();
    return;
  }
  const ConstMap<T> A(a, as_signed(trans_a ? k : m), as_signed(trans_a ? m : k));
  const ConstMap<T> B(b, as_signed(trans_b ? n : k), as_signed(trans_b ? k : n));
  auto run = [&](const auto& lhs, const auto& rhs) {
    if (accumulate)
      C.noalias() += lhs * rhs;
    else
      C.noalias() = lhs * rhs;
  };
  if (trans_a && trans_b)
    run(A.transpose(), B.transpose());
  else if (trans_a)
    run(A.transpose(), B);
  else if (trans_b)
    run(A, B.transpose());
  else
    run(A, B);
}

template <typename T>
void unfold3x3_forward(std::size_t channels, std::size_t h, std::size_t w,
                       const T* x, T* y) {
  const auto H = as_signed(h);
  const auto W = as_signed(w);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t slot = 0; slot < as_signed(channels * 9); ++slot) {
    const std::size_t c = static_cast<std::size_t>(slot) / 9;
    const std::ptrdiff_t ky = slot % 9 / 3 - 1;
    const std::ptrdiff_t kx = slot % 3 - 1;
    T* out = y + static_cast<std::size_t>(slot) * h * w;
    const T* in = x + c * h * w;
    for (std::ptrdiff_t r = 0; r < H; ++r) {
      const std::ptrdiff_t yy = r + ky;
      T* row = out + r * W;
      if (yy < 0 || yy >= H) {
        std::fill(row, row + W, T{0});
        continue;
      }
      const T* src = in + yy * W;
      for (std::ptrdiff_t col = 0; col < W; ++col) {
        const std::ptrdiff_t xx = col + kx;
        row[col] = (xx < 0 || xx >= W) ? T{0} : src[xx];
      }
    }
  }
}

template <typename T>
void unfold3x3_backward(std::size_t channels, std::size_t h, std::size_t w,
                        const T* dy, T* dx) {
  const auto H = as_signed(h);
  const auto W = as_signed(w);
  // One worker per input channel so each dx element has a single writer.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < as_signed(channels); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    T* out = dx + c * h * w;
    for (std::ptrdiff_t ky = -1; ky <= 1; ++ky)
      for (std::ptrdiff_t kx = -1; kx <= 1; ++kx) {
        const T* g = dy + unfold_channel(c, static_cast<std::size_t>(ky + 1),
                                         static_cast<std::size_t>(kx + 1)) *
                              h * w;
        for (std::ptrdiff_t r = 0; r < H; ++r) {
          const std::ptrdiff_t yy = r + ky;
          if (yy < 0 || yy >= H) continue;
          for (std::ptrdiff_t col = 0; col < W; ++col) {
            const std::ptrdiff_t xx = col + kx;
            if (xx < 0 || xx >= W) continue;
            out[yy * W + xx] += g[r * W + col];
          }
        }
      }
  }
}

template <typename T>
void conv3x3_forward(const ConvDims& d, const T* x, const T* weight,
                     const T* bias, T* y) {
  const std::size_t hw = d.height * d.width;
  std::vector<T> cols(d.in_channels * 9 * hw);
  unfold3x3_forward(d.in_channels, d.height, d.width, x, cols.data());
  gemm(false, false, d.out_channels, hw, d.in_channels * 9, weight, cols.data(),
       y, false);
  if (bias) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < as_signed(d.out_channels); ++o) {
      T* row = y + static_cast<std::size_t>(o) * hw;
      const T b = bias[o];
      for (std::size_t i = 0; i < hw; ++i) row[i] += b;
    }
  }
}

template <typename T>
void conv3x3_backward(const ConvDims& d, const T* x, const T* weight,
                      const T* dy, T* dx, T* dweight, T* dbias) {
  const std::size_t hw = d.height * d.width;
  const std::size_t k = d.in_channels * 9;
  if (dweight) {
    std::vector<T> cols(k * hw);
    unfold3x3_forward(d.in_channels, d.height, d.width, x, cols.data());
    gemm(false, true, d.out_channels, k, hw, dy, cols.data(), dweight, true);
  }
  if (dx) {
    std::vector<T> dcols(k * hw);
    gemm(true, false, k, hw, d.out_channels, weight, dy, dcols.data(), false);
    unfold3x3_backward(d.in_channels, d.height, d.width, dcols.data(), dx);
  }
  if (dbias) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < as_signed(d.out_channels); ++o) {
      const T* row = dy + static_cast<std::size_t>(o) * hw;
      T acc{0};
      for (std::size_t i = 0; i < hw; ++i) acc += row[i];
      dbias[o] += acc;
    }
  }
}

template <typename T>
void gather_columns(std::size_t channels, std::size_t positions,
                    std::span<const std::int64_t> index, const T* table,
                    T* out) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < as_signed(index.size()); ++n) {
    const auto p = static_cast<std::size_t>(index[static_cast<std::size_t>(n)]);
    T* row = out + static_cast<std::size_t>(n) * channels;
    for (std::size_t c = 0; c < channels; ++c) row[c] = table[c * positions + p];
  }
}

template <typename T>
void gather_columns_backward(std::size_t channels, std::size_t positions,
                             std::span<const std::int64_t> index, const T* dout,
                             T* dtable) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < as_signed(channels); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    T* dst = dtable + c * positions;
    for (std::size_t n = 0; n < index.size(); ++n)
      dst[static_cast<std::size_t>(index[n])] += dout[n * channels + c];
  }
}

template <typename T>
void periodic_encode(std::size_t rows, std::size_t num_freqs, const T* delta,
                     const T* freqs, T* out) {
  const std::size_t width = 4 * num_freqs;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < as_signed(rows); ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    T* row = out + n * width;
    for (std::size_t a = 0; a < 2; ++a) {
      const T d = delta[n * 2 + a];
      for (std::size_t k = 0; k < num_freqs; ++k) {
        const T arg = freqs[k] * d;
        row[a * 2 * num_freqs + 2 * k] = std::sin(arg);
        row[a * 2 * num_freqs + 2 * k + 1] = std::cos(arg);
      }
    }
  }
}

template <typename T>
void periodic_encode_backward(std::size_t rows, std::size_t num_freqs,
                              const T* delta, const T* freqs, const T* encoded,
                              const T* dout, T* ddelta, T* dfreqs) {
  const std::size_t width = 4 * num_freqs;
  const std::size_t blocks = (rows + kRowBlock - 1) / kRowBlock;
  std::vector<T> partial(dfreqs ? blocks * num_freqs : 0, T{0});
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < as_signed(blocks); ++bi) {
    const auto blk = static_cast<std::size_t>(bi);
    const std::size_t end = std::min(rows, (blk + 1) * kRowBlock);
    for (std::size_t n = blk * kRowBlock; n < end; ++n) {
      const T* g = dout + n * width;
      const T* e = encoded + n * width;
      for (std::size_t a = 0; a < 2; ++a) {
        const T d = delta[n * 2 + a];
        T dd{0};
        for (std::size_t k = 0; k < num_freqs; ++k) {
          const std::size_t col = a * 2 * num_freqs + 2 * k;
          const T gk = g[col] * e[col + 1] - g[col + 1] * e[col];
          dd += gk * freqs[k];
          if (dfreqs) partial[blk * num_freqs + k] += gk * d;
        }
        if (ddelta) ddelta[n * 2 + a] += dd;
      }
    }
  }
  if (dfreqs)
    for (std::size_t blk = 0; blk < blocks; ++blk)
      for (std::size_t k = 0; k < num_freqs; ++k)
        dfreqs[k] += partial[blk * num_freqs + k];
}

template <typename T>
void sum_rows(std::size_t rows, std::size_t cols, const T* x, T* out) {
  const std::size_t blocks = (rows + kRowBlock - 1) / kRowBlock;
  std::vector<T> partial(blocks * cols, T{0});
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < as_signed(blocks); ++bi) {
    const auto blk = static_cast<std::size_t>(bi);
    T* acc = partial.data() + blk * cols;
    const std::size_t end = std::min(rows, (blk + 1) * kRowBlock);
    for (std::size_t r = blk * kRowBlock; r < end; ++r) {
      const T* row = x + r * cols;
      for (std::size_t c = 0; c < cols; ++c) acc[c] += row[c];
    }
  }
  for (std::size_t blk = 0; blk < blocks; ++blk)
    for (std::size_t c = 0; c < cols; ++c) out[c] += partial[blk * cols + c];
}

template <typename T>
double sum_all(std::size_t n, const T* x) {
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < as_signed(blocks); ++bi) {
    const auto blk = static_cast<std::size_t>(bi);
    const std::size_t end = std::min(n, (blk + 1) * kBlock);
    double acc = 0.0;
    for (std::size_t i = blk * kBlock; i < end; ++i) acc += static_cast<double>(x[i]);
    partial[blk] = acc;
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

#define ULTRASR_INSTANTIATE(T)                                                 \
  template void gemm<T>(bool, bool, std::size_t, std::size_t, std::size_t,    \
                        const T*, const T*, T*, bool);                         \
  template void conv3x3_forward<T>(const ConvDims&, const T*, const T*,        \
                                   const T*, T*);                              \
  template void conv3x3_backward<T>(const ConvDims&, const T*, const T*,       \
                                    const T*, T*, T*, T*);                     \
  template void unfold3x3_forward<T>(std::size_t, std::size_t, std::size_t,    \
                                     const T*, T*);                            \
  template void unfold3x3_backward<T>(std::size_t, std::size_t, std::size_t,   \
                                      const T*, T*);                           \
  template void gather_columns<T>(std::size_t, std::size_t,                    \
                                  std::span<const std::int64_t>, const T*, T*); \
  template void gather_columns_backward<T>(                                    \
      std::size_t, std::size_t, std::span<const std::int64_t>, const T*, T*);  \
  template void periodic_encode<T>(std::size_t, std::size_t, const T*,         \
                                   const T*, T*);                              \
  template void periodic_encode_backward<T>(std::size_t, std::size_t,          \
                                            const T*, const T*, const T*,      \
                                            const T*, T*, T*);                 \
  template void sum_rows<T>(std::size_t, std::size_t, const T*, T*);           \
  template double sum_all<T>(std::size_t, const T*);

ULTRASR_INSTANTIATE(float)
ULTRASR_INSTANTIATE(double)
#undef ULTRASR_INSTANTIATE

}  // namespace ultrasr::kernels
