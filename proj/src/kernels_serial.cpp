#include <cmath>

#include "ultrasr/kernels.hpp"

namespace ultrasr::kernels::serial {

template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = accumulate ? c[i * n + j] : T{0};
      for (std::size_t p = 0; p < k; ++p) {
        const T av = trans_a ? a[p * m + i] : a[i * k + p];
        const T bv = trans_b ? b[j * k + p] : b[p * n + j];
        acc += av * bv;
      }
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void conv3x3_forward(const ConvDims& d, const T* x, const T* weight,
                     const T* bias, T* y) {
  const auto H = static_cast<std::ptrdiff_t>(d.height);
  const auto W = static_cast<std::ptrdiff_t>(d.width);
  for (std::size_t o = 0; o < d.out_channels; ++o) {
    for (std::ptrdiff_t r = 0; r < H; ++r) {
      for (std::ptrdiff_t col = 0; col < W; ++col) {
        T acc = bias ? bias[o] : T{0};
        for (std::size_t c = 0; c < d.in_channels; ++c) {
          for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
            for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
              const std::ptrdiff_t yy = r + ky - 1;
              const std::ptrdiff_t xx = col + kx - 1;
              if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
              acc += weight[((o * d.in_channels + c) * 3 + ky) * 3 + kx] *
                     x[(c * H + yy) * W + xx];
            }
          }
        }
        y[(o * H + r) * W + col] = acc;
      }
    }
  }
}

template <typename T>
void conv3x3_backward(const ConvDims& d, const T* x, const T* weight,
                      const T* dy, T* dx, T* dweight, T* dbias) {
  const auto H = static_cast<std::ptrdiff_t>(d.height);
  const auto W = static_cast<std::ptrdiff_t>(d.width);
  for (std::size_t o = 0; o < d.out_channels; ++o) {
    for (std::ptrdiff_t r = 0; r < H; ++r) {
      for (std::ptrdiff_t col = 0; col < W; ++col) {
        const T g = dy[(o * H + r) * W + col];
        if (dbias) dbias[o] += g;
        for (std::size_t c = 0; c < d.in_channels; ++c) {
          for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
            for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
              const std::ptrdiff_t yy = r + ky - 1;
              const std::ptrdiff_t xx = col + kx - 1;
              if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
              const std::size_t wi = ((o * d.in_channels + c) * 3 + ky) * 3 + kx;
              const std::size_t xi = (c * H + yy) * W + xx;
              if (dweight) dweight[wi] += g * x[xi];
              if (dx) dx[xi] += g * weight[wi];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void unfold3x3_forward(std::size_t channels, std::size_t h, std::size_t w,
                       const T* x, T* y) {
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t ky = 0; ky < 3; ++ky)
      for (std::size_t kx = 0; kx < 3; ++kx) {
        T* out = y + unfold_channel(c, ky, kx) * h * w;
        for (std::ptrdiff_t r = 0; r < H; ++r)
          for (std::ptrdiff_t col = 0; col < W; ++col) {
            const std::ptrdiff_t yy = r + static_cast<std::ptrdiff_t>(ky) - 1;
            const std::ptrdiff_t xx = col + static_cast<std::ptrdiff_t>(kx) - 1;
            out[r * W + col] = (yy < 0 || yy >= H || xx < 0 || xx >= W)
                                   ? T{0}
                                   : x[(c * h + yy) * w + xx];
          }
      }
}

template <typename T>
void unfold3x3_backward(std::size_t channels, std::size_t h, std::size_t w,
                        const T* dy, T* dx) {
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t ky = 0; ky < 3; ++ky)
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const T* g = dy + unfold_channel(c, ky, kx) * h * w;
        for (std::ptrdiff_t r = 0; r < H; ++r)
          for (std::ptrdiff_t col = 0; col < W; ++col) {
            const std::ptrdiff_t yy = r + static_cast<std::ptrdiff_t>(ky) - 1;
            const std::ptrdiff_t xx = col + static_cast<std::ptrdiff_t>(kx) - 1;
            if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
            dx[(c * h + yy) * w + xx] += g[r * W + col];
          }
      }
}

template <typename T>
void gather_columns(std::size_t channels, std::size_t positions,
                    std::span<const std::int64_t> index, const T* table,
                    T* out) {
  for (std::size_t n = 0; n < index.size(); ++n)
    for (std::size_t c = 0; c < channels; ++c)
      out[n * channels + c] =
          table[c * positions + static_cast<std::size_t>(index[n])];
}

template <typename T>
void gather_columns_backward(std::size_t channels, std::size_t positions,
                             std::span<const std::int64_t> index, const T* dout,
                             T* dtable) {
  for (std::size_t n = 0; n < index.size(); ++n)
    for (std::size_t c = 0; c < channels; ++c)
      dtable[c * positions + static_cast<std::size_t>(index[n])] +=
          dout[n * channels + c];
}

template <typename T>
void periodic_encode(std::size_t rows, std::size_t num_freqs, const T* delta,
                     const T* freqs, T* out) {
  const std::size_t width = 4 * num_freqs;
  for (std::size_t n = 0; n < rows; ++n)
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t k = 0; k < num_freqs; ++k) {
        const T arg = freqs[k] * delta[n * 2 + a];
        out[n * width + a * 2 * num_freqs + 2 * k] = std::sin(arg);
        out[n * width + a * 2 * num_freqs + 2 * k + 1] = std::cos(arg);
      }
}

template <typename T>
void periodic_encode_backward(std::size_t rows, std::size_t num_freqs,
                              const T* delta, const T* freqs, const T* encoded,
                              const T* dout, T* ddelta, T* dfreqs) {
  const std::size_t width = 4 * num_freqs;
  for (std::size_t n = 0; n < rows; ++n)
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t k = 0; k < num_freqs; ++k) {
        const T d = delta[n * 2 + a];
        const std::size_t col = n * width + a * 2 * num_freqs + 2 * k;
        const T g = dout[col] * encoded[col + 1] - dout[col + 1] * encoded[col];
        if (ddelta) ddelta[n * 2 + a] += g * freqs[k];
        if (dfreqs) dfreqs[k] += g * d;
      }
}

template <typename T>
void sum_rows(std::size_t rows, std::size_t cols, const T* x, T* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += x[r * cols + c];
}

template <typename T>
double sum_all(std::size_t n, const T* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(x[i]);
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

}  // namespace ultrasr::kernels::serial
