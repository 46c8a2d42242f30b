#pragma once

// Array kernels behind the differentiation engine.
//
// Every kernel exists twice: the OpenMP version in `ultrasr::kernels` used by
// the engine, and a plain loop version in `ultrasr::kernels::serial` kept as
// the test oracle and benchmark baseline. Both versions produce results that
// are independent of the worker count: reductions run over fixed-size blocks
// whose partial sums are combined in block order.

#include <cstddef>
#include <cstdint>
#include <span>

namespace ultrasr::kernels {

struct ConvDims {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t height;
  std::size_t width;
};

// Channel index of neighbor (ky, kx) of channel c in an unfolded map.
constexpr std::size_t unfold_channel(std::size_t c, std::size_t ky,
                                     std::size_t kx) {
  return c * 9 + ky * 3 + kx;
}

// c[m x n] = op(a) * op(b) (+ c when accumulate). op(a) is m x k and op(b)
// is k x n; trans flags mean the stored matrix is the transpose.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const T* a, const T* b, T* c, bool accumulate);

// y[cout,h,w] = conv(x[cin,h,w], w[cout,cin,3,3]) + bias, zero padded.
// bias may be null.
template <typename T>
void conv3x3_forward(const ConvDims& d, const T* x, const T* weight,
                     const T* bias, T* y);

// Accumulates into any non-null gradient output.
template <typename T>
void conv3x3_backward(const ConvDims& d, const T* x, const T* weight,
                      const T* dy, T* dx, T* dweight, T* dbias);

// y[9c,h,w]: each position gets its zero-padded 3x3 neighborhood.
template <typename T>
void unfold3x3_forward(std::size_t channels, std::size_t h, std::size_t w,
                       const T* x, T* y);
template <typename T>
void unfold3x3_backward(std::size_t channels, std::size_t h, std::size_t w,
                        const T* dy, T* dx);

// out[n, c] = table[c, index[n]] for a channel-major table of `positions`
// columns. The backward pass scatter-adds into dtable.
template <typename T>
void gather_columns(std::size_t channels, std::size_t positions,
                    std::span<const std::int64_t> index, const T* table,
                    T* out);
template <typename T>
void gather_columns_backward(std::size_t channels, std::size_t positions,
                             std::span<const std::int64_t> index, const T* dout,
                             T* dtable);

// out[n, a*2F + 2k] = sin(freq[k] * delta[n, a]), the next slot holds cos.
// The backward pass reads sin/cos back from the forward output `encoded`.
template <typename T>
void periodic_encode(std::size_t rows, std::size_t num_freqs, const T* delta,
                     const T* freqs, T* out);
template <typename T>
void periodic_encode_backward(std::size_t rows, std::size_t num_freqs,
                              const T* delta, const T* freqs, const T* encoded,
                              const T* dout, T* ddelta, T* dfreqs);

// out[c] += sum over r of x[r, c].
template <typename T>
void sum_rows(std::size_t rows, std::size_t cols, const T* x, T* out);

// Sum of all elements, accumulated in double.
template <typename T>
double sum_all(std::size_t n, const T* x);

namespace serial {

template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const T* a, const T* b, T* c, bool accumulate);
template <typename T>
void conv3x3_forward(const ConvDims& d, const T* x, const T* weight,
                     const T* bias, T* y);
template <typename T>
void conv3x3_backward(const ConvDims& d, const T* x, const T* weight,
                      const T* dy, T* dx, T* dweight, T* dbias);
template <typename T>
void unfold3x3_forward(std::size_t channels, std::size_t h, std::size_t w,
                       const T* x, T* y);
template <typename T>
void unfold3x3_backward(std::size_t channels, std::size_t h, std::size_t w,
                        const T* dy, T* dx);
template <typename T>
void gather_columns(std::size_t channels, std::size_t positions,
                    std::span<const std::int64_t> index, const T* table,
                    T* out);
template <typename T>
void gather_columns_backward(std::size_t channels, std::size_t positions,
                             std::span<const std::int64_t> index, const T* dout,
                             T* dtable);
template <typename T>
void periodic_encode(std::size_t rows, std::size_t num_freqs, const T* delta,
                     const T* freqs, T* out);
template <typename T>
void periodic_encode_backward(std::size_t rows, std::size_t num_freqs,
                              const T* delta, const T* freqs, const T* encoded,
                              const T* dout, T* ddelta, T* dfreqs);
template <typename T>
void sum_rows(std::size_t rows, std::size_t cols, const T* x, T* out);
template <typename T>
double sum_all(std::size_t n, const T* x);

}  // namespace serial

// Worker count used by the parallel kernels (OpenMP and Eigen).
void set_num_threads(int n);
int num_threads();

}  // namespace ultrasr::kernels
