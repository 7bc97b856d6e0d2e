#pragma once

// Numeric kernels for the CNN layers. Two implementations share one
// signature set:
//   kernels::serial    direct loops, single-threaded; the reference path
//   kernels::parallel  im2col/GEMM formulations split across OpenMP threads
// Both are deterministic: every output element is reduced by one thread in
// a fixed order, so results do not depend on the thread count.

#include <cstddef>
#include <span>

namespace identiface::kernels {

/// 3x3 convolution, stride 1, zero padding 1. Input NCHW, weights FC33.
struct ConvDims {
  std::size_t batch;
  std::size_t in_channels;
  std::size_t height;
  std::size_t width;
  std::size_t out_channels;

  std::size_t input_size() const { return batch * in_channels * height * width; }
  std::size_t output_size() const { return batch * out_channels * height * width; }
  std::size_t weight_size() const { return out_channels * in_channels * 9; }
};

/// 2x2 window, stride 2. Output is floor(H/2) x floor(W/2).
struct PoolDims {
  std::size_t batch;
  std::size_t channels;
  std::size_t height;
  std::size_t width;

  std::size_t out_height() const { return height / 2; }
  std::size_t out_width() const { return width / 2; }
  std::size_t input_size() const { return batch * channels * height * width; }
  std::size_t output_size() const { return batch * channels * out_height() * out_width(); }
};

/// Row-major [batch, in] x [in, out] + bias[out].
struct DenseDims {
  std::size_t batch;
  std::size_t in_features;
  std::size_t out_features;
};

namespace serial {
void conv2d_forward(const ConvDims& d, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> output);
// Gradients are overwritten, not accumulated.
void conv2d_backward(const ConvDims& d, std::span<const double> input,
                     std::span<const double> weights, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias);
// argmax receives the flat input index of each window maximum; ties keep the first.
void maxpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output,
                     std::span<std::size_t> argmax);
void maxpool_backward(const PoolDims& d, std::span<const double> grad_output,
                      std::span<const std::size_t> argmax, std::span<double> grad_input);
void dense_forward(const DenseDims& d, std::span<const double> input,
                   std::span<const double> weights, std::span<const double> bias,
                   std::span<double> output);
void dense_backward(const DenseDims& d, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> grad_output,
                    std::span<double> grad_input, std::span<double> grad_weights,
                    std::span<double> grad_bias);
}  // namespace serial

namespace parallel {
void conv2d_forward(const ConvDims& d, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> output);
// Gradients are overwritten, not accumulated.
void conv2d_backward(const ConvDims& d, std::span<const double> input,
                     std::span<const double> weights, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias);
// argmax receives the flat input index of each window maximum; ties keep the first.
void maxpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output,
                     std::span<std::size_t> argmax);
void maxpool_backward(const PoolDims& d, std::span<const double> grad_output,
                      std::span<const std::size_t> argmax, std::span<double> grad_input);
void dense_forward(const DenseDims& d, std::span<const double> input,
                   std::span<const double> weights, std::span<const double> bias,
                   std::span<double> output);
void dense_backward(const DenseDims& d, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> grad_output,
                    std::span<double> grad_input, std::span<double> grad_weights,
                    std::span<double> grad_bias);
}  // namespace parallel

enum class Backend { serial, parallel };

}  // namespace identiface::kernels
