#include <algorithm>
#include <cassert>

#include "identiface/kernels.hpp"

namespace identiface::kernels::serial {

void conv2d_forward(const ConvDims& d, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> output) {
  assert(input.size() == d.input_size() && output.size() == d.output_size());
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(d.height);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(d.width);
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t f = 0; f < d.out_channels; ++f) {
      for (std::ptrdiff_t y = 0; y < H; ++y) {
        for (std::ptrdiff_t x = 0; x < W; ++x) {
          double acc = bias[f];
          for (std::size_t c = 0; c < d.in_channels; ++c) {
            const double* plane = input.data() + (n * d.in_channels + c) * d.height * d.width;
            const double* kernel = weights.data() + (f * d.in_channels + c) * 9;
            for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
              const std::ptrdiff_t iy = y + ky - 1;
              if (iy < 0 || iy >= H) continue;
              for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
                const std::ptrdiff_t ix = x + kx - 1;
                if (ix < 0 || ix >= W) continue;
                acc += plane[iy * W + ix] * kernel[ky * 3 + kx];
              }
            }
          }
          output[((n * d.out_channels + f) * d.height + y) * d.width + x] = acc;
        }
      }
    }
  }
}

void conv2d_backward(const ConvDims& d, std::span<const double> input,
                     std::span<const double> weights, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias) {
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(d.height);
  const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(d.width);
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t f = 0; f < d.out_channels; ++f) {
      for (std::ptrdiff_t y = 0; y < H; ++y) {
        for (std::ptrdiff_t x = 0; x < W; ++x) {
          const double g = grad_output[((n * d.out_channels + f) * d.height + y) * d.width + x];
          grad_bias[f] += g;
          for (std::size_t c = 0; c < d.in_channels; ++c) {
            const std::size_t plane = (n * d.in_channels + c) * d.height * d.width;
            const std::size_t kernel = (f * d.in_channels + c) * 9;
            for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
              const std::ptrdiff_t iy = y + ky - 1;
              if (iy < 0 || iy >= H) continue;
              for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
                const std::ptrdiff_t ix = x + kx - 1;
                if (ix < 0 || ix >= W) continue;
                const std::size_t in_idx = plane + static_cast<std::size_t>(iy * W + ix);
                const std::size_t w_idx = kernel + static_cast<std::size_t>(ky * 3 + kx);
                grad_input[in_idx] += g * weights[w_idx];
                grad_weights[w_idx] += g * input[in_idx];
              }
            }
          }
        }
      }
    }
  }
}

void maxpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output,
                     std::span<std::size_t> argmax) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  for (std::size_t p = 0; p < d.batch * d.channels; ++p) {
    const std::size_t in_base = p * d.height * d.width;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = in_base + (2 * y) * d.width + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = in_base + (2 * y + dy) * d.width + 2 * x + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t out_idx = (p * oh + y) * ow + x;
        output[out_idx] = input[best];
        argmax[out_idx] = best;
      }
    }
  }
}

void maxpool_backward(const PoolDims& d, std::span<const double> grad_output,
                      std::span<const std::size_t> argmax, std::span<double> grad_input) {
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  for (std::size_t i = 0; i < d.output_size(); ++i) grad_input[argmax[i]] += grad_output[i];
}

void dense_forward(const DenseDims& d, std::span<const double> input,
                   std::span<const double> weights, std::span<const double> bias,
                   std::span<double> output) {
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t j = 0; j < d.out_features; ++j) {
      double acc = bias[j];
      for (std::size_t i = 0; i < d.in_features; ++i) {
        acc += input[n * d.in_features + i] * weights[i * d.out_features + j];
      }
      output[n * d.out_features + j] = acc;
    }
  }
}

void dense_backward(const DenseDims& d, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> grad_output,
                    std::span<double> grad_input, std::span<double> grad_weights,
                    std::span<double> grad_bias) {
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t j = 0; j < d.out_features; ++j) {
      const double g = grad_output[n * d.out_features + j];
      grad_bias[j] += g;
      for (std::size_t i = 0; i < d.in_features; ++i) {
        grad_input[n * d.in_features + i] += g * weights[i * d.out_features + j];
        grad_weights[i * d.out_features + j] += g * input[n * d.in_features + i];
      }
    }
  }
}

}  // namespace identiface::kernels::serial
