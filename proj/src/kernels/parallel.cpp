#include <omp.h>

#include <algorithm>
#include <vector>

#include "identiface/kernels.hpp"

namespace identiface::kernels::parallel {

namespace {

using Index = std::ptrdiff_t;

// cols[(c*9 + ky*3 + kx), y*W + x] = in[c, y+ky-1, x+kx-1], zero outside.
void im2col(const double* plane_stack, std::size_t channels, std::size_t height,
            std::size_t width, double* cols) {
  const Index H = static_cast<Index>(height), W = static_cast<Index>(width);
  const std::size_t pixels = height * width;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = plane_stack + c * pixels;
    for (Index ky = 0; ky < 3; ++ky) {
      for (Index kx = 0; kx < 3; ++kx) {
        double* row = cols + (c * 9 + static_cast<std::size_t>(ky * 3 + kx)) * pixels;
        for (Index y = 0; y < H; ++y) {
          const Index iy = y + ky - 1;
          double* dst = row + y * W;
          if (iy < 0 || iy >= H) {
            std::fill(dst, dst + W, 0.0);
            continue;
          }
          const double* src = plane + iy * W;
          for (Index x = 0; x < W; ++x) {
            const Index ix = x + kx - 1;
            dst[x] = (ix < 0 || ix >= W) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

// Inverse scatter of im2col: accumulates column gradients into image gradients.
void col2im(const double* cols, std::size_t channels, std::size_t height, std::size_t width,
            double* plane_stack) {
  const Index H = static_cast<Index>(height), W = static_cast<Index>(width);
  const std::size_t pixels = height * width;
  std::fill(plane_stack, plane_stack + channels * pixels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    double* plane = plane_stack + c * pixels;
    for (Index ky = 0; ky < 3; ++ky) {
      for (Index kx = 0; kx < 3; ++kx) {
        const double* row = cols + (c * 9 + static_cast<std::size_t>(ky * 3 + kx)) * pixels;
        for (Index y = 0; y < H; ++y) {
          const Index iy = y + ky - 1;
          if (iy < 0 || iy >= H) continue;
          const Index x_begin = std::max<Index>(0, 1 - kx);
          const Index x_end = std::min<Index>(W, W + 1 - kx);
          double* dst = plane + iy * W;
          const double* src = row + y * W;
          for (Index x = x_begin; x < x_end; ++x) dst[x + kx - 1] += src[x];
        }
      }
    }
  }
}

}  // namespace

void conv2d_forward(const ConvDims& d, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> bias,
                    std::span<double> output) {
  const std::size_t pixels = d.height * d.width;
  const std::size_t patch = d.in_channels * 9;
  std::vector<double> cols(d.batch * patch * pixels);

  const Index batch = static_cast<Index>(d.batch);
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < batch; ++n) {
    im2col(input.data() + n * d.in_channels * pixels, d.in_channels, d.height, d.width,
           cols.data() + n * patch * pixels);
  }

  const Index jobs = static_cast<Index>(d.batch * d.out_channels);
#pragma omp parallel for schedule(static)
  for (Index job = 0; job < jobs; ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / d.out_channels;
    const std::size_t f = static_cast<std::size_t>(job) % d.out_channels;
    double* out = output.data() + (n * d.out_channels + f) * pixels;
    std::fill(out, out + pixels, bias[f]);
    const double* w = weights.data() + f * patch;
    const double* sample_cols = cols.data() + n * patch * pixels;
    for (std::size_t k = 0; k < patch; ++k) {
      const double wk = w[k];
      const double* row = sample_cols + k * pixels;
      for (std::size_t p = 0; p < pixels; ++p) out[p] += wk * row[p];
    }
  }
}

void conv2d_backward(const ConvDims& d, std::span<const double> input,
                     std::span<const double> weights, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias) {
  const std::size_t pixels = d.height * d.width;
  const std::size_t patch = d.in_channels * 9;
  std::vector<double> cols(d.batch * patch * pixels);
  const Index batch = static_cast<Index>(d.batch);

  // Input gradient: per sample, grad_cols = W^T * grad_out, then col2im.
#pragma omp parallel
  {
    std::vector<double> grad_cols(patch * pixels);
#pragma omp for schedule(static)
    for (Index n = 0; n < batch; ++n) {
      im2col(input.data() + n * d.in_channels * pixels, d.in_channels, d.height, d.width,
             cols.data() + n * patch * pixels);
      std::fill(grad_cols.begin(), grad_cols.end(), 0.0);
      for (std::size_t f = 0; f < d.out_channels; ++f) {
        const double* go = grad_output.data() + (n * d.out_channels + f) * pixels;
        const double* w = weights.data() + f * patch;
        for (std::size_t k = 0; k < patch; ++k) {
          const double wk = w[k];
          double* row = grad_cols.data() + k * pixels;
          for (std::size_t p = 0; p < pixels; ++p) row[p] += wk * go[p];
        }
      }
      col2im(grad_cols.data(), d.in_channels, d.height, d.width,
             grad_input.data() + n * d.in_channels * pixels);
    }
  }

  // Weight and bias gradients: one filter per thread, batch reduced in order.
  const Index filters = static_cast<Index>(d.out_channels);
#pragma omp parallel for schedule(static)
  for (Index fi = 0; fi < filters; ++fi) {
    const std::size_t f = static_cast<std::size_t>(fi);
    double* gw = grad_weights.data() + f * patch;
    std::fill(gw, gw + patch, 0.0);
    double gb = 0.0;
    for (std::size_t n = 0; n < d.batch; ++n) {
      const double* go = grad_output.data() + (n * d.out_channels + f) * pixels;
      const double* sample_cols = cols.data() + n * patch * pixels;
      for (std::size_t k = 0; k < patch; ++k) {
        const double* row = sample_cols + k * pixels;
        double acc = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) acc += go[p] * row[p];
        gw[k] += acc;
      }
      for (std::size_t p = 0; p < pixels; ++p) gb += go[p];
    }
    grad_bias[f] = gb;
  }
}

void maxpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output,
                     std::span<std::size_t> argmax) {
  const std::size_t oh = d.out_height(), ow = d.out_width();
  const Index planes = static_cast<Index>(d.batch * d.channels);
#pragma omp parallel for schedule(static)
  for (Index pi = 0; pi < planes; ++pi) {
    const std::size_t p = static_cast<std::size_t>(pi);
    const std::size_t in_base = p * d.height * d.width;
    for (std::size_t y = 0; y < oh; ++y) {
      const std::size_t r0 = in_base + 2 * y * d.width;
      const std::size_t r1 = r0 + d.width;
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t candidates[4] = {r0 + 2 * x, r0 + 2 * x + 1, r1 + 2 * x, r1 + 2 * x + 1};
        std::size_t best = candidates[0];
        for (int i = 1; i < 4; ++i) {
          if (input[candidates[i]] > input[best]) best = candidates[i];
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
  const std::size_t out_plane = d.out_height() * d.out_width();
  const std::size_t in_plane = d.height * d.width;
  const Index planes = static_cast<Index>(d.batch * d.channels);
  // Windows never overlap and stay inside their plane, so planes are independent.
#pragma omp parallel for schedule(static)
  for (Index pi = 0; pi < planes; ++pi) {
    const std::size_t p = static_cast<std::size_t>(pi);
    std::fill(grad_input.begin() + static_cast<Index>(p * in_plane),
              grad_input.begin() + static_cast<Index>((p + 1) * in_plane), 0.0);
    for (std::size_t i = p * out_plane; i < (p + 1) * out_plane; ++i) {
      grad_input[argmax[i]] += grad_output[i];
    }
  }
}

void dense_forward(const DenseDims& d, std::span<const double> input,
                   std::span<const double> weights, std::span<const double> bias,
                   std::span<double> output) {
  const Index batch = static_cast<Index>(d.batch);
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < batch; ++n) {
    double* out = output.data() + n * d.out_features;
    std::copy(bias.begin(), bias.end(), out);
    const double* in = input.data() + n * d.in_features;
    for (std::size_t i = 0; i < d.in_features; ++i) {
      const double xi = in[i];
      const double* w = weights.data() + i * d.out_features;
      for (std::size_t j = 0; j < d.out_features; ++j) out[j] += xi * w[j];
    }
  }
}

void dense_backward(const DenseDims& d, std::span<const double> input,
                    std::span<const double> weights, std::span<const double> grad_output,
                    std::span<double> grad_input, std::span<double> grad_weights,
                    std::span<double> grad_bias) {
  const Index batch = static_cast<Index>(d.batch);
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < batch; ++n) {
    const double* go = grad_output.data() + n * d.out_features;
    double* gi = grad_input.data() + n * d.in_features;
    for (std::size_t i = 0; i < d.in_features; ++i) {
      const double* w = weights.data() + i * d.out_features;
      double acc = 0.0;
      for (std::size_t j = 0; j < d.out_features; ++j) acc += go[j] * w[j];
      gi[i] = acc;
    }
  }

  const Index rows = static_cast<Index>(d.in_features);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    double* gw = grad_weights.data() + i * d.out_features;
    std::fill(gw, gw + d.out_features, 0.0);
    for (std::size_t n = 0; n < d.batch; ++n) {
      const double xi = input[n * d.in_features + i];
      const double* go = grad_output.data() + n * d.out_features;
      for (std::size_t j = 0; j < d.out_features; ++j) gw[j] += xi * go[j];
    }
  }

  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t j = 0; j < d.out_features; ++j) {
      grad_bias[j] += grad_output[n * d.out_features + j];
    }
  }
}

}  // namespace identiface::kernels::parallel
