#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "identiface/tensor.hpp"

namespace identiface {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment buffers are sized from the parameter
/// shapes given at construction; step() rejects anything else.
class Adam {
 public:
  Adam(AdamConfig config, std::span<const Tensor> params);

  void step(std::span<Tensor> params, std::span<const Tensor> grads);

  std::size_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t t_ = 0;
};

}  // namespace identiface
