#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "identiface/kernels.hpp"
#include "identiface/rng.hpp"
#include "identiface/tensor.hpp"

namespace identiface {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode tape for one forward/backward pass. Ops append nodes in
/// evaluation order; backward() walks them in reverse. A tape is
/// single-use and single-writer.
class Tape {
 public:
  explicit Tape(kernels::Backend backend = kernels::Backend::parallel) : backend_(backend) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records an input or parameter. Gradients are only kept for leaves
  /// with requires_grad and anything computed from them.
  Var leaf(Tensor value, bool requires_grad = false);

  Var conv2d(Var input, Var weights, Var bias);
  Var maxpool2d(Var input);
  Var relu(Var input);
  Var flatten(Var input);
  Var dense(Var input, Var weights, Var bias);
  /// Inverted dropout. Identity when !training or rate == 0.
  Var dropout(Var input, double rate, bool training, Rng& rng);
  /// Mean softmax cross-entropy over the batch; a scalar node.
  Var softmax_cross_entropy(Var logits, std::span<const int> labels);
  /// Sum of all elements; a scalar node.
  Var sum(Var input);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward() target with respect to v.
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;

  /// Softmax probabilities computed by a softmax_cross_entropy node.
  const Tensor& probabilities(Var loss) const;

  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    std::function<void(Tape&, Node&)> backward;
    std::optional<Tensor> probabilities;
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(Node node);
  bool any_requires_grad(std::initializer_list<Var> vars) const;
  Tensor& grad_buffer(std::size_t id);

  kernels::Backend backend_;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

/// Numerically stable softmax over the last axis of an [N, K] tensor.
Tensor softmax(const Tensor& logits);

}  // namespace identiface
