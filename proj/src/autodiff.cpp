#include "identiface/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "identiface/error.hpp"

namespace identiface {

namespace {

void add_into(Tensor& dst, std::span<const double> src) {
  auto d = dst.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
}

}  // namespace

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) throw StateError("variable is not recorded on this tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw StateError("variable is not recorded on this tape");
  return nodes_[v.id];
}

Var Tape::push(Node n) {
  if (backward_done_) throw StateError("tape already consumed by backward()");
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

bool Tape::any_requires_grad(std::initializer_list<Var> vars) const {
  return std::any_of(vars.begin(), vars.end(), [&](Var v) { return node(v).requires_grad; });
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::conv2d(Var input, Var weights, Var bias) {
  const Tensor& x = value(input);
  const Tensor& w = value(weights);
  const Tensor& b = value(bias);
  require_rank(x, 4, "conv2d input");
  require_rank(w, 4, "conv2d weights");
  require_rank(b, 1, "conv2d bias");
  if (w.dim(1) != x.dim(1) || w.dim(2) != 3 || w.dim(3) != 3 || b.dim(0) != w.dim(0)) {
    throw DimensionError("conv2d shape mismatch: input " + shape_to_string(x.shape()) +
                         ", weights " + shape_to_string(w.shape()) + ", bias " +
                         shape_to_string(b.shape()));
  }
  x.check_finite("conv2d input");
  const kernels::ConvDims dims{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0)};

  Node n;
  n.value = Tensor({dims.batch, dims.out_channels, dims.height, dims.width});
  if (backend_ == kernels::Backend::serial) {
    kernels::serial::conv2d_forward(dims, x.data(), w.data(), b.data(), n.value.data());
  } else {
    kernels::parallel::conv2d_forward(dims, x.data(), w.data(), b.data(), n.value.data());
  }
  n.requires_grad = any_requires_grad({input, weights, bias});
  n.parents = {input.id, weights.id, bias.id};
  n.backward = [dims, backend = backend_](Tape& tape, Node& self) {
    const Node& xn = tape.nodes_[self.parents[0]];
    const Node& wn = tape.nodes_[self.parents[1]];
    std::vector<double> gx(dims.input_size()), gw(dims.weight_size()), gb(dims.out_channels);
    if (backend == kernels::Backend::serial) {
      kernels::serial::conv2d_backward(dims, xn.value.data(), wn.value.data(), self.grad.data(),
                                       gx, gw, gb);
    } else {
      kernels::parallel::conv2d_backward(dims, xn.value.data(), wn.value.data(),
                                         self.grad.data(), gx, gw, gb);
    }
    const std::vector<double>* grads[3] = {&gx, &gw, &gb};
    for (int i = 0; i < 3; ++i) {
      if (tape.nodes_[self.parents[i]].requires_grad) {
        add_into(tape.grad_buffer(self.parents[i]), *grads[i]);
      }
    }
  };
  return push(std::move(n));
}

Var Tape::maxpool2d(Var input) {
  const Tensor& x = value(input);
  require_rank(x, 4, "maxpool2d input");
  if (x.dim(2) < 2 || x.dim(3) < 2) {
    throw DimensionError("maxpool2d needs H,W >= 2, got " + shape_to_string(x.shape()));
  }
  const kernels::PoolDims dims{x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
  Node n;
  n.value = Tensor({dims.batch, dims.channels, dims.out_height(), dims.out_width()});
  std::vector<std::size_t> argmax(dims.output_size());
  if (backend_ == kernels::Backend::serial) {
    kernels::serial::maxpool_forward(dims, x.data(), n.value.data(), argmax);
  } else {
    kernels::parallel::maxpool_forward(dims, x.data(), n.value.data(), argmax);
  }
  n.requires_grad = node(input).requires_grad;
  n.parents = {input.id};
  n.backward = [dims, backend = backend_, argmax = std::move(argmax)](Tape& tape, Node& self) {
    std::vector<double> gx(dims.input_size());
    if (backend == kernels::Backend::serial) {
      kernels::serial::maxpool_backward(dims, self.grad.data(), argmax, gx);
    } else {
      kernels::parallel::maxpool_backward(dims, self.grad.data(), argmax, gx);
    }
    add_into(tape.grad_buffer(self.parents[0]), gx);
  };
  return push(std::move(n));
}

Var Tape::relu(Var input) {
  const Tensor& x = value(input);
  Node n;
  n.value = x;
  for (double& v : n.value.data()) v = v > 0.0 ? v : 0.0;
  n.requires_grad = node(input).requires_grad;
  n.parents = {input.id};
  n.backward = [](Tape& tape, Node& self) {
    Tensor& gx = tape.grad_buffer(self.parents[0]);
    const auto y = self.value.data();
    const auto gy = self.grad.data();
    auto g = gx.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y[i] > 0.0) g[i] += gy[i];
    }
  };
  return push(std::move(n));
}

Var Tape::flatten(Var input) {
  const Tensor& x = value(input);
  const std::size_t batch = x.dim(0);
  Node n;
  n.value = x.reshaped({batch, x.size() / batch});
  n.requires_grad = node(input).requires_grad;
  n.parents = {input.id};
  n.backward = [](Tape& tape, Node& self) {
    add_into(tape.grad_buffer(self.parents[0]), self.grad.data());
  };
  return push(std::move(n));
}

Var Tape::dense(Var input, Var weights, Var bias) {
  const Tensor& x = value(input);
  const Tensor& w = value(weights);
  const Tensor& b = value(bias);
  require_rank(x, 2, "dense input");
  require_rank(w, 2, "dense weights");
  require_rank(b, 1, "dense bias");
  if (w.dim(0) != x.dim(1) || b.dim(0) != w.dim(1)) {
    throw DimensionError("dense shape mismatch: input " + shape_to_string(x.shape()) +
                         ", weights " + shape_to_string(w.shape()) + ", bias " +
                         shape_to_string(b.shape()));
  }
  x.check_finite("dense input");
  const kernels::DenseDims dims{x.dim(0), x.dim(1), w.dim(1)};
  Node n;
  n.value = Tensor({dims.batch, dims.out_features});
  if (backend_ == kernels::Backend::serial) {
    kernels::serial::dense_forward(dims, x.data(), w.data(), b.data(), n.value.data());
  } else {
    kernels::parallel::dense_forward(dims, x.data(), w.data(), b.data(), n.value.data());
  }
  n.requires_grad = any_requires_grad({input, weights, bias});
  n.parents = {input.id, weights.id, bias.id};
  n.backward = [dims, backend = backend_](Tape& tape, Node& self) {
    const Node& xn = tape.nodes_[self.parents[0]];
    const Node& wn = tape.nodes_[self.parents[1]];
    std::vector<double> gx(dims.batch * dims.in_features);
    std::vector<double> gw(dims.in_features * dims.out_features);
    std::vector<double> gb(dims.out_features);
    if (backend == kernels::Backend::serial) {
      kernels::serial::dense_backward(dims, xn.value.data(), wn.value.data(), self.grad.data(),
                                      gx, gw, gb);
    } else {
      kernels::parallel::dense_backward(dims, xn.value.data(), wn.value.data(),
                                        self.grad.data(), gx, gw, gb);
    }
    const std::vector<double>* grads[3] = {&gx, &gw, &gb};
    for (int i = 0; i < 3; ++i) {
      if (tape.nodes_[self.parents[i]].requires_grad) {
        add_into(tape.grad_buffer(self.parents[i]), *grads[i]);
      }
    }
  };
  return push(std::move(n));
}

Var Tape::dropout(Var input, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw RangeError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  const Tensor& x = value(input);
  Node n;
  n.value = x;
  n.requires_grad = node(input).requires_grad;
  n.parents = {input.id};
  if (!training || rate == 0.0) {
    n.backward = [](Tape& tape, Node& self) {
      add_into(tape.grad_buffer(self.parents[0]), self.grad.data());
    };
    return push(std::move(n));
  }
  const double scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (double& m : mask) m = rng.uniform01() < rate ? 0.0 : scale;
  auto y = n.value.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  n.backward = [mask = std::move(mask)](Tape& tape, Node& self) {
    Tensor& gx = tape.grad_buffer(self.parents[0]);
    auto g = gx.data();
    const auto gy = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i] * mask[i];
  };
  return push(std::move(n));
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax");
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  Tensor probs(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* z = logits.data().data() + r * k;
    double* p = probs.data().data() + r * k;
    const double zmax = *std::max_element(z, z + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p[j] = std::exp(z[j] - zmax);
      total += p[j];
    }
    for (std::size_t j = 0; j < k; ++j) p[j] /= total;
  }
  return probs;
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = value(logits);
  require_rank(z, 2, "softmax_cross_entropy logits");
  const std::size_t rows = z.dim(0), k = z.dim(1);
  if (labels.size() != rows) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(rows) + " rows");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) {
      throw LabelError("label " + std::to_string(labels[r]) + " at row " + std::to_string(r) +
                       " outside [0, " + std::to_string(k) + ")");
    }
  }
  z.check_finite("softmax_cross_entropy logits");

  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = z.data().data() + r * k;
    const double zmax = *std::max_element(zr, zr + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(zr[j] - zmax);
    loss -= (zr[labels[r]] - zmax) - std::log(total);
  }
  loss /= static_cast<double>(rows);

  Node n;
  n.value = Tensor::scalar(loss);
  n.probabilities = softmax(z);
  n.requires_grad = node(logits).requires_grad;
  n.parents = {logits.id};
  n.backward = [labels = std::vector<int>(labels.begin(), labels.end()), rows, k](Tape& tape,
                                                                                   Node& self) {
    Tensor& gz = tape.grad_buffer(self.parents[0]);
    const double scale = self.grad[0] / static_cast<double>(rows);
    const auto p = self.probabilities->data();
    auto g = gz.data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < k; ++j) {
        const double target = static_cast<std::size_t>(labels[r]) == j ? 1.0 : 0.0;
        g[r * k + j] += scale * (p[r * k + j] - target);
      }
    }
  };
  return push(std::move(n));
}

Var Tape::sum(Var input) {
  const Tensor& x = value(input);
  double total = 0.0;
  for (double v : x.data()) total += v;
  Node n;
  n.value = Tensor::scalar(total);
  n.requires_grad = node(input).requires_grad;
  n.parents = {input.id};
  n.backward = [](Tape& tape, Node& self) {
    Tensor& gx = tape.grad_buffer(self.parents[0]);
    for (double& g : gx.data()) g += self.grad[0];
  };
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!backward_done_) throw StateError("grad() requested before backward()");
  if (!n.requires_grad) throw StateError("variable does not require gradients");
  return n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

const Tensor& Tape::probabilities(Var loss) const {
  const Node& n = node(loss);
  if (!n.probabilities) throw StateError("variable is not a softmax_cross_entropy node");
  return *n.probabilities;
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw StateError("backward() called before any forward computation");
  if (backward_done_) throw StateError("backward() already called on this tape");
  Node& target = node(loss);
  if (target.value.size() != 1) {
    throw StateError("backward() target must be a scalar, got shape " +
                     shape_to_string(target.value.shape()));
  }
  if (!target.requires_grad) throw StateError("backward() target does not depend on parameters");

  for (std::size_t i = 0; i <= loss.id; ++i) {
    if (nodes_[i].requires_grad) grad_buffer(i);
  }
  target.grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, n);
  }
  backward_done_ = true;
}

}  // namespace identiface
