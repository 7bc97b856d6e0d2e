#pragma once

// Central finite-difference gradient check for Tape graphs.

#include <cmath>
#include <functional>
#include <vector>

#include "identiface/autodiff.hpp"
#include "oracles.hpp"

namespace gradcheck {

using identiface::Tape;
using identiface::Tensor;
using identiface::Var;

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double evaluate(const std::vector<Tensor>& inputs, const Builder& build,
                       identiface::kernels::Backend backend) {
  Tape tape(backend);
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t, false));
  return tape.value(build(tape, leaves))[0];
}

/// Worst norm-wise relative error ||analytic - numeric|| / max(||analytic||, ||numeric||)
/// over the inputs.
inline double max_relative_error(const std::vector<Tensor>& inputs, const Builder& build,
                                 identiface::kernels::Backend backend, double h = 1e-5) {
  Tape tape(backend);
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
  tape.backward(build(tape, leaves));

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor& analytic = tape.grad(leaves[i]);
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      std::vector<Tensor> plus = inputs, minus = inputs;
      plus[i][j] += h;
      minus[i][j] -= h;
      const double numeric = (evaluate(plus, build, backend) - evaluate(minus, build, backend)) / (2 * h);
      diff += (analytic[j] - numeric) * (analytic[j] - numeric);
      na += analytic[j] * analytic[j];
      nn += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
    worst = std::max(worst, std::sqrt(diff) / denom);
  }
  return worst;
}

/// Pushes values away from zero so relu kinks sit outside the FD stencil.
inline Tensor away_from_zero(Tensor t, double margin = 0.02) {
  for (auto& v : t.data()) {
    if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
  }
  return t;
}

/// Distinct values spaced by at least `gap`, shuffled; keeps max-pool
/// winners stable under the FD step.
inline Tensor distinct_values(identiface::Shape shape, std::uint64_t seed, double gap = 0.01) {
  Tensor t(std::move(shape));
  std::vector<double> vals(t.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = gap * static_cast<double>(i) - 0.5 * gap * static_cast<double>(vals.size());
  identiface::Rng rng(seed);
  rng.shuffle(vals);
  for (std::size_t i = 0; i < vals.size(); ++i) t[i] = vals[i];
  return t;
}

/// Per layer kind, a randomized check returning the worst relative error.
/// Each graph ends in flatten -> dense with fixed random weights -> sum (or
/// the cross-entropy) so upstream gradients are non-uniform.
struct LayerCase {
  const char* name;
  std::function<double(std::uint64_t seed, identiface::kernels::Backend)> run;
};

inline Var project(Tape& t, Var x, std::uint64_t seed) {
  Var flat = t.flatten(x);
  const std::size_t d = t.value(flat).dim(1);
  Var w = t.leaf(oracle::random_tensor({d, 3}, seed + 7000));
  Var b = t.leaf(oracle::random_tensor({3}, seed + 8000));
  return t.sum(t.dense(flat, w, b));
}

inline std::vector<LayerCase> layer_cases() {
  using identiface::Rng;
  return {
      {"conv2d",
       [](std::uint64_t s, auto backend) {
         std::vector<Tensor> in{oracle::random_tensor({2, 2, 5, 4}, s), oracle::random_tensor({3, 2, 3, 3}, s + 1),
                                oracle::random_tensor({3}, s + 2)};
         return max_relative_error(in, [s](Tape& t, const std::vector<Var>& v) {
           return project(t, t.conv2d(v[0], v[1], v[2]), s);
         }, backend);
       }},
      {"maxpool2d",
       [](std::uint64_t s, auto backend) {
         std::vector<Tensor> in{distinct_values({2, 2, 4, 5}, s)};
         return max_relative_error(in, [s](Tape& t, const std::vector<Var>& v) {
           return project(t, t.maxpool2d(v[0]), s);
         }, backend);
       }},
      {"relu",
       [](std::uint64_t s, auto backend) {
         std::vector<Tensor> in{away_from_zero(oracle::random_tensor({2, 3, 3, 3}, s))};
         return max_relative_error(in, [s](Tape& t, const std::vector<Var>& v) {
           return project(t, t.relu(v[0]), s);
         }, backend);
       }},
      {"flatten",
       [](std::uint64_t s, auto backend) {
         std::vector<Tensor> in{oracle::random_tensor({3, 2, 2, 2}, s)};
         return max_relative_error(in, [s](Tape& t, const std::vector<Var>& v) {
           return project(t, t.flatten(v[0]), s);
         }, backend);
       }},
      {"dense",
       [](std::uint64_t s, auto backend) {
         std::vector<Tensor> in{oracle::random_tensor({3, 5}, s), oracle::random_tensor({5, 4}, s + 1),
                                oracle::random_tensor({4}, s + 2)};
         return max_relative_error(in, [s](Tape& t, const std::vector<Var>& v) {
           return project(t, t.dense(v[0], v[1], v[2]), s);
         }, backend);
       }},
      {"dropout",
       [](std::uint64_t s, auto backend) {
         std::vector<Tensor> in{oracle::random_tensor({3, 6}, s)};
         return max_relative_error(in, [s](Tape& t, const std::vector<Var>& v) {
           Rng rng(s + 99);
           return project(t, t.dropout(v[0], 0.5, true, rng), s);
         }, backend);
       }},
      {"softmax_cross_entropy",
       [](std::uint64_t s, auto backend) {
         std::vector<Tensor> in{oracle::random_tensor({4, 5}, s, -3.0, 3.0)};
         std::vector<int> labels{static_cast<int>(s % 5), 1, 4, 0};
         return max_relative_error(in, [labels](Tape& t, const std::vector<Var>& v) {
           return t.softmax_cross_entropy(v[0], labels);
         }, backend);
       }},
  };
}

}  // namespace gradcheck
