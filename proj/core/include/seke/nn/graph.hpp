// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "seke/nn/ops.hpp"
#include "seke/nn/param_store.hpp"
#include "seke/nn/rng.hpp"
#include "seke/nn/tensor.hpp"

namespace seke::nn {

/// Handle to a value recorded on a Graph.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode tape covering exactly the layers this project needs.
///
/// Every op computes its forward value eagerly and, when any input needs a
/// gradient, records a closure that scatters the output gradient back to
/// its inputs. backward() replays the tape in reverse and flushes leaf
/// gradients into the bound Param::grad tensors (accumulating).
///
/// A Graph built with `record = false` never stores closures; use it for
/// inference. Each Graph is single-use and owned by one thread; concurrent
/// forward passes over a shared ParamStore are safe as long as no one calls
/// backward().
class Graph {
 public:
  explicit Graph(bool record = true) : record_(record) {}

  Var constant(Tensor value);
  /// Leaf bound to a parameter. Repeated calls for the same Param reuse one node.
  /// Frozen parameters are treated as constants.
  Var param(Param& p);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient after backward(); zeros if nothing flowed into `v`.
  Tensor grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var transpose(Var x);
  Var add(Var a, Var b);
  /// x[m,n] + b[n] broadcast over rows.
  Var add_bias(Var x, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, double s);
  Var add_constant(Var x, const Tensor& c);
  Var mul_constant(Var x, Tensor c);
  Var activation(Activation kind, Var x);
  Var dropout(Var x, double p, RngStream& rng, bool training);
  Var softmax(Var x);
  Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

  /// Entries where `keep` is false become kMaskedLogit; gradient flows only
  /// through kept entries.
  Var mask_fill(Var x, const std::vector<bool>& keep);

  /// out[i] = x[rows[i]].
  Var gather_rows(Var x, std::span<const std::size_t> rows);
  /// out[targets[p][i]] += parts[p][i] for an out of `rows` rows.
  Var scatter_add_rows(std::size_t rows, std::size_t cols, std::span<const Var> parts,
                       std::span<const std::vector<std::size_t>> targets);
  /// out[i] = x[rows[i], col], rank-1.
  Var pick(Var x, std::span<const std::size_t> rows, std::size_t col);
  /// x[m,n] scaled row-wise by w[m].
  Var scale_rows(Var x, Var w);

  Var row(Var x, std::size_t r);
  Var stack_rows(std::span<const Var> rows);
  Var slice_cols(Var x, std::size_t begin, std::size_t count);
  Var concat_cols(std::span<const Var> parts);

  Var sum(Var x);
  Var cross_entropy(Var logits, std::span<const int> targets, std::span<const bool> mask);

  /// Seeds d(loss) with `seed` (broadcast over its elements) and propagates.
  void backward(Var loss, double seed = 1.0);

 private:
  using Backward = std::function<void(Graph&, const Tensor& out_grad)>;

  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    Param* param = nullptr;
    bool requires_grad = false;
  };

  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  Var push(Tensor value, bool requires_grad, Backward backward);
  Tensor& grad_ref(Var v);

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Param*, std::size_t> param_nodes_;
};

}  // namespace seke::nn
