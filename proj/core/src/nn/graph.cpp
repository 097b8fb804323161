// Copyright 2026 The SEKE Authors
// SPDX-License-Identifier: Apache-2.0

#include "seke/nn/graph.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>

#include "seke/errors.hpp"

namespace seke::nn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor& t) { return ConstMap(t.data().data(), t.rows(), t.cols()); }
MutMap view(Tensor& t) { return MutMap(t.data().data(), t.rows(), t.cols()); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var Graph::push(Tensor value, bool requires_grad, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Tensor& Graph::grad_ref(Var v) {
  Node& node = nodes_[v.id];
  if (node.grad.shape() != node.value.shape()) node.grad = Tensor(node.value.shape());
  return node.grad;
}

Tensor Graph::grad(Var v) const {
  const Node& node = nodes_[v.id];
  if (node.grad.shape() != node.value.shape()) return Tensor(node.value.shape());
  return node.grad;
}

Var Graph::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Graph::param(Param& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
  Var v = push(p.value, p.trainable, nullptr);
  nodes_[v.id].param = nodes_[v.id].requires_grad ? &p : nullptr;
  param_nodes_.emplace(&p, v.id);
  return v;
}

Var Graph::matmul(Var a, Var b) {
  Tensor out = nn::matmul(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, const Tensor& dy) {
    if (g.needs(a)) view(g.grad_ref(a)).noalias() += view(dy) * view(g.value(b)).transpose();
    if (g.needs(b)) view(g.grad_ref(b)).noalias() += view(g.value(a)).transpose() * view(dy);
  });
}

Var Graph::transpose(Var x) {
  return push(nn::transpose(value(x)), needs(x), [x](Graph& g, const Tensor& dy) {
    view(g.grad_ref(x)) += view(dy).transpose();
  });
}

Var Graph::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Tensor out = value(a);
  accumulate(out, value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, const Tensor& dy) {
    if (g.needs(a)) accumulate(g.grad_ref(a), dy);
    if (g.needs(b)) accumulate(g.grad_ref(b), dy);
  });
}

Var Graph::add_bias(Var x, Var b) {
  const Tensor& xv = value(x);
  const Tensor& bv = value(b);
  if (bv.rank() != 1 || bv.size() != xv.cols()) {
    throw DimensionError("add_bias: " + shape_to_string(xv.shape()) + " + " +
                         shape_to_string(bv.shape()));
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  return push(std::move(out), needs(x) || needs(b), [x, b](Graph& g, const Tensor& dy) {
    if (g.needs(x)) accumulate(g.grad_ref(x), dy);
    if (g.needs(b)) {
      Tensor& db = g.grad_ref(b);
      for (std::size_t r = 0; r < dy.rows(); ++r) {
        auto row = dy.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) db[c] += row[c];
      }
    }
  });
}

Var Graph::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Tensor out = value(a);
  const Tensor& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, const Tensor& dy) {
    if (g.needs(a)) {
      Tensor& da = g.grad_ref(a);
      const Tensor& bv = g.value(b);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * bv[i];
    }
    if (g.needs(b)) {
      Tensor& db = g.grad_ref(b);
      const Tensor& av = g.value(a);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * av[i];
    }
  });
}

Var Graph::scale(Var x, double s) {
  Tensor out = value(x);
  for (double& v : out.data()) v *= s;
  return push(std::move(out), needs(x), [x, s](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_ref(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += s * dy[i];
  });
}

Var Graph::add_constant(Var x, const Tensor& c) {
  require_same_shape(value(x), c, "add_constant");
  Tensor out = value(x);
  accumulate(out, c);
  return push(std::move(out), needs(x),
              [x](Graph& g, const Tensor& dy) { accumulate(g.grad_ref(x), dy); });
}

Var Graph::mul_constant(Var x, Tensor c) {
  require_same_shape(value(x), c, "mul_constant");
  Tensor out = value(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  return push(std::move(out), needs(x), [x, c = std::move(c)](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_ref(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * c[i];
  });
}

Var Graph::activation(Activation kind, Var x) {
  const Var y{nodes_.size()};
  return push(nn::activation(kind, value(x)), needs(x), [x, y, kind](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_ref(x);
    const Tensor& xv = g.value(x);
    const Tensor& yv = g.value(y);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * activate_grad(kind, xv[i], yv[i]);
  });
}

Var Graph::dropout(Var x, double p, RngStream& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout probability must be in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  return mul_constant(x, dropout_mask(value(x).shape(), p, rng));
}

Var Graph::softmax(Var x) {
  const Var y{nodes_.size()};
  return push(nn::softmax(value(x)), needs(x), [x, y](Graph& g, const Tensor& dy) {
    const Tensor& yv = g.value(y);
    Tensor& dx = g.grad_ref(x);
    for (std::size_t r = 0; r < yv.rows(); ++r) {
      auto yr = yv.row(r);
      auto gr = dy.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < yr.size(); ++c) dot += yr[c] * gr[c];
      auto dr = dx.row(r);
      // Masked entries have y == 0 and receive no gradient.
      for (std::size_t c = 0; c < yr.size(); ++c) dr[c] += yr[c] * (gr[c] - dot);
    }
  });
}

Var Graph::layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Tensor& xv = value(x);
  const std::size_t n = xv.cols();
  if (value(gamma).size() != n || value(beta).size() != n) {
    throw DimensionError("layer_norm: width " + std::to_string(n) + " vs gamma " +
                         shape_to_string(value(gamma).shape()));
  }
  Tensor xhat(xv.shape());
  std::vector<double> inv_std(xv.rows());
  Tensor out(xv.shape());
  const Tensor& gv = value(gamma);
  const Tensor& bv = value(beta);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto in = xv.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    auto xh = xhat.row(r);
    auto o = out.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      xh[c] = (in[c] - mean) * inv_std[r];
      o[c] = gv[c] * xh[c] + bv[c];
    }
  }
  const bool rg = needs(x) || needs(gamma) || needs(beta);
  return push(std::move(out), rg,
              [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                  Graph& g, const Tensor& dy) {
                const std::size_t n = xhat.cols();
                const Tensor& gv = g.value(gamma);
                if (g.needs(gamma) || g.needs(beta)) {
                  for (std::size_t r = 0; r < xhat.rows(); ++r) {
                    auto d = dy.row(r);
                    auto xh = xhat.row(r);
                    for (std::size_t c = 0; c < n; ++c) {
                      if (g.needs(gamma)) g.grad_ref(gamma)[c] += d[c] * xh[c];
                      if (g.needs(beta)) g.grad_ref(beta)[c] += d[c];
                    }
                  }
                }
                if (!g.needs(x)) return;
                Tensor& dx = g.grad_ref(x);
                std::vector<double> dxhat(n);
                for (std::size_t r = 0; r < xhat.rows(); ++r) {
                  auto d = dy.row(r);
                  auto xh = xhat.row(r);
                  double mean_d = 0.0;
                  double mean_dx = 0.0;
                  for (std::size_t c = 0; c < n; ++c) {
                    dxhat[c] = d[c] * gv[c];
                    mean_d += dxhat[c];
                    mean_dx += dxhat[c] * xh[c];
                  }
                  mean_d /= static_cast<double>(n);
                  mean_dx /= static_cast<double>(n);
                  auto out = dx.row(r);
                  for (std::size_t c = 0; c < n; ++c) {
                    out[c] += inv_std[r] * (dxhat[c] - mean_d - xh[c] * mean_dx);
                  }
                }
              });
}

Var Graph::mask_fill(Var x, const std::vector<bool>& keep) {
  const Tensor& xv = value(x);
  if (keep.size() != xv.size()) {
    throw DimensionError("mask_fill: mask of " + std::to_string(keep.size()) +
                         " entries for tensor " + shape_to_string(xv.shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!keep[i]) out[i] = kMaskedLogit;
  }
  return push(std::move(out), needs(x), [x, keep](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_ref(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (keep[i]) dx[i] += dy[i];
    }
  });
}

Var Graph::gather_rows(Var x, std::span<const std::size_t> rows) {
  const Tensor& xv = value(x);
  const std::size_t n = xv.cols();
  Tensor out({rows.size(), n});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows()) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " +
                           shape_to_string(xv.shape()));
    }
    auto src = xv.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return push(std::move(out), needs(x), [x, idx = std::move(idx)](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_ref(x);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto src = dy.row(i);
      auto dst = dx.row(idx[i]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var Graph::scatter_add_rows(std::size_t rows, std::size_t cols, std::span<const Var> parts,
                            std::span<const std::vector<std::size_t>> targets) {
  if (parts.size() != targets.size()) {
    throw DimensionError("scatter_add_rows: parts/targets length mismatch");
  }
  Tensor out({rows, cols});
  bool rg = false;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& pv = value(parts[p]);
    if (pv.rows() != targets[p].size() || pv.cols() != cols) {
      throw DimensionError("scatter_add_rows: part " + shape_to_string(pv.shape()) + " vs " +
                           std::to_string(targets[p].size()) + " targets");
    }
    for (std::size_t i = 0; i < targets[p].size(); ++i) {
      auto src = pv.row(i);
      auto dst = out.row(targets[p][i]);
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
    rg = rg || needs(parts[p]);
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  std::vector<std::vector<std::size_t>> ts(targets.begin(), targets.end());
  return push(std::move(out), rg,
              [ps = std::move(ps), ts = std::move(ts)](Graph& g, const Tensor& dy) {
                for (std::size_t p = 0; p < ps.size(); ++p) {
                  if (!g.needs(ps[p])) continue;
                  Tensor& dp = g.grad_ref(ps[p]);
                  for (std::size_t i = 0; i < ts[p].size(); ++i) {
                    auto src = dy.row(ts[p][i]);
                    auto dst = dp.row(i);
                    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                  }
                }
              });
}

Var Graph::pick(Var x, std::span<const std::size_t> rows, std::size_t col) {
  const Tensor& xv = value(x);
  Tensor out({rows.size()});
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = xv(rows[i], col);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return push(std::move(out), needs(x),
              [x, col, idx = std::move(idx)](Graph& g, const Tensor& dy) {
                Tensor& dx = g.grad_ref(x);
                for (std::size_t i = 0; i < idx.size(); ++i) dx(idx[i], col) += dy[i];
              });
}

Var Graph::scale_rows(Var x, Var w) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  if (wv.size() != xv.rows()) {
    throw DimensionError("scale_rows: " + shape_to_string(xv.shape()) + " by " +
                         shape_to_string(wv.shape()));
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (double& v : out.row(r)) v *= wv[r];
  }
  return push(std::move(out), needs(x) || needs(w), [x, w](Graph& g, const Tensor& dy) {
    const Tensor& xv = g.value(x);
    const Tensor& wv = g.value(w);
    if (g.needs(x)) {
      Tensor& dx = g.grad_ref(x);
      for (std::size_t r = 0; r < xv.rows(); ++r) {
        auto d = dy.row(r);
        auto o = dx.row(r);
        for (std::size_t c = 0; c < d.size(); ++c) o[c] += d[c] * wv[r];
      }
    }
    if (g.needs(w)) {
      Tensor& dw = g.grad_ref(w);
      for (std::size_t r = 0; r < xv.rows(); ++r) {
        auto d = dy.row(r);
        auto xr = xv.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < d.size(); ++c) acc += d[c] * xr[c];
        dw[r] += acc;
      }
    }
  });
}

Var Graph::row(Var x, std::size_t r) {
  const std::size_t idx[1] = {r};
  return gather_rows(x, idx);
}

Var Graph::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no rows");
  const std::size_t n = value(rows[0]).cols();
  std::size_t total = 0;
  bool rg = false;
  for (Var v : rows) {
    if (value(v).cols() != n) throw DimensionError("stack_rows: ragged widths");
    total += value(v).rows();
    rg = rg || needs(v);
  }
  Tensor out({total, n});
  std::size_t at = 0;
  for (Var v : rows) {
    const Tensor& src = value(v);
    std::copy(src.data().begin(), src.data().end(), out.data().begin() + at * n);
    at += src.rows();
  }
  std::vector<Var> rs(rows.begin(), rows.end());
  return push(std::move(out), rg, [rs = std::move(rs)](Graph& g, const Tensor& dy) {
    std::size_t at = 0;
    const std::size_t n = dy.cols();
    for (Var v : rs) {
      const std::size_t m = g.value(v).rows();
      if (g.needs(v)) {
        Tensor& dv = g.grad_ref(v);
        for (std::size_t i = 0; i < m * n; ++i) dv[i] += dy[at * n + i];
      }
      at += m;
    }
  });
}

Var Graph::slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = value(x);
  if (begin + count > xv.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " +
                         shape_to_string(xv.shape()));
  }
  Tensor out({xv.rows(), count});
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto src = xv.row(r);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin),
              src.begin() + static_cast<std::ptrdiff_t>(begin + count), out.row(r).begin());
  }
  return push(std::move(out), needs(x), [x, begin](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_ref(x);
    for (std::size_t r = 0; r < dy.rows(); ++r) {
      auto src = dy.row(r);
      auto dst = dx.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[begin + c] += src[c];
    }
  });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  const std::size_t m = value(parts[0]).rows();
  std::size_t width = 0;
  bool rg = false;
  for (Var v : parts) {
    if (value(v).rows() != m) throw DimensionError("concat_cols: row counts differ");
    width += value(v).cols();
    rg = rg || needs(v);
  }
  Tensor out({m, width});
  std::size_t offset = 0;
  for (Var v : parts) {
    const Tensor& src = value(v);
    for (std::size_t r = 0; r < m; ++r) {
      auto s = src.row(r);
      std::copy(s.begin(), s.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += src.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), rg, [ps = std::move(ps)](Graph& g, const Tensor& dy) {
    std::size_t offset = 0;
    for (Var v : ps) {
      const std::size_t w = g.value(v).cols();
      if (g.needs(v)) {
        Tensor& dv = g.grad_ref(v);
        for (std::size_t r = 0; r < dy.rows(); ++r) {
          auto s = dy.row(r);
          auto d = dv.row(r);
          for (std::size_t c = 0; c < w; ++c) d[c] += s[offset + c];
        }
      }
      offset += w;
    }
  });
}

Var Graph::sum(Var x) {
  double total = 0.0;
  for (double v : value(x).data()) total += v;
  return push(Tensor::scalar(total), needs(x), [x](Graph& g, const Tensor& dy) {
    for (double& v : g.grad_ref(x).data()) v += dy[0];
  });
}

Var Graph::cross_entropy(Var logits, std::span<const int> targets, std::span<const bool> mask) {
  const double loss = nn::cross_entropy(value(logits), targets, mask);
  std::vector<int> t(targets.begin(), targets.end());
  std::vector<bool> m(mask.begin(), mask.end());
  return push(Tensor::scalar(loss), needs(logits),
              [logits, t = std::move(t), m = std::move(m)](Graph& g, const Tensor& dy) {
                auto flags = std::make_unique<bool[]>(m.size());
                std::copy(m.begin(), m.end(), flags.get());
                Tensor local =
                    cross_entropy_grad(g.value(logits), t, std::span(flags.get(), m.size()));
                Tensor& dl = g.grad_ref(logits);
                for (std::size_t i = 0; i < dl.size(); ++i) dl[i] += dy[0] * local[i];
              });
}

void Graph::backward(Var loss, double seed) {
  if (!record_) throw ConfigError("backward() on a graph built without recording");
  grad_ref(loss).fill(seed);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.shape() != node.value.shape()) continue;
    if (node.backward) {
      // Closures only touch the grads of earlier nodes, so this reference stays valid.
      node.backward(*this, node.grad);
    }
    if (node.param) accumulate(node.param->grad, node.grad);
  }
}

}  // namespace seke::nn
