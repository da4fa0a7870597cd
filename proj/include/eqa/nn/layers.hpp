#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eqa/nn/param_store.hpp"

namespace eqa::nn {

// Sequences are stored column-wise: a T-step sequence of d-vectors is a d x T
// matrix. All backward functions accumulate into ParamStore gradients.

// ---------------------------------------------------------------- linear

struct LinearLayer {
  ParamId weight = 0;  // out x in
  ParamId bias = 0;    // out x 1
  Index in = 0;
  Index out = 0;
};

template <typename Scalar>
LinearLayer add_linear(ParamStore<Scalar>& store, const std::string& name, Index in, Index out) {
  return {store.add(name + ".weight", out, in), store.add(name + ".bias", out, 1), in, out};
}

template <typename Scalar, typename Derived>
Matrix<Scalar> linear(const ParamStore<Scalar>& store, const LinearLayer& layer,
                      const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != layer.in)
    throw ShapeError("linear: expected input of size " + std::to_string(layer.in) + ", got " +
                     std::to_string(x.rows()));
  Matrix<Scalar> y = store.value(layer.weight) * x;
  y.colwise() += store.value(layer.bias).col(0);
  return y;
}

// Returns dL/dx.
template <typename Scalar, typename DerivedX, typename DerivedY>
Matrix<Scalar> linear_backward(ParamStore<Scalar>& store, const LinearLayer& layer,
                               const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& dy) {
  if (dy.rows() != layer.out || dy.cols() != x.cols()) throw ShapeError("linear_backward: gradient shape mismatch");
  store.grad(layer.weight).noalias() += dy * x.transpose();
  store.grad(layer.bias).col(0) += dy.rowwise().sum();
  return store.value(layer.weight).transpose() * dy;
}

// ---------------------------------------------------------------- embedding

struct EmbeddingLayer {
  ParamId table = 0;  // vocab x dim, one row per token
  Index vocab = 0;
  Index dim = 0;
};

template <typename Scalar>
EmbeddingLayer add_embedding(ParamStore<Scalar>& store, const std::string& name, Index vocab, Index dim) {
  return {store.add(name + ".table", vocab, dim), vocab, dim};
}

inline void check_token(const EmbeddingLayer& layer, int id) {
  if (id < 0 || id >= layer.vocab)
    throw ShapeError("embedding: index " + std::to_string(id) + " out of range for vocabulary of " +
                     std::to_string(layer.vocab));
}

template <typename Scalar>
Matrix<Scalar> embedding(const ParamStore<Scalar>& store, const EmbeddingLayer& layer, std::span<const int> ids) {
  Matrix<Scalar> out(layer.dim, static_cast<Index>(ids.size()));
  const auto& table = store.value(layer.table);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    check_token(layer, ids[t]);
    out.col(static_cast<Index>(t)) = table.row(ids[t]).transpose();
  }
  return out;
}

template <typename Scalar, typename Derived>
void embedding_backward(ParamStore<Scalar>& store, const EmbeddingLayer& layer, std::span<const int> ids,
                        const Eigen::MatrixBase<Derived>& dy) {
  auto& grad = store.grad(layer.table);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    check_token(layer, ids[t]);
    grad.row(ids[t]) += dy.col(static_cast<Index>(t)).transpose();
  }
}

// ---------------------------------------------------------------- LSTM

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

// Gate rows are ordered input, forget, candidate, output. The weight matrix is
// [W_x | W_h] of shape 4H x (I + H).
struct LstmLayer {
  ParamId weight = 0;
  ParamId bias = 0;
  Index input = 0;
  Index hidden = 0;
};

struct LstmStack {
  std::vector<LstmLayer> layers;

  Index input() const { return layers.front().input; }
  Index hidden() const { return layers.back().hidden; }
  std::size_t depth() const { return layers.size(); }
};

template <typename Scalar>
LstmStack add_lstm(ParamStore<Scalar>& store, const std::string& name, Index input, Index hidden, int n_layers) {
  LstmStack stack;
  Index in = input;
  for (int l = 0; l < n_layers; ++l) {
    const std::string prefix = name + ".l" + std::to_string(l);
    stack.layers.push_back(
        {store.add(prefix + ".weight", 4 * hidden, in + hidden), store.add(prefix + ".bias", 4 * hidden, 1), in, hidden});
    in = hidden;
  }
  return stack;
}

template <typename Scalar>
struct LstmState {
  std::vector<Vector<Scalar>> h;
  std::vector<Vector<Scalar>> c;

  static LstmState zeros(const LstmStack& stack) {
    LstmState s;
    for (const auto& l : stack.layers) {
      s.h.push_back(Vector<Scalar>::Zero(l.hidden));
      s.c.push_back(Vector<Scalar>::Zero(l.hidden));
    }
    return s;
  }
  const Vector<Scalar>& top() const { return h.back(); }
};

namespace detail {

// In-place gate nonlinearities on a 4H pre-activation vector or matrix.
template <typename Derived>
void activate_gates(Eigen::MatrixBase<Derived>& z, Index hidden) {
  using Scalar = typename Derived::Scalar;
  for (Index j = 0; j < z.cols(); ++j) {
    for (Index i = 0; i < hidden; ++i) {
      z(i, j) = sigmoid<Scalar>(z(i, j));
      z(hidden + i, j) = sigmoid<Scalar>(z(hidden + i, j));
      z(2 * hidden + i, j) = std::tanh(z(2 * hidden + i, j));
      z(3 * hidden + i, j) = sigmoid<Scalar>(z(3 * hidden + i, j));
    }
  }
}

}  // namespace detail

// One LSTM step. Returns (h_t, c_t).
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> lstm_cell(const ParamStore<Scalar>& store, const LstmLayer& layer,
                                                    const Vector<Scalar>& x, const Vector<Scalar>& h_prev,
                                                    const Vector<Scalar>& c_prev) {
  if (x.size() != layer.input || h_prev.size() != layer.hidden || c_prev.size() != layer.hidden)
    throw ShapeError("lstm_cell: input/state size mismatch");
  const auto& w = store.value(layer.weight);
  const Index hdim = layer.hidden;
  Vector<Scalar> z = w.leftCols(layer.input) * x;
  z += store.value(layer.bias).col(0);
  z.noalias() += w.rightCols(hdim) * h_prev;
  detail::activate_gates(z, hdim);
  Vector<Scalar> c = z.segment(hdim, hdim).cwiseProduct(c_prev) + z.head(hdim).cwiseProduct(z.segment(2 * hdim, hdim));
  Vector<Scalar> h = z.tail(hdim).cwiseProduct(c.array().tanh().matrix());
  return {std::move(h), std::move(c)};
}

// Advances every layer of the stack by one step; layer l feeds layer l+1.
template <typename Scalar>
void lstm_step(const ParamStore<Scalar>& store, const LstmStack& stack, const Vector<Scalar>& x,
               LstmState<Scalar>& state) {
  Vector<Scalar> in = x;
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    auto [h, c] = lstm_cell(store, stack.layers[l], in, state.h[l], state.c[l]);
    state.h[l] = std::move(h);
    state.c[l] = std::move(c);
    in = state.h[l];
  }
}

template <typename Scalar>
struct LstmLayerTrace {
  Matrix<Scalar> input;   // I x T
  Matrix<Scalar> gates;   // 4H x T, post-activation
  Matrix<Scalar> c;       // H x T
  Matrix<Scalar> tanh_c;  // H x T
  Matrix<Scalar> h;       // H x T
};

template <typename Scalar>
struct LstmTrace {
  std::vector<LstmLayerTrace<Scalar>> layers;
  const Matrix<Scalar>& top_h() const { return layers.back().h; }
  Index length() const { return layers.front().input.cols(); }
};

// Full-sequence forward from the zero state, processed layer by layer.
template <typename Scalar>
LstmTrace<Scalar> lstm_seq(const ParamStore<Scalar>& store, const LstmStack& stack, const Matrix<Scalar>& x) {
  if (x.rows() != stack.input()) throw ShapeError("lstm_seq: input size mismatch");
  LstmTrace<Scalar> trace;
  const Index steps = x.cols();
  Matrix<Scalar> in = x;
  for (const auto& layer : stack.layers) {
    const Index hdim = layer.hidden;
    const auto& w = store.value(layer.weight);
    LstmLayerTrace<Scalar> lt;
    lt.input = std::move(in);
    lt.gates = w.leftCols(layer.input) * lt.input;
    lt.gates.colwise() += store.value(layer.bias).col(0);
    lt.c.resize(hdim, steps);
    lt.tanh_c.resize(hdim, steps);
    lt.h.resize(hdim, steps);
    Vector<Scalar> h = Vector<Scalar>::Zero(hdim);
    Vector<Scalar> c = Vector<Scalar>::Zero(hdim);
    for (Index t = 0; t < steps; ++t) {
      auto z = lt.gates.col(t);
      z.noalias() += w.rightCols(hdim) * h;
      detail::activate_gates(z, hdim);
      c = z.segment(hdim, hdim).cwiseProduct(c) + z.head(hdim).cwiseProduct(z.segment(2 * hdim, hdim));
      lt.c.col(t) = c;
      lt.tanh_c.col(t) = c.array().tanh().matrix();
      h = z.tail(hdim).cwiseProduct(lt.tanh_c.col(t));
      lt.h.col(t) = h;
    }
    in = lt.h;
    trace.layers.push_back(std::move(lt));
  }
  return trace;
}

// Backpropagation through time. `dh_top` is dL/dh of the top layer at every
// step (H x T). Returns dL/dx (I x T).
template <typename Scalar>
Matrix<Scalar> lstm_seq_backward(ParamStore<Scalar>& store, const LstmStack& stack, const LstmTrace<Scalar>& trace,
                                 const Matrix<Scalar>& dh_top) {
  const Index steps = trace.length();
  if (dh_top.rows() != stack.hidden() || dh_top.cols() != steps)
    throw ShapeError("lstm_seq_backward: gradient shape mismatch");
  Matrix<Scalar> dh_in = dh_top;
  for (std::size_t li = stack.layers.size(); li-- > 0;) {
    const LstmLayer& layer = stack.layers[li];
    const LstmLayerTrace<Scalar>& lt = trace.layers[li];
    const Index hdim = layer.hidden;
    const auto& w = store.value(layer.weight);
    Matrix<Scalar> dgates(4 * hdim, steps);
    Vector<Scalar> dh_next = Vector<Scalar>::Zero(hdim);
    Vector<Scalar> dc_next = Vector<Scalar>::Zero(hdim);
    Vector<Scalar> dh(hdim), dc(hdim);
    for (Index t = steps; t-- > 0;) {
      const auto g = lt.gates.col(t);
      const auto ig = g.head(hdim).array();
      const auto fg = g.segment(hdim, hdim).array();
      const auto cg = g.segment(2 * hdim, hdim).array();
      const auto og = g.tail(hdim).array();
      const auto tc = lt.tanh_c.col(t).array();
      dh = dh_in.col(t) + dh_next;
      dc = dc_next.array() + dh.array() * og * (Scalar(1) - tc * tc);
      auto dz = dgates.col(t);
      if (t > 0) {
        dz.segment(hdim, hdim) = (dc.array() * lt.c.col(t - 1).array() * fg * (Scalar(1) - fg)).matrix();
      } else {
        dz.segment(hdim, hdim).setZero();
      }
      dz.head(hdim) = (dc.array() * cg * ig * (Scalar(1) - ig)).matrix();
      dz.segment(2 * hdim, hdim) = (dc.array() * ig * (Scalar(1) - cg * cg)).matrix();
      dz.tail(hdim) = (dh.array() * tc * og * (Scalar(1) - og)).matrix();
      dh_next.noalias() = w.rightCols(hdim).transpose() * dz;
      dc_next = (dc.array() * fg).matrix();
    }
    auto& gw = store.grad(layer.weight);
    gw.leftCols(layer.input).noalias() += dgates * lt.input.transpose();
    if (steps > 1)
      gw.rightCols(hdim).noalias() += dgates.rightCols(steps - 1) * lt.h.leftCols(steps - 1).transpose();
    store.grad(layer.bias).col(0) += dgates.rowwise().sum();
    dh_in = w.leftCols(layer.input).transpose() * dgates;
  }
  return dh_in;
}

}  // namespace eqa::nn
