#pragma once

#include <cmath>
#include <string>

#include "eqa/nn/param_store.hpp"

namespace eqa::nn {

template <typename Scalar>
struct LossGrad {
  Scalar loss = 0;
  Vector<Scalar> grad;
};

template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar mx = logits.maxCoeff();
  Vector<Scalar> p = (logits.array() - mx).exp().matrix();
  p /= p.sum();
  return p;
}

template <typename Derived>
Eigen::Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

// loss = -log softmax(logits)[label]; grad = softmax - onehot(label).
template <typename Derived>
LossGrad<typename Derived::Scalar> softmax_cross_entropy(const Eigen::MatrixBase<Derived>& logits, Eigen::Index label) {
  using Scalar = typename Derived::Scalar;
  if (label < 0 || label >= logits.size())
    throw ShapeError("softmax_cross_entropy: label " + std::to_string(label) + " out of range");
  const Scalar mx = logits.maxCoeff();
  const Vector<Scalar> shifted = logits.array() - mx;
  const Scalar log_z = std::log(shifted.array().exp().sum());
  LossGrad<Scalar> out;
  out.loss = log_z - shifted(label);
  out.grad = (shifted.array() - log_z).exp().matrix();
  out.grad(label) -= Scalar(1);
  return out;
}

// loss = 1 - cos(a, b), gradient with respect to `a` only (b is a constant).
template <typename DerivedA, typename DerivedB>
LossGrad<typename DerivedA::Scalar> cosine_loss(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw ShapeError("cosine_loss: size mismatch");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) throw NumericError("cosine_loss: zero-norm input");
  const Scalar cos = a.dot(b) / (na * nb);
  LossGrad<Scalar> out;
  out.loss = Scalar(1) - cos;
  out.grad = -(b / (na * nb) - (cos / (na * na)) * a);
  return out;
}

}  // namespace eqa::nn
