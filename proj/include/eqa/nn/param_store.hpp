#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eqa/errors.hpp"
#include "eqa/rng.hpp"

namespace eqa::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;
using ParamId = std::size_t;

// One named parameter with its gradient accumulator and Adam moments.
template <typename Scalar>
struct Param {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  Matrix<Scalar> m;
  Matrix<Scalar> v;
  std::int64_t step = 0;
};

// Insertion-ordered collection of parameters. Layers refer to entries by
// ParamId so that copying a store copies a whole model.
template <typename Scalar>
class ParamStore {
 public:
  ParamId add(const std::string& name, Index rows, Index cols) {
    if (rows <= 0 || cols <= 0) throw ShapeError("parameter '" + name + "' needs a positive shape");
    if (!index_.emplace(name, params_.size()).second) throw ShapeError("duplicate parameter name '" + name + "'");
    Param<Scalar> p;
    p.name = name;
    p.value = Matrix<Scalar>::Zero(rows, cols);
    p.grad = Matrix<Scalar>::Zero(rows, cols);
    p.m = Matrix<Scalar>::Zero(rows, cols);
    p.v = Matrix<Scalar>::Zero(rows, cols);
    params_.push_back(std::move(p));
    return params_.size() - 1;
  }

  Param<Scalar>& operator[](ParamId id) { return params_[id]; }
  const Param<Scalar>& operator[](ParamId id) const { return params_[id]; }

  Matrix<Scalar>& value(ParamId id) { return params_[id].value; }
  const Matrix<Scalar>& value(ParamId id) const { return params_[id].value; }
  Matrix<Scalar>& grad(ParamId id) { return params_[id].grad; }

  ParamId find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ShapeError("no parameter named '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  void reset_optimizer() {
    for (auto& p : params_) {
      p.m.setZero();
      p.v.setZero();
      p.step = 0;
    }
  }

  Index scalar_count() const {
    Index n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  Scalar grad_norm() const {
    Scalar s = 0;
    for (const auto& p : params_) s += p.grad.squaredNorm();
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (const auto& p : params_)
      if (!p.value.allFinite()) return false;
    return true;
  }

 private:
  std::vector<Param<Scalar>> params_;
  std::map<std::string, ParamId> index_;
};

template <typename Scalar>
void init_uniform(ParamStore<Scalar>& store, ParamId id, Scalar scale, Rng& rng) {
  auto& v = store.value(id);
  for (Index j = 0; j < v.cols(); ++j)
    for (Index i = 0; i < v.rows(); ++i) v(i, j) = static_cast<Scalar>(rng.uniform(-1.0, 1.0)) * scale;
}

}  // namespace eqa::nn
