#pragma once

#include <string>
#include <vector>

#include "daml/types.hpp"

namespace daml::nn {

// Trainable tensor with its gradient accumulator and SGD momentum buffer.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix momentum;

  Param() = default;
  Param(std::string param_name, Matrix init)
      : name(std::move(param_name)),
        value(std::move(init)),
        grad(Matrix::Zero(value.rows(), value.cols())),
        momentum(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  // Replaces the value and momentum, e.g. after the class count changed.
  void reset(Matrix new_value, Matrix new_momentum) {
    value = std::move(new_value);
    momentum = std::move(new_momentum);
    grad = Matrix::Zero(value.rows(), value.cols());
  }
  Eigen::Index size() const { return value.size(); }
};

using ParamRefs = std::vector<Param*>;

inline void zero_grads(const ParamRefs& params) {
  for (Param* p : params) p->zero_grad();
}

}  // namespace daml::nn
