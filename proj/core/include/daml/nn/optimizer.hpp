#pragma once

#include <vector>

#include "daml/nn/param.hpp"

namespace daml::nn {

// SGD with heavy-ball momentum and L2 weight decay folded into the gradient:
//   v <- momentum * v + (g + decay * w);  w <- w - lr * v
class Sgd {
 public:
  Sgd(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(const ParamRefs& params, double learning_rate) const;

  double momentum() const { return momentum_; }
  double weight_decay() const { return weight_decay_; }

 private:
  double momentum_;
  double weight_decay_;
};

// Multiplies the base rate by `factor` at each milestone epoch reached.
double step_decay_lr(double base, int epoch, const std::vector<int>& milestones, double factor);

// Half-cosine from base (epoch 0) towards 0 (epoch == total_epochs).
double cosine_lr(double base, int epoch, int total_epochs);

}  // namespace daml::nn
