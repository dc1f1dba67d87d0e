#include "daml/nn/optimizer.hpp"

#include <cmath>
#include <numbers>

namespace daml::nn {

void Sgd::step(const ParamRefs& params, double learning_rate) const {
  for (Param* p : params) {
    p->momentum = momentum_ * p->momentum + p->grad + weight_decay_ * p->value;
    p->value -= learning_rate * p->momentum;
  }
}

double step_decay_lr(double base, int epoch, const std::vector<int>& milestones, double factor) {
  double lr = base;
  for (int m : milestones)
    if (epoch >= m) lr *= factor;
  return lr;
}

double cosine_lr(double base, int epoch, int total_epochs) {
  if (total_epochs <= 0) return base;
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / total_epochs));
}

}  // namespace daml::nn
