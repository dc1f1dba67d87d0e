#include "daml/losses.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "daml/error.hpp"

namespace daml::loss {
namespace {

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix shifted(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index top = 0;
    const double max = logits.row(i).maxCoeff(&top);
    shifted.row(i) = logits.row(i).array() - max;
    // log1p over the non-max terms keeps tiny losses accurate.
    double tail = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k)
      if (k != top) tail += std::exp(shifted(i, k));
    shifted.row(i).array() -= std::log1p(tail);
  }
  return shifted;
}

}  // namespace

LossGrad triplet_loss(const Matrix& features, std::span<const int> labels, double margin) {
  const Eigen::Index n = features.rows();
  require(labels.size() == static_cast<std::size_t>(n), ErrorKind::ShapeMismatch, "one label per feature row required");

  // Pairwise Euclidean distances, computed directly for exact symmetry.
  Matrix dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = (features.row(i) - features.row(j)).norm();
  }

  LossGrad out;
  out.grad = Matrix::Zero(n, features.cols());
  for (Eigen::Index a = 0; a < n; ++a) {
    Eigen::Index pos = -1;
    Eigen::Index neg = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == a) continue;
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(a)]) {
        if (pos < 0 || dist(a, j) > dist(a, pos)) pos = j;
      } else if (neg < 0 || dist(a, j) < dist(a, neg)) {
        neg = j;
      }
    }
    if (pos < 0 || neg < 0)
      raise(ErrorKind::DegenerateBatch, "anchor " + std::to_string(a) + " lacks a positive or a negative");

    const double hinge = margin + dist(a, pos) - dist(a, neg);
    if (hinge <= 0.0) continue;
    out.value += hinge;
    if (dist(a, pos) > 0.0) {
      const RowVector g = (features.row(a) - features.row(pos)) / dist(a, pos);
      out.grad.row(a) += g;
      out.grad.row(pos) -= g;
    }
    if (dist(a, neg) > 0.0) {
      const RowVector g = (features.row(a) - features.row(neg)) / dist(a, neg);
      out.grad.row(a) -= g;
      out.grad.row(neg) += g;
    }
  }
  out.value /= static_cast<double>(n);
  out.grad /= static_cast<double>(n);
  return out;
}

LossGrad cross_entropy(const Matrix& logits, std::span<const int> labels) {
  const Eigen::Index n = logits.rows();
  require(labels.size() == static_cast<std::size_t>(n), ErrorKind::ShapeMismatch, "one label per logit row required");
  const Matrix log_prob = log_softmax_rows(logits);
  LossGrad out;
  out.grad = log_prob.array().exp();
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < logits.cols(), ErrorKind::LabelOutOfRange,
            "label " + std::to_string(y) + " outside [0, " + std::to_string(logits.cols()) + ")");
    out.value -= log_prob(i, y);
    out.grad(i, y) -= 1.0;
  }
  out.value /= static_cast<double>(n);
  out.grad /= static_cast<double>(n);
  return out;
}

LossGrad kl_divergence(const Matrix& reference_logits, const Matrix& learner_logits, double temperature) {
  require(reference_logits.cols() == learner_logits.cols(), ErrorKind::ClassCountMismatch,
          "distillation over " + std::to_string(reference_logits.cols()) + " vs " +
              std::to_string(learner_logits.cols()) + " classes");
  require(reference_logits.rows() == learner_logits.rows(), ErrorKind::ShapeMismatch, "batch sizes differ");
  require(temperature > 0.0, ErrorKind::InvalidConfig, "temperature must be positive");
  const double n = static_cast<double>(reference_logits.rows());

  const Matrix log_p = log_softmax_rows(reference_logits / temperature);
  const Matrix log_q = log_softmax_rows(learner_logits / temperature);
  const Matrix p = log_p.array().exp();

  LossGrad out;
  out.value = (p.array() * (log_p - log_q).array()).sum() / n;
  out.grad = (Matrix(log_q.array().exp()) - p) / (temperature * n);
  return out;
}

double total_loss(const LossReport& r, const LossWeights& w) {
  return (r.teacher_target_id + r.tri_teacher_target) + (r.student_target_id + r.tri_student_target) +
         w.lambda1 * (r.teacher_source_id + r.tri_teacher_source) + w.lambda2 * r.distill_id +
         w.lambda3 * r.distill_dom;
}

}  // namespace daml::loss
