#pragma once

#include <span>

#include "daml/types.hpp"

namespace daml::loss {

// Scalar loss with its gradient w.r.t. the differentiable input.
struct LossGrad {
  double value = 0.0;
  Matrix grad;
};

// Batch-hard triplet: mean over anchors of max(margin + d_p - d_n, 0) with
// d_p the farthest same-label and d_n the nearest other-label Euclidean
// distance. Throws DegenerateBatch if an anchor lacks either.
LossGrad triplet_loss(const Matrix& features, std::span<const int> labels, double margin);

// Mean negative log-softmax of the labelled column.
LossGrad cross_entropy(const Matrix& logits, std::span<const int> labels);

// Mean over rows of KL(softmax(reference / T) || softmax(learner / T)).
// The reference is a constant: the gradient is w.r.t. the learner logits only.
LossGrad kl_divergence(const Matrix& reference_logits, const Matrix& learner_logits, double temperature = 1.0);

// Target-domain identity distillation: teacher predictions are the
// reference, gradient flows into the student logits.
inline LossGrad kl_distill_id(const Matrix& teacher_logits, const Matrix& student_logits, double temperature = 1.0) {
  return kl_divergence(teacher_logits, student_logits, temperature);
}

// Source-domain distillation in the opposite direction: student predictions
// are the reference, gradient flows into the teacher logits.
inline LossGrad kl_distill_dom(const Matrix& student_logits, const Matrix& teacher_logits, double temperature = 1.0) {
  return kl_divergence(student_logits, teacher_logits, temperature);
}

struct LossWeights {
  double lambda1 = 0.1;  // teacher source identity + source triplet
  double lambda2 = 0.7;  // identity distillation
  double lambda3 = 1.2;  // domain distillation
};

struct LossReport {
  double tri_teacher_target = 0.0;  // L_tri(t^T)
  double tri_student_target = 0.0;  // L_tri(t^S)
  double tri_teacher_source = 0.0;  // L_tri(s^T)
  double teacher_target_id = 0.0;   // L_Ttid
  double student_target_id = 0.0;   // L_Stid
  double teacher_source_id = 0.0;   // L_Tsid
  double distill_id = 0.0;          // L_id
  double distill_dom = 0.0;         // L_dom
  double total = 0.0;
};

double total_loss(const LossReport& report, const LossWeights& weights);

}  // namespace daml::loss
