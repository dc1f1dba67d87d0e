#pragma once

#include "daml/nn/param.hpp"
#include "daml/types.hpp"

namespace daml::cls {

// Bias-free linear classifier: logits = features * weights^T.
Matrix predict(const Matrix& features, const Matrix& weights);

// Stacks [W_s; W_t] so that one call scores source then target classes.
Matrix concat_blocks(const Matrix& source_block, const Matrix& target_block);

struct SmoothUpdate {
  Matrix weights;
  Matrix momentum;
  Matrix coefficients;  // new classes x old classes; each row is softmax(p_i)
};

// Rebuilds a target block for a new clustering: row i becomes the softmax
// (over old classes) of the old classifier's prediction on centre i, used as
// convex weights over the old rows. Momentum rows follow the same
// combination. Logits are divided by `temperature` before the softmax.
// Throws NoPreviousClassifier when the old block is empty.
SmoothUpdate smooth_update(const Matrix& old_weights, const Matrix& old_momentum, const Matrix& centers,
                           double temperature = 1.0);

// Classifier weight blocks of both networks. The source block belongs to
// the teacher only.
struct ClassifierState {
  nn::Param source_teacher;  // num_source_classes x c_T
  nn::Param target_teacher;  // K x c_T
  nn::Param target_student;  // K x c_S
  int num_target_classes = 0;    // K
  int previous_target_classes = 0;  // K-hat

  bool has_target_blocks() const { return num_target_classes > 0; }
};

ClassifierState make_classifier_state(int num_source_classes, int teacher_dim, int student_dim, Rng& rng);

// First-epoch target blocks: centre assignment, zero momentum. With
// `unit_norm`, each centre is L2-normalized first so the new rows sit on
// the same scale as trained classifier rows.
// Throws InvalidState when there are no clusters.
void initialize_target_blocks(ClassifierState& state, const Matrix& centers_teacher, const Matrix& centers_student,
                              bool unit_norm = false);

// Applies smooth_update to both target blocks with the matching subspace
// centres. The source block is untouched.
void smooth_update_target_blocks(ClassifierState& state, const Matrix& centers_teacher,
                                 const Matrix& centers_student, double temperature = 1.0);

}  // namespace daml::cls
