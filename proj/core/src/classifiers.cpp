#include "daml/classifiers.hpp"

#include <string>

#include "daml/error.hpp"
#include "daml/nn/layers.hpp"

namespace daml::cls {

Matrix predict(const Matrix& features, const Matrix& weights) {
  require(features.cols() == weights.cols(), ErrorKind::ShapeMismatch,
          "feature width " + std::to_string(features.cols()) + " does not match classifier width " +
              std::to_string(weights.cols()));
  return features * weights.transpose();
}

Matrix concat_blocks(const Matrix& source_block, const Matrix& target_block) {
  require(source_block.cols() == target_block.cols(), ErrorKind::ShapeMismatch, "classifier blocks differ in width");
  Matrix out(source_block.rows() + target_block.rows(), source_block.cols());
  out << source_block, target_block;
  return out;
}

SmoothUpdate smooth_update(const Matrix& old_weights, const Matrix& old_momentum, const Matrix& centers,
                           double temperature) {
  if (old_weights.rows() == 0) raise(ErrorKind::NoPreviousClassifier, "no previous target classifier to update");
  require(temperature > 0.0, ErrorKind::InvalidConfig, "temperature must be positive");
  require(old_momentum.rows() == old_weights.rows() && old_momentum.cols() == old_weights.cols(),
          ErrorKind::ShapeMismatch, "momentum does not mirror the weights");
  require(centers.cols() == old_weights.cols(), ErrorKind::ShapeMismatch, "centre width does not match classifier");
  // Row by row, so each new row depends only on its own centre (exact
  // equivariance under reordering of the centres).
  SmoothUpdate out;
  out.coefficients.resize(centers.rows(), old_weights.rows());
  out.weights.resize(centers.rows(), old_weights.cols());
  out.momentum.resize(centers.rows(), old_weights.cols());
  for (Eigen::Index i = 0; i < centers.rows(); ++i) {
    const RowVector logits = (centers.row(i) * old_weights.transpose()) / temperature;
    const RowVector a = nn::softmax_rows(logits);
    out.coefficients.row(i) = a;
    out.weights.row(i) = a * old_weights;
    out.momentum.row(i) = a * old_momentum;
  }
  return out;
}

ClassifierState make_classifier_state(int num_source_classes, int teacher_dim, int student_dim, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 0.001);
  Matrix source(num_source_classes, teacher_dim);
  for (Eigen::Index i = 0; i < source.size(); ++i) source.data()[i] = dist(rng);
  ClassifierState state;
  state.source_teacher = nn::Param("classifier.source_teacher", source);
  state.target_teacher = nn::Param("classifier.target_teacher", Matrix(0, teacher_dim));
  state.target_student = nn::Param("classifier.target_student", Matrix(0, student_dim));
  return state;
}

namespace {

Matrix row_normalized(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    require(norm > 0.0, ErrorKind::ZeroVector, "zero cluster centre");
    out.row(i) /= norm;
  }
  return out;
}

}  // namespace

void initialize_target_blocks(ClassifierState& state, const Matrix& centers_teacher, const Matrix& centers_student,
                              bool unit_norm) {
  require(centers_teacher.rows() > 0, ErrorKind::InvalidState, "no clusters to initialize the target classifier");
  require(centers_teacher.rows() == centers_student.rows(), ErrorKind::ShapeMismatch, "centre counts differ");
  require(centers_teacher.cols() == state.target_teacher.value.cols() &&
              centers_student.cols() == state.target_student.value.cols(),
          ErrorKind::ShapeMismatch, "centre width does not match classifier width");
  state.previous_target_classes = state.num_target_classes;
  state.target_teacher.reset(unit_norm ? row_normalized(centers_teacher) : centers_teacher,
                             Matrix::Zero(centers_teacher.rows(), centers_teacher.cols()));
  state.target_student.reset(unit_norm ? row_normalized(centers_student) : centers_student,
                             Matrix::Zero(centers_student.rows(), centers_student.cols()));
  state.num_target_classes = static_cast<int>(centers_teacher.rows());
}

void smooth_update_target_blocks(ClassifierState& state, const Matrix& centers_teacher,
                                 const Matrix& centers_student, double temperature) {
  require(centers_teacher.rows() > 0, ErrorKind::InvalidState, "no clusters to update the target classifier");
  require(centers_teacher.rows() == centers_student.rows(), ErrorKind::ShapeMismatch, "centre counts differ");
  SmoothUpdate teacher = smooth_update(state.target_teacher.value, state.target_teacher.momentum, centers_teacher, temperature);
  SmoothUpdate student = smooth_update(state.target_student.value, state.target_student.momentum, centers_student, temperature);
  state.previous_target_classes = state.num_target_classes;
  state.target_teacher.reset(std::move(teacher.weights), std::move(teacher.momentum));
  state.target_student.reset(std::move(student.weights), std::move(student.momentum));
  state.num_target_classes = static_cast<int>(centers_teacher.rows());
}

}  // namespace daml::cls
