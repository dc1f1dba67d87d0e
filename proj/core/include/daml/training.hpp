#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "daml/classifiers.hpp"
#include "daml/config.hpp"
#include "daml/data/dataset.hpp"
#include "daml/evaluation.hpp"
#include "daml/losses.hpp"
#include "daml/nn/encoder.hpp"
#include "daml/pseudo_labels.hpp"

namespace daml::train {

// Multipliers of the eight objective terms. from_hyper_params gives the
// standard objective: unit weight on both target identity/triplet pairs,
// lambda1 on the teacher's source pair, lambda2 / lambda3 on distillation.
struct TermWeights {
  double tri_teacher_target = 1.0;
  double teacher_target_id = 1.0;
  double tri_student_target = 1.0;
  double student_target_id = 1.0;
  double tri_teacher_source = 0.1;
  double teacher_source_id = 0.1;
  double distill_id = 0.7;
  double distill_dom = 1.2;

  static TermWeights from_hyper_params(const HyperParams& hp);
};

// One optimization step's inputs: network-ready image rows and labels.
// Source rows may be empty (teacher then sees target data only).
struct StepBatch {
  Matrix target_images;
  Labels target_labels;  // pseudo labels in [0, K)
  Matrix source_images;
  Labels source_labels;  // ground-truth class in [0, num_source_classes)

  bool has_source() const { return source_images.rows() > 0; }
};

nn::ParamRefs teacher_parameters(nn::Encoder& teacher, cls::ClassifierState& classifiers);
nn::ParamRefs student_parameters(nn::Encoder& student, cls::ClassifierState& classifiers);

// Zeroes and then fills the gradients of every teacher and student
// parameter for one adaptation step. The distillation references are
// constants: the identity term reaches only the student, the domain term
// only the teacher. The student never sees a source-domain gradient.
loss::LossReport compute_adapt_gradients(nn::Encoder& teacher, nn::Encoder& student, cls::ClassifierState& classifiers,
                                         const StepBatch& batch, const TermWeights& weights,
                                         double margin, double temperature);

enum class Schedule { StepDecay, Cosine, Constant };

struct PretrainOptions {
  int epochs = 15;
  double base_lr = 1e-2;
  Schedule schedule = Schedule::StepDecay;
  std::vector<int> milestones{40, 70};
  double decay = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int steps_per_epoch = 0;
  int batch_ids = 16;
  int batch_instances = 4;
  double margin = 1.2;
  data::AugmentPolicy augment;
};

double scheduled_lr(double base, Schedule schedule, int epoch, int total_epochs, const std::vector<int>& milestones,
                    double decay);

struct PretrainReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
};

// Supervised source training of one encoder with its source classifier
// (cross-entropy + batch-hard triplet on PK batches).
PretrainReport pretrain(nn::Encoder& encoder, nn::Param& source_classifier, const data::Dataset& source,
                        const PretrainOptions& options, Rng& rng);

// Top-1 accuracy of argmax(features * W^T) against the source class labels.
double source_accuracy(const nn::Encoder& encoder, const nn::Param& source_classifier, const data::Dataset& source);

struct RunState {
  int epoch = 0;  // completed adaptation epochs
  std::unique_ptr<nn::Encoder> teacher;
  std::unique_ptr<nn::Encoder> student;
  cls::ClassifierState classifiers;
  labels::PseudoLabelState pseudo_labels;
  Rng rng;

  RunState() = default;
  RunState(RunState&&) = default;
  RunState& operator=(RunState&&) = default;
  RunState clone() const;
};

RunState make_initial_state(const TrainConfig& config, int num_source_classes);

struct PretrainResult {
  RunState state;
  PretrainReport teacher;
  PretrainReport student;
};

// Fresh encoders, each trained on the labelled source set; the teacher's
// source classifier becomes the source block of the run's classifier.
PretrainResult pretrain_stage(const TrainConfig& config, const HyperParams& hp, const data::Dataset& source);

PretrainOptions teacher_pretrain_options(const TrainConfig& config, const HyperParams& hp);
PretrainOptions student_pretrain_options(const TrainConfig& config, const HyperParams& hp);

struct EpochReport {
  int epoch = 0;
  int num_clusters = 0;
  std::size_t outliers = 0;
  int steps = 0;
  bool skipped = false;
  loss::LossReport mean_losses;
};

using StepObserver = std::function<void(int epoch, int step, const loss::LossReport&)>;

// Pseudo labels from both encoders, classifier update (smooth or centre
// initialization), then steps of the full objective. Outliers are never
// sampled. Throws EpochSkipped (after advancing state.epoch) when fewer
// clusters than identities per batch were found.
EpochReport adapt_epoch(RunState& state, const data::Dataset& source, const data::Dataset& target,
                        const TrainConfig& config, const HyperParams& hp, const StepObserver& observer = {});

// Student-only retrieval on the target test split.
eval::RetrievalResult evaluate_student(const nn::Encoder& student, const data::RetrievalSplit& split,
                                       eval::DistanceMetric metric = eval::DistanceMetric::Cosine);

std::string metrics_json(const eval::RetrievalResult& result, int epoch);

// <dir>/teacher.bin + teacher.json, <dir>/student.bin + student.json,
// <dir>/state.json. Sidecars carry encoder config, epoch, schedule position,
// classifier blocks (with K and K-hat) and the latest metrics.
void save_checkpoint(const RunState& state, const TrainConfig& config, const std::filesystem::path& dir,
                     const std::optional<eval::RetrievalResult>& metrics = std::nullopt);
RunState load_checkpoint(const std::filesystem::path& dir);
// Student encoder only, for evaluation.
std::unique_ptr<nn::Encoder> load_student(const std::filesystem::path& dir);

struct RunInputs {
  data::Dataset source;
  data::Dataset target;
  data::RetrievalSplit target_eval;
};

struct Evaluation {
  int epoch = 0;
  eval::RetrievalResult result;
};

struct RunResult {
  RunState state;
  std::optional<Evaluation> direct_transfer;
  std::vector<Evaluation> evaluations;
  std::vector<EpochReport> epochs;
  std::optional<PretrainReport> teacher_pretrain;
  std::optional<PretrainReport> student_pretrain;
};

struct RunOutputs {
  std::filesystem::path dir;  // checkpoints/, train_log.csv, metrics/
};

// Adaptation epochs state.epoch .. config.adapt_epochs-1, evaluating the
// student every eval_every epochs and at the end; checkpoints at every
// epoch boundary when outputs are given.
RunResult adapt(RunState state, const TrainConfig& config, const HyperParams& hp, const RunInputs& inputs,
                const RunOutputs* outputs = nullptr);

// Pretraining followed by adaptation.
RunResult run(const TrainConfig& config, const HyperParams& hp, const RunInputs& inputs,
              const RunOutputs* outputs = nullptr);

}  // namespace daml::train
