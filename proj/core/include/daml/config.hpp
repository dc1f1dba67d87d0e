#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "daml/data/augment.hpp"
#include "daml/data/synthetic.hpp"
#include "daml/losses.hpp"
#include "daml/nn/encoder.hpp"

namespace daml {

struct HyperParams {
  double alpha = 0.5;
  double lambda1 = 0.1;
  double lambda2 = 0.7;
  double lambda3 = 1.2;
  double rho = 1.2;
  double eps = 0.6;
  int min_samples = 4;
  int batch_ids = 16;        // P
  int batch_instances = 4;   // K images per identity
  double kl_temperature = 1.0;
  bool joint_prenormalize = false;

  void validate() const;
  loss::LossWeights loss_weights() const { return {lambda1, lambda2, lambda3}; }
};

struct TrainConfig {
  std::uint64_t seed = 0;
  int pretrain_epochs = 15;
  int adapt_epochs = 10;
  double lr_teacher_pretrain = 1e-2;
  double lr_student_pretrain = 8e-3;
  double lr_teacher_adapt = 5e-3;
  double lr_student_adapt = 4e-3;
  std::vector<int> teacher_milestones{40, 70};
  double lr_decay = 0.1;
  double momentum = 0.9;
  double weight_decay_teacher = 5e-4;
  double weight_decay_student = 1e-4;
  int pretrain_steps_per_epoch = 0;  // 0: ceil(samples / (P * K))
  int steps_per_epoch = 0;           // adaptation; 0: ceil(clustered samples / (P * K))
  int eval_every = 1;

  data::AugmentPolicy train_augment;
  data::AugmentPolicy cluster_augment{0.0, 0.5, false};
  int cluster_repeat = 0;

  bool use_source_batches = true;
  bool smooth_update = true;
  double smooth_temperature = 1.0;
  bool normalize_init_centers = true;
  bool include_distractors = false;

  nn::EncoderConfig teacher;
  nn::EncoderConfig student;

  void validate() const;
};

enum class ValueType { Integer, Real, Boolean, Text, IntegerList };

struct ConfigKey {
  std::string_view name;
  ValueType type;
  std::string_view default_value;
  std::string_view help;
};

const std::vector<ConfigKey>& config_schema();

// Flat key = value document. Every key must be declared in the schema;
// unset keys resolve to their documented defaults. Later assignments
// override earlier ones, so file values lose to command-line overrides when
// the overrides are applied last.
class RunConfig {
 public:
  RunConfig();

  // '#' starts a comment; blank lines are ignored. Throws ConfigError on
  // unknown keys or unparsable values, IoError when the file is unreadable.
  void merge_file(const std::filesystem::path& path);
  void merge_text(std::string_view text, std::string_view origin = "<text>");
  // "key=value"
  void set(std::string_view assignment);
  void set(std::string_view key, std::string_view value);

  const std::string& get(std::string_view key) const;
  long long get_int(std::string_view key) const;
  double get_real(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<int> get_int_list(std::string_view key) const;

  // Full resolved document, one key per line in schema order.
  std::string serialize() const;
  void write(const std::filesystem::path& path) const;

  data::ImageSize image_size() const;
  HyperParams hyper_params() const;
  TrainConfig train_config() const;
  data::SyntheticConfig synthetic_config() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace daml
