#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "daml/data/image.hpp"
#include "daml/nn/param.hpp"
#include "daml/types.hpp"

namespace daml::nn {

enum class EncoderKind { Convolutional, PatchAttention };
enum class Mode { Train, Eval };

std::string_view to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(std::string_view text);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::Convolutional;
  int feature_dim = 64;
  int depth = 4;
  int patch_size = 8;   // attention only
  int width = 16;       // base channels (conv); ignored by attention, whose width is feature_dim
  int heads = 4;        // attention only
  int mlp_ratio = 2;    // attention only
  data::ImageSize image_size{256, 128};

  // Throws InvalidConfig on non-positive sizes or a patch grid that does
  // not tile the image.
  void validate() const;
  int input_width() const { return data::Image::kChannels * image_size.height * image_size.width; }
};

// Toy-scale defaults: convolutional teacher (c_T = 64), attention student (c_S = 48).
EncoderConfig default_teacher_config(data::ImageSize size);
EncoderConfig default_student_config(data::ImageSize size);

// Heterogeneity is structural: the two subspaces must differ in dimension.
void check_heterogeneous(const EncoderConfig& teacher, const EncoderConfig& student);

struct ReceptiveFieldReport {
  bool global = false;
  std::vector<int> per_layer;  // square receptive field side after each layer (conv)
  int final_size = 1;
  std::string description;
};

ReceptiveFieldReport receptive_field_check(const EncoderConfig& config);

// Image batch (one normalized row per image, see data::to_input) to one
// feature row per image. No layer is stochastic, so Train and Eval compute
// the same function; Train additionally keeps activations for backward().
class Encoder {
 public:
  virtual ~Encoder() = default;

  const EncoderConfig& config() const { return config_; }
  int feature_dim() const { return config_.feature_dim; }
  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  // Pure function of (parameters, images); keeps no state.
  Matrix infer(const Matrix& images) const;
  // Train-mode forward that caches activations for a single backward().
  Matrix forward(const Matrix& images);
  // Accumulates parameter gradients from d(loss)/d(features).
  void backward(const Matrix& grad_features);

  virtual ParamRefs parameters() = 0;
  virtual std::unique_ptr<Encoder> clone() const = 0;

  std::size_t parameter_count();

 protected:
  explicit Encoder(EncoderConfig config) : config_(std::move(config)) {}

  virtual Matrix run(const Matrix& images, bool keep_cache) = 0;
  virtual Matrix run_const(const Matrix& images) const = 0;
  virtual void run_backward(const Matrix& grad_features) = 0;

 private:
  void check_input(const Matrix& images) const;

  EncoderConfig config_;
  Mode mode_ = Mode::Eval;
  bool has_cache_ = false;
};

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config, std::uint64_t seed);

// Eval-mode feature extraction; throws ShapeMismatch on wrong input size.
Matrix extract_features(const Encoder& encoder, const Matrix& images);
Matrix extract_features(const Encoder& encoder, std::span<const data::Image> images, int batch_size = 64);

}  // namespace daml::nn
