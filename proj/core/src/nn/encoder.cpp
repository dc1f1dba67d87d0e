#include "daml/nn/encoder.hpp"

#include <algorithm>

#include "daml/error.hpp"
#include "daml/nn/attention_encoder.hpp"
#include "daml/nn/conv_encoder.hpp"

namespace daml::nn {

std::string_view to_string(EncoderKind kind) {
  return kind == EncoderKind::Convolutional ? "convolutional" : "patch_attention";
}

EncoderKind encoder_kind_from_string(std::string_view text) {
  if (text == "convolutional") return EncoderKind::Convolutional;
  if (text == "patch_attention") return EncoderKind::PatchAttention;
  raise(ErrorKind::InvalidConfig, "unknown encoder kind '" + std::string(text) + "'");
}

void EncoderConfig::validate() const {
  require(feature_dim > 0, ErrorKind::InvalidConfig, "feature_dim must be positive");
  require(depth >= 1, ErrorKind::InvalidConfig, "depth must be >= 1");
  require(image_size.height > 0 && image_size.width > 0, ErrorKind::InvalidConfig, "image size must be positive");
  if (kind == EncoderKind::Convolutional) {
    require(width > 0, ErrorKind::InvalidConfig, "width must be positive");
  } else {
    require(patch_size > 0 && image_size.height % patch_size == 0 && image_size.width % patch_size == 0,
            ErrorKind::InvalidConfig, "patch size must tile the image");
    require(heads > 0 && feature_dim % heads == 0, ErrorKind::InvalidConfig, "feature_dim must divide into heads");
    require(mlp_ratio > 0, ErrorKind::InvalidConfig, "mlp_ratio must be positive");
  }
}

EncoderConfig default_teacher_config(data::ImageSize size) {
  EncoderConfig cfg;
  cfg.kind = EncoderKind::Convolutional;
  cfg.feature_dim = 64;
  cfg.depth = 4;
  cfg.width = 16;
  cfg.image_size = size;
  return cfg;
}

EncoderConfig default_student_config(data::ImageSize size) {
  EncoderConfig cfg;
  cfg.kind = EncoderKind::PatchAttention;
  cfg.feature_dim = 48;
  cfg.depth = 4;
  cfg.patch_size = 8;
  cfg.heads = 4;
  cfg.mlp_ratio = 2;
  cfg.image_size = size;
  return cfg;
}

void check_heterogeneous(const EncoderConfig& teacher, const EncoderConfig& student) {
  require(teacher.feature_dim != student.feature_dim, ErrorKind::InvalidConfig,
          "teacher and student feature dimensions must differ");
}

ReceptiveFieldReport receptive_field_check(const EncoderConfig& config) {
  ReceptiveFieldReport report;
  if (config.kind == EncoderKind::PatchAttention) {
    report.global = config.depth >= 1;
    report.final_size = report.global ? std::max(config.image_size.height, config.image_size.width)
                                      : config.patch_size;
    report.description = report.global ? "global after first attention block"
                                        : "patch-local (" + std::to_string(config.patch_size) + "px)";
    return report;
  }
  // Conv stages: 3x3 kernels, stride 1 for the first stage, 2 afterwards.
  int field = 1;
  int jump = 1;
  for (int i = 0; i < config.depth; ++i) {
    field += 2 * jump;
    jump *= i == 0 ? 1 : 2;
    report.per_layer.push_back(field);
  }
  report.final_size = field;
  report.global = field >= std::max(config.image_size.height, config.image_size.width);
  report.description = std::to_string(field) + "x" + std::to_string(field);
  return report;
}

void Encoder::check_input(const Matrix& images) const {
  require(images.cols() == config_.input_width(), ErrorKind::ShapeMismatch,
          "expected " + std::to_string(config_.input_width()) + " input values per image, got " +
              std::to_string(images.cols()));
}

Matrix Encoder::infer(const Matrix& images) const {
  check_input(images);
  return run_const(images);
}

Matrix Encoder::forward(const Matrix& images) {
  check_input(images);
  has_cache_ = true;
  return run(images, true);
}

void Encoder::backward(const Matrix& grad_features) {
  require(has_cache_, ErrorKind::InvalidState, "backward() without a preceding forward()");
  require(grad_features.cols() == feature_dim(), ErrorKind::ShapeMismatch, "gradient width mismatch");
  run_backward(grad_features);
  has_cache_ = false;
}

std::size_t Encoder::parameter_count() {
  std::size_t total = 0;
  for (const Param* p : parameters()) total += static_cast<std::size_t>(p->size());
  return total;
}

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  if (config.kind == EncoderKind::Convolutional) return std::make_unique<ConvEncoder>(config, rng);
  return std::make_unique<AttentionEncoder>(config, rng);
}

Matrix extract_features(const Encoder& encoder, const Matrix& images) { return encoder.infer(images); }

Matrix extract_features(const Encoder& encoder, std::span<const data::Image> images, int batch_size) {
  Matrix out(static_cast<Eigen::Index>(images.size()), encoder.feature_dim());
  for (std::size_t begin = 0; begin < images.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t count = std::min(images.size() - begin, static_cast<std::size_t>(batch_size));
    for (const auto& img : images.subspan(begin, count))
      require(img.size() == encoder.config().image_size, ErrorKind::ShapeMismatch, "image size mismatch");
    out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) =
        encoder.infer(data::to_input(images.subspan(begin, count)));
  }
  return out;
}

}  // namespace daml::nn
