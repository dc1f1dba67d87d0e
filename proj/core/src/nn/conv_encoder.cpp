#include "daml/nn/conv_encoder.hpp"

#include <string>

namespace daml::nn {

ConvEncoder::ConvEncoder(const EncoderConfig& config, Rng& rng) : Encoder(config) {
  int in_channels = data::Image::kChannels;
  for (int i = 0; i < config.depth; ++i) {
    const bool last = i + 1 == config.depth;
    const int out_channels = last ? config.feature_dim : config.width * (i + 1);
    const int stride = i == 0 ? 1 : 2;
    Stage stage;
    const std::string name = "stage" + std::to_string(i);
    stage.conv = Conv2d(name + ".conv", in_channels, out_channels, 3, stride, 1, rng);
    stage.normalized = i < (config.depth + 1) / 2 && !last;
    stage.activated = !last;
    if (stage.normalized) stage.norm = InstanceNorm(name + ".in", out_channels);
    stages_.push_back(std::move(stage));
    in_channels = out_channels;
  }
}

ParamRefs ConvEncoder::parameters() {
  ParamRefs out;
  for (auto& stage : stages_) {
    stage.conv.collect(out);
    if (stage.normalized) stage.norm.collect(out);
  }
  return out;
}

RowVector ConvEncoder::forward_sample(const Matrix& image_row, SampleCache* cache) const {
  const auto size = config().image_size;
  FeatureMap x;
  x.height = size.height;
  x.width = size.width;
  x.data = Eigen::Map<const Matrix>(image_row.data(), data::Image::kChannels, size.height * size.width);
  if (cache) cache->stages.resize(stages_.size());

  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const Stage& stage = stages_[i];
    StageCache* sc = cache ? &cache->stages[i] : nullptr;
    if (sc) {
      sc->in_height = x.height;
      sc->in_width = x.width;
    }
    FeatureMap y = stage.conv.forward(x, sc ? &sc->cols : nullptr);
    if (stage.normalized) y.data = stage.norm.forward(y.data, sc ? &sc->norm : nullptr);
    if (stage.activated) {
      if (sc) sc->pre_activation = y.data;
      y.data = relu(y.data);
    }
    x = std::move(y);
  }
  if (cache) {
    cache->out_height = x.height;
    cache->out_width = x.width;
  }
  return x.data.rowwise().mean().transpose();
}

Matrix ConvEncoder::run(const Matrix& images, bool keep_cache) {
  Matrix out(images.rows(), feature_dim());
  if (keep_cache) cache_.assign(static_cast<std::size_t>(images.rows()), {});
  for (Eigen::Index n = 0; n < images.rows(); ++n) {
    const Matrix row = images.row(n);
    out.row(n) = forward_sample(row, keep_cache ? &cache_[static_cast<std::size_t>(n)] : nullptr);
  }
  return out;
}

Matrix ConvEncoder::run_const(const Matrix& images) const {
  Matrix out(images.rows(), feature_dim());
  for (Eigen::Index n = 0; n < images.rows(); ++n) {
    const Matrix row = images.row(n);
    out.row(n) = forward_sample(row, nullptr);
  }
  return out;
}

void ConvEncoder::run_backward(const Matrix& grad_features) {
  for (Eigen::Index n = 0; n < grad_features.rows(); ++n) {
    const SampleCache& cache = cache_[static_cast<std::size_t>(n)];
    const int pixels = cache.out_height * cache.out_width;
    FeatureMap dy;
    dy.height = cache.out_height;
    dy.width = cache.out_width;
    dy.data = (grad_features.row(n).transpose() / static_cast<double>(pixels)).replicate(1, pixels);

    for (std::size_t i = stages_.size(); i-- > 0;) {
      Stage& stage = stages_[i];
      const StageCache& sc = cache.stages[i];
      if (stage.activated) dy.data = relu_backward(dy.data, sc.pre_activation);
      if (stage.normalized) dy.data = stage.norm.backward(dy.data, sc.norm);
      dy = stage.conv.backward(dy, sc.cols, sc.in_height, sc.in_width);
    }
  }
}

}  // namespace daml::nn
