#include "daml/nn/attention_encoder.hpp"

#include <string>

namespace daml::nn {

AttentionEncoder::AttentionEncoder(const EncoderConfig& config, Rng& rng) : Encoder(config) {
  const int p = config.patch_size;
  const int dim = config.feature_dim;
  patches_y_ = config.image_size.height / p;
  patches_x_ = config.image_size.width / p;
  patch_embed_ = Linear("patch_embed", data::Image::kChannels * p * p, dim, rng);

  std::normal_distribution<double> small(0.0, 0.02);
  Matrix cls(1, dim);
  for (Eigen::Index i = 0; i < cls.size(); ++i) cls.data()[i] = small(rng);
  class_token_ = Param("cls_token", cls);
  Matrix pos(num_tokens(), dim);
  for (Eigen::Index i = 0; i < pos.size(); ++i) pos.data()[i] = small(rng);
  position_ = Param("pos_embed", pos);

  for (int i = 0; i < config.depth; ++i) {
    const std::string name = "block" + std::to_string(i);
    Block block;
    block.norm1 = LayerNorm(name + ".norm1", dim);
    block.attention = MultiHeadSelfAttention(name + ".attn", dim, config.heads, rng);
    block.norm2 = LayerNorm(name + ".norm2", dim);
    block.fc1 = Linear(name + ".fc1", dim, dim * config.mlp_ratio, rng);
    block.fc2 = Linear(name + ".fc2", dim * config.mlp_ratio, dim, rng);
    blocks_.push_back(std::move(block));
  }
  final_norm_ = LayerNorm("norm", dim);
}

ParamRefs AttentionEncoder::parameters() {
  ParamRefs out;
  patch_embed_.collect(out);
  out.push_back(&class_token_);
  out.push_back(&position_);
  for (auto& block : blocks_) {
    block.norm1.collect(out);
    block.attention.collect(out);
    block.norm2.collect(out);
    block.fc1.collect(out);
    block.fc2.collect(out);
  }
  final_norm_.collect(out);
  return out;
}

Matrix AttentionEncoder::extract_patches(const Matrix& image_row) const {
  const int p = config().patch_size;
  const int h = config().image_size.height;
  const int w = config().image_size.width;
  const int plane = h * w;
  Matrix patches(patches_y_ * patches_x_, data::Image::kChannels * p * p);
  for (int py = 0; py < patches_y_; ++py)
    for (int px = 0; px < patches_x_; ++px) {
      const Eigen::Index row = py * patches_x_ + px;
      Eigen::Index col = 0;
      for (int c = 0; c < data::Image::kChannels; ++c)
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx)
            patches(row, col++) = image_row(0, c * plane + (py * p + dy) * w + (px * p + dx));
    }
  return patches;
}

RowVector AttentionEncoder::forward_sample(const Matrix& image_row, SampleCache* cache) const {
  Matrix patches = extract_patches(image_row);
  Matrix x(num_tokens(), feature_dim());
  x.row(0) = class_token_.value.row(0);
  x.bottomRows(num_tokens() - 1) = patch_embed_.forward(patches);
  x += position_.value;
  if (cache) {
    cache->patches = std::move(patches);
    cache->blocks.resize(blocks_.size());
  }

  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Block& block = blocks_[i];
    BlockCache* bc = cache ? &cache->blocks[i] : nullptr;
    const Matrix h1 = block.norm1.forward(x, bc ? &bc->norm1 : nullptr);
    x += block.attention.forward(h1, bc ? &bc->attention : nullptr);
    Matrix h2 = block.norm2.forward(x, bc ? &bc->norm2 : nullptr);
    Matrix pre = block.fc1.forward(h2);
    Matrix hidden = gelu(pre);
    x += block.fc2.forward(hidden);
    if (bc) {
      bc->fc1_input = std::move(h2);
      bc->hidden_pre = std::move(pre);
      bc->hidden = std::move(hidden);
    }
  }
  const Matrix out = final_norm_.forward(x, cache ? &cache->final_norm : nullptr);
  return out.row(0);
}

Matrix AttentionEncoder::run(const Matrix& images, bool keep_cache) {
  Matrix out(images.rows(), feature_dim());
  if (keep_cache) cache_.assign(static_cast<std::size_t>(images.rows()), {});
  for (Eigen::Index n = 0; n < images.rows(); ++n) {
    const Matrix row = images.row(n);
    out.row(n) = forward_sample(row, keep_cache ? &cache_[static_cast<std::size_t>(n)] : nullptr);
  }
  return out;
}

Matrix AttentionEncoder::run_const(const Matrix& images) const {
  Matrix out(images.rows(), feature_dim());
  for (Eigen::Index n = 0; n < images.rows(); ++n) {
    const Matrix row = images.row(n);
    out.row(n) = forward_sample(row, nullptr);
  }
  return out;
}

void AttentionEncoder::run_backward(const Matrix& grad_features) {
  for (Eigen::Index n = 0; n < grad_features.rows(); ++n) {
    SampleCache& cache = cache_[static_cast<std::size_t>(n)];
    Matrix dout = Matrix::Zero(num_tokens(), feature_dim());
    dout.row(0) = grad_features.row(n);
    Matrix dx = final_norm_.backward(dout, cache.final_norm);

    for (std::size_t i = blocks_.size(); i-- > 0;) {
      Block& block = blocks_[i];
      const BlockCache& bc = cache.blocks[i];
      const Matrix dhidden = block.fc2.backward(dx, bc.hidden);
      const Matrix dh2 = block.fc1.backward(gelu_backward(dhidden, bc.hidden_pre), bc.fc1_input);
      dx += block.norm2.backward(dh2, bc.norm2);
      const Matrix dh1 = block.attention.backward(dx, bc.attention);
      dx += block.norm1.backward(dh1, bc.norm1);
    }

    position_.grad += dx;
    class_token_.grad.row(0) += dx.row(0);
    patch_embed_.backward(dx.bottomRows(num_tokens() - 1), cache.patches);
  }
}

}  // namespace daml::nn
