#pragma once

#include <vector>

#include "daml/nn/encoder.hpp"
#include "daml/nn/layers.hpp"

namespace daml::nn {

// Pre-norm transformer over non-overlapping patches with a class token;
// the feature is the final-normalized class token.
class AttentionEncoder final : public Encoder {
 public:
  AttentionEncoder(const EncoderConfig& config, Rng& rng);

  ParamRefs parameters() override;
  std::unique_ptr<Encoder> clone() const override { return std::make_unique<AttentionEncoder>(*this); }

  int num_tokens() const { return 1 + patches_y_ * patches_x_; }

 protected:
  Matrix run(const Matrix& images, bool keep_cache) override;
  Matrix run_const(const Matrix& images) const override;
  void run_backward(const Matrix& grad_features) override;

 private:
  struct Block {
    LayerNorm norm1;
    MultiHeadSelfAttention attention;
    LayerNorm norm2;
    Linear fc1;
    Linear fc2;
  };
  struct BlockCache {
    NormCache norm1;
    AttentionCache attention;
    NormCache norm2;
    Matrix fc1_input;
    Matrix hidden_pre;
    Matrix hidden;
  };
  struct SampleCache {
    Matrix patches;
    std::vector<BlockCache> blocks;
    NormCache final_norm;
  };

  Matrix extract_patches(const Matrix& image_row) const;
  RowVector forward_sample(const Matrix& image_row, SampleCache* cache) const;

  int patches_y_ = 0;
  int patches_x_ = 0;
  Linear patch_embed_;
  Param class_token_;  // 1 x dim
  Param position_;     // tokens x dim
  std::vector<Block> blocks_;
  LayerNorm final_norm_;
  std::vector<SampleCache> cache_;
};

}  // namespace daml::nn
