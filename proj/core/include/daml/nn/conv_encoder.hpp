#pragma once

#include <vector>

#include "daml/nn/encoder.hpp"
#include "daml/nn/layers.hpp"

namespace daml::nn {

// Stack of 3x3 conv stages; the first half use instance normalization, the
// first stage keeps resolution and later ones halve it. Every stage except
// the last is followed by ReLU; the last stage emits feature_dim channels
// which are globally average pooled.
class ConvEncoder final : public Encoder {
 public:
  ConvEncoder(const EncoderConfig& config, Rng& rng);

  ParamRefs parameters() override;
  std::unique_ptr<Encoder> clone() const override { return std::make_unique<ConvEncoder>(*this); }

 protected:
  Matrix run(const Matrix& images, bool keep_cache) override;
  Matrix run_const(const Matrix& images) const override;
  void run_backward(const Matrix& grad_features) override;

 private:
  struct Stage {
    Conv2d conv;
    bool normalized = false;
    bool activated = true;
    InstanceNorm norm;
  };
  struct StageCache {
    Matrix cols;
    NormCache norm;
    Matrix pre_activation;
    int in_height = 0;
    int in_width = 0;
  };
  struct SampleCache {
    std::vector<StageCache> stages;
    int out_height = 0;
    int out_width = 0;
  };

  RowVector forward_sample(const Matrix& image_row, SampleCache* cache) const;

  std::vector<Stage> stages_;
  std::vector<SampleCache> cache_;
};

}  // namespace daml::nn
