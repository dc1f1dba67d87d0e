#pragma once

#include <string>
#include <vector>

#include "daml/nn/param.hpp"
#include "daml/types.hpp"

namespace daml::nn {

// One sample's activation: rows are channels, columns are flattened pixels.
struct FeatureMap {
  Matrix data;
  int height = 0;
  int width = 0;

  int channels() const { return static_cast<int>(data.rows()); }
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng);

  int output_size(int input) const { return (input + 2 * padding_ - kernel_) / stride_ + 1; }

  // `cols` receives the im2col buffer needed by backward(); may be null.
  FeatureMap forward(const FeatureMap& x, Matrix* cols) const;
  // Accumulates weight/bias gradients; returns the input gradient.
  FeatureMap backward(const FeatureMap& dy, const Matrix& cols, int in_height, int in_width);

  void collect(ParamRefs& out) { out.push_back(&weight_); out.push_back(&bias_); }

  int kernel() const { return kernel_; }
  int stride() const { return stride_; }

 private:
  Param weight_;  // out x (in * k * k)
  Param bias_;    // out x 1
  int in_channels_ = 0;
  int out_channels_ = 0;
  int kernel_ = 3;
  int stride_ = 1;
  int padding_ = 1;
};

struct NormCache {
  Matrix normalized;
  Vector inv_std;
};

// Affine instance normalization: each channel row normalized over pixels.
class InstanceNorm {
 public:
  InstanceNorm() = default;
  InstanceNorm(const std::string& name, int channels);

  Matrix forward(const Matrix& x, NormCache* cache) const;
  Matrix backward(const Matrix& dy, const NormCache& cache);
  void collect(ParamRefs& out) { out.push_back(&gamma_); out.push_back(&beta_); }

 private:
  Param gamma_;  // channels x 1
  Param beta_;
  double eps_ = 1e-5;
};

// Row-wise layer normalization over the feature axis.
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim);

  Matrix forward(const Matrix& x, NormCache* cache) const;
  Matrix backward(const Matrix& dy, const NormCache& cache);
  void collect(ParamRefs& out) { out.push_back(&gamma_); out.push_back(&beta_); }

 private:
  Param gamma_;  // 1 x dim
  Param beta_;
  double eps_ = 1e-6;
};

// y = x W^T + b on row vectors.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in_features, int out_features, Rng& rng);

  Matrix forward(const Matrix& x) const;
  Matrix backward(const Matrix& dy, const Matrix& x);
  void collect(ParamRefs& out) { out.push_back(&weight_); out.push_back(&bias_); }

 private:
  Param weight_;  // out x in
  Param bias_;    // 1 x out
};

struct AttentionCache {
  Matrix input;
  Matrix qkv;
  std::vector<Matrix> attention;  // per head, tokens x tokens
  Matrix mixed;                   // concatenated head outputs before projection
};

class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(const std::string& name, int dim, int heads, Rng& rng);

  Matrix forward(const Matrix& x, AttentionCache* cache) const;
  Matrix backward(const Matrix& dy, const AttentionCache& cache);
  void collect(ParamRefs& out) { qkv_.collect(out); proj_.collect(out); }

 private:
  Linear qkv_;
  Linear proj_;
  int dim_ = 0;
  int heads_ = 1;
};

Matrix relu(const Matrix& x);
// Gradient of relu given its *input*.
Matrix relu_backward(const Matrix& dy, const Matrix& x);

// tanh approximation of GELU.
Matrix gelu(const Matrix& x);
Matrix gelu_backward(const Matrix& dy, const Matrix& x);

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

}  // namespace daml::nn
