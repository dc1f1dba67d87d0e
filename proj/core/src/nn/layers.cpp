#include "daml/nn/layers.hpp"

#include <cmath>

#include "daml/error.hpp"

namespace daml::nn {
namespace {

Matrix normal_init(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix xavier_init(Eigen::Index fan_out, Eigen::Index fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(fan_out, fan_in);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

// --- Conv2d ---------------------------------------------------------------

Conv2d::Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride, int padding,
               Rng& rng)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), stride_(stride), padding_(padding) {
  const int fan_in = in_channels * kernel * kernel;
  weight_ = Param(name + ".weight", normal_init(out_channels, fan_in, std::sqrt(2.0 / fan_in), rng));
  bias_ = Param(name + ".bias", Matrix::Zero(out_channels, 1));
}

FeatureMap Conv2d::forward(const FeatureMap& x, Matrix* cols_out) const {
  require(x.channels() == in_channels_, ErrorKind::ShapeMismatch, "conv input channel mismatch");
  const int out_h = output_size(x.height);
  const int out_w = output_size(x.width);
  const int k2 = kernel_ * kernel_;

  Matrix cols = Matrix::Zero(static_cast<Eigen::Index>(in_channels_) * k2, out_h * out_w);
  for (int c = 0; c < in_channels_; ++c)
    for (int ky = 0; ky < kernel_; ++ky)
      for (int kx = 0; kx < kernel_; ++kx) {
        const Eigen::Index row = c * k2 + ky * kernel_ + kx;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride_ - padding_ + ky;
          if (iy < 0 || iy >= x.height) continue;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride_ - padding_ + kx;
            if (ix < 0 || ix >= x.width) continue;
            cols(row, oy * out_w + ox) = x.data(c, iy * x.width + ix);
          }
        }
      }

  FeatureMap y;
  y.height = out_h;
  y.width = out_w;
  y.data = weight_.value * cols;
  y.data.colwise() += bias_.value.col(0);
  if (cols_out) *cols_out = std::move(cols);
  return y;
}

FeatureMap Conv2d::backward(const FeatureMap& dy, const Matrix& cols, int in_height, int in_width) {
  weight_.grad.noalias() += dy.data * cols.transpose();
  bias_.grad.col(0) += dy.data.rowwise().sum();

  const Matrix dcols = weight_.value.transpose() * dy.data;
  const int k2 = kernel_ * kernel_;
  FeatureMap dx;
  dx.height = in_height;
  dx.width = in_width;
  dx.data = Matrix::Zero(in_channels_, in_height * in_width);
  for (int c = 0; c < in_channels_; ++c)
    for (int ky = 0; ky < kernel_; ++ky)
      for (int kx = 0; kx < kernel_; ++kx) {
        const Eigen::Index row = c * k2 + ky * kernel_ + kx;
        for (int oy = 0; oy < dy.height; ++oy) {
          const int iy = oy * stride_ - padding_ + ky;
          if (iy < 0 || iy >= in_height) continue;
          for (int ox = 0; ox < dy.width; ++ox) {
            const int ix = ox * stride_ - padding_ + kx;
            if (ix < 0 || ix >= in_width) continue;
            dx.data(c, iy * in_width + ix) += dcols(row, oy * dy.width + ox);
          }
        }
      }
  return dx;
}

// --- normalization --------------------------------------------------------

InstanceNorm::InstanceNorm(const std::string& name, int channels)
    : gamma_(name + ".gamma", Matrix::Ones(channels, 1)), beta_(name + ".beta", Matrix::Zero(channels, 1)) {}

Matrix InstanceNorm::forward(const Matrix& x, NormCache* cache) const {
  const double n = static_cast<double>(x.cols());
  const Vector mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  const Vector var = centered.array().square().rowwise().sum() / n;
  const Vector inv_std = (var.array() + eps_).rsqrt();
  Matrix normalized = inv_std.asDiagonal() * centered;
  Matrix y = gamma_.value.col(0).asDiagonal() * normalized;
  y.colwise() += beta_.value.col(0);
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = inv_std;
  }
  return y;
}

Matrix InstanceNorm::backward(const Matrix& dy, const NormCache& cache) {
  const double n = static_cast<double>(dy.cols());
  gamma_.grad.col(0) += (dy.array() * cache.normalized.array()).rowwise().sum().matrix();
  beta_.grad.col(0) += dy.rowwise().sum();

  const Matrix dxhat = gamma_.value.col(0).asDiagonal() * dy;
  const Vector sum_dxhat = dxhat.rowwise().sum();
  const Vector sum_dxhat_xhat = (dxhat.array() * cache.normalized.array()).rowwise().sum();
  Matrix dx = n * dxhat;
  dx.colwise() -= sum_dxhat;
  dx -= sum_dxhat_xhat.asDiagonal() * cache.normalized;
  return (cache.inv_std / n).asDiagonal() * dx;
}

LayerNorm::LayerNorm(const std::string& name, int dim)
    : gamma_(name + ".gamma", Matrix::Ones(1, dim)), beta_(name + ".beta", Matrix::Zero(1, dim)) {}

Matrix LayerNorm::forward(const Matrix& x, NormCache* cache) const {
  const double n = static_cast<double>(x.cols());
  const Vector mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  const Vector var = centered.array().square().rowwise().sum() / n;
  const Vector inv_std = (var.array() + eps_).rsqrt();
  Matrix normalized = inv_std.asDiagonal() * centered;
  Matrix y = normalized * gamma_.value.row(0).asDiagonal();
  y.rowwise() += beta_.value.row(0);
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = inv_std;
  }
  return y;
}

Matrix LayerNorm::backward(const Matrix& dy, const NormCache& cache) {
  const double n = static_cast<double>(dy.cols());
  gamma_.grad.row(0) += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  beta_.grad.row(0) += dy.colwise().sum();

  const Matrix dxhat = dy * gamma_.value.row(0).asDiagonal();
  const Vector sum_dxhat = dxhat.rowwise().sum();
  const Vector sum_dxhat_xhat = (dxhat.array() * cache.normalized.array()).rowwise().sum();
  Matrix dx = n * dxhat;
  dx.colwise() -= sum_dxhat;
  dx -= sum_dxhat_xhat.asDiagonal() * cache.normalized;
  return (cache.inv_std / n).asDiagonal() * dx;
}

// --- Linear ---------------------------------------------------------------

Linear::Linear(const std::string& name, int in_features, int out_features, Rng& rng)
    : weight_(name + ".weight", xavier_init(out_features, in_features, rng)),
      bias_(name + ".bias", Matrix::Zero(1, out_features)) {}

Matrix Linear::forward(const Matrix& x) const {
  require(x.cols() == weight_.value.cols(), ErrorKind::ShapeMismatch, "linear input width mismatch");
  Matrix y = x * weight_.value.transpose();
  y.rowwise() += bias_.value.row(0);
  return y;
}

Matrix Linear::backward(const Matrix& dy, const Matrix& x) {
  weight_.grad.noalias() += dy.transpose() * x;
  bias_.grad.row(0) += dy.colwise().sum();
  return dy * weight_.value;
}

// --- attention ------------------------------------------------------------

MultiHeadSelfAttention::MultiHeadSelfAttention(const std::string& name, int dim, int heads, Rng& rng)
    : qkv_(name + ".qkv", dim, 3 * dim, rng), proj_(name + ".proj", dim, dim, rng), dim_(dim), heads_(heads) {
  require(heads >= 1 && dim % heads == 0, ErrorKind::InvalidConfig, "attention width must divide into heads");
}

Matrix MultiHeadSelfAttention::forward(const Matrix& x, AttentionCache* cache) const {
  const int head_dim = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Matrix qkv = qkv_.forward(x);
  Matrix mixed(x.rows(), dim_);
  std::vector<Matrix> attention;
  if (cache) attention.reserve(static_cast<std::size_t>(heads_));
  for (int h = 0; h < heads_; ++h) {
    const auto q = qkv.middleCols(h * head_dim, head_dim);
    const auto k = qkv.middleCols(dim_ + h * head_dim, head_dim);
    const auto v = qkv.middleCols(2 * dim_ + h * head_dim, head_dim);
    Matrix a = softmax_rows(scale * (q * k.transpose()));
    mixed.middleCols(h * head_dim, head_dim).noalias() = a * v;
    if (cache) attention.push_back(std::move(a));
  }
  Matrix out = proj_.forward(mixed);
  if (cache) {
    cache->input = x;
    cache->qkv = std::move(qkv);
    cache->attention = std::move(attention);
    cache->mixed = std::move(mixed);
  }
  return out;
}

Matrix MultiHeadSelfAttention::backward(const Matrix& dy, const AttentionCache& cache) {
  const int head_dim = dim_ / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const Matrix dmixed = proj_.backward(dy, cache.mixed);
  Matrix dqkv = Matrix::Zero(cache.qkv.rows(), cache.qkv.cols());
  for (int h = 0; h < heads_; ++h) {
    const auto q = cache.qkv.middleCols(h * head_dim, head_dim);
    const auto k = cache.qkv.middleCols(dim_ + h * head_dim, head_dim);
    const auto v = cache.qkv.middleCols(2 * dim_ + h * head_dim, head_dim);
    const Matrix& a = cache.attention[static_cast<std::size_t>(h)];
    const auto dout = dmixed.middleCols(h * head_dim, head_dim);

    const Matrix da = dout * v.transpose();
    dqkv.middleCols(2 * dim_ + h * head_dim, head_dim).noalias() = a.transpose() * dout;
    const Vector row_dot = (da.array() * a.array()).rowwise().sum();
    Matrix ds = a.array() * (da.colwise() - row_dot).array();
    ds *= scale;
    dqkv.middleCols(h * head_dim, head_dim).noalias() = ds * k;
    dqkv.middleCols(dim_ + h * head_dim, head_dim).noalias() = ds.transpose() * q;
  }
  return qkv_.backward(dqkv, cache.input);
}

// --- activations ----------------------------------------------------------

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& dy, const Matrix& x) {
  return (x.array() > 0.0).select(dy, Matrix::Zero(dy.rows(), dy.cols()));
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double u) { return 0.5 * u * (1.0 + std::tanh(kGeluC * (u + kGeluA * u * u * u))); });
}

Matrix gelu_backward(const Matrix& dy, const Matrix& x) {
  const Matrix slope = x.unaryExpr([](double u) {
    const double t = std::tanh(kGeluC * (u + kGeluA * u * u * u));
    return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * u * u);
  });
  return dy.cwiseProduct(slope);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out = logits.colwise() - logits.rowwise().maxCoeff();
  out = out.array().exp();
  const Vector sums = out.rowwise().sum();
  return sums.cwiseInverse().asDiagonal() * out;
}

}  // namespace daml::nn
