#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "emot/error.hpp"

namespace emot::nn {

/// Channel-major C x H x W feature map.
template <typename Scalar>
class Tensor3 {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using ChannelMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstChannelMap =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  Tensor3() = default;
  Tensor3(int channels, int height, int width, Scalar fill = Scalar(0))
      : c_(channels), h_(height), w_(width) {
    if (channels <= 0 || height <= 0 || width <= 0)
      throw ShapeError("tensor dimensions must be positive");
    data_ = Array::Constant(Eigen::Index(channels) * height * width, fill);
  }

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  Eigen::Index plane() const { return Eigen::Index(h_) * w_; }

  Scalar& operator()(int c, int y, int x) { return data_(index(c, y, x)); }
  Scalar operator()(int c, int y, int x) const { return data_(index(c, y, x)); }

  Array& data() { return data_; }
  const Array& data() const { return data_; }

  /// C x (H*W) view, one channel per row.
  ChannelMap as_matrix() { return ChannelMap(data_.data(), c_, plane()); }
  ConstChannelMap as_matrix() const { return ConstChannelMap(data_.data(), c_, plane()); }
  ChannelMap channel(int c) { return ChannelMap(data_.data() + c * plane(), h_, w_); }
  ConstChannelMap channel(int c) const { return ConstChannelMap(data_.data() + c * plane(), h_, w_); }

  bool same_shape(const Tensor3& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  std::string shape_string() const {
    return std::to_string(c_) + "x" + std::to_string(h_) + "x" + std::to_string(w_);
  }

 private:
  Eigen::Index index(int c, int y, int x) const { return (Eigen::Index(c) * h_ + y) * w_ + x; }

  int c_{0}, h_{0}, w_{0};
  Array data_;
};

/// Convolution bank laid out [out][in][ky][kx], stride 1, zero padding k/2.
template <typename Scalar>
struct ConvWeights {
  int out_channels{0};
  int in_channels{0};
  int kernel{1};
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> weight;  // out x (in*k*k)
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;

  ConvWeights() = default;
  ConvWeights(int out, int in, int k)
      : out_channels(out),
        in_channels(in),
        kernel(k),
        weight(decltype(weight)::Zero(out, in * k * k)),
        bias(decltype(bias)::Zero(out)) {}

  Scalar& at(int o, int i, int ky, int kx) { return weight(o, (i * kernel + ky) * kernel + kx); }
  Scalar at(int o, int i, int ky, int kx) const { return weight(o, (i * kernel + ky) * kernel + kx); }
};

/// Stride-2, 2x2 transposed convolution laid out [in][out][ky][kx].
template <typename Scalar>
struct DeconvWeights {
  int in_channels{0};
  int out_channels{0};
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> weight;  // in x (out*4)
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;

  DeconvWeights() = default;
  DeconvWeights(int in, int out)
      : in_channels(in),
        out_channels(out),
        weight(decltype(weight)::Zero(in, out * 4)),
        bias(decltype(bias)::Zero(out)) {}

  Scalar& at(int i, int o, int ky, int kx) { return weight(i, o * 4 + ky * 2 + kx); }
  Scalar at(int i, int o, int ky, int kx) const { return weight(i, o * 4 + ky * 2 + kx); }
};

/// Inference-mode batch norm with running statistics.
template <typename Scalar>
struct BatchNorm {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gamma, beta, mean, var;
  Scalar eps = Scalar(1e-5);

  BatchNorm() = default;
  explicit BatchNorm(int channels)
      : gamma(decltype(gamma)::Ones(channels)),
        beta(decltype(beta)::Zero(channels)),
        mean(decltype(mean)::Zero(channels)),
        var(decltype(var)::Ones(channels)) {}
};

template <typename Scalar>
struct MCDWeights {
  ConvWeights<Scalar> conv;      // C_in -> C_mid, 3x3
  DeconvWeights<Scalar> deconv;  // C_mid -> C_in, 2x2 stride 2
  BatchNorm<Scalar> bn;          // over C_in
  Scalar leaky_slope = Scalar(0.1);
};

/// 1x1 -> 3x3 -> 1x1 stack of one head branch.
template <typename Scalar>
struct HeadBranch {
  ConvWeights<Scalar> reduce;
  ConvWeights<Scalar> conv;
  ConvWeights<Scalar> project;
};

template <typename Scalar>
struct HeadWeights {
  HeadBranch<Scalar> cls, reg, obj;
};

template <typename Scalar>
struct HeadOutput {
  Tensor3<Scalar> cls, reg, obj;
};

template <typename Scalar>
Tensor3<Scalar> leaky_relu(Tensor3<Scalar> x, Scalar slope) {
  x.data() = (x.data() >= Scalar(0)).select(x.data(), slope * x.data());
  return x;
}

/// 2x2 max pooling, stride 2. Odd edges are padded by replication.
template <typename Scalar>
Tensor3<Scalar> maxpool2(const Tensor3<Scalar>& x) {
  const int oh = (x.height() + 1) / 2, ow = (x.width() + 1) / 2;
  Tensor3<Scalar> out(x.channels(), oh, ow);
  for (int c = 0; c < x.channels(); ++c) {
    auto in = x.channel(c);
    auto dst = out.channel(c);
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        const int y0 = 2 * y, x0 = 2 * xx;
        const int rows = std::min(2, x.height() - y0), cols = std::min(2, x.width() - x0);
        dst(y, xx) = in.block(y0, x0, rows, cols).maxCoeff();
      }
    }
  }
  return out;
}

/// Same-size cross-correlation plus bias, computed as one GEMM over an im2col buffer.
template <typename Scalar>
Tensor3<Scalar> conv2d(const Tensor3<Scalar>& x, const ConvWeights<Scalar>& w) {
  if (w.in_channels != x.channels())
    throw ShapeError("conv expects " + std::to_string(w.in_channels) + " input channels, got " +
                     x.shape_string());
  if (w.kernel % 2 == 0) throw ShapeError("conv kernel must be odd");
  if (w.weight.rows() != w.out_channels || w.weight.cols() != w.in_channels * w.kernel * w.kernel ||
      w.bias.size() != w.out_channels)
    throw ShapeError("conv weight bank has inconsistent dimensions");
  const int k = w.kernel, pad = k / 2, h = x.height(), wd = x.width();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cols =
      decltype(cols)::Zero(Eigen::Index(x.channels()) * k * k, x.plane());
  for (int i = 0; i < x.channels(); ++i) {
    auto src = x.channel(i);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        auto row = cols.row((i * k + ky) * k + kx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          for (int xx = 0; xx < wd; ++xx) {
            const int sx = xx + kx - pad;
            if (sx >= 0 && sx < wd) row(Eigen::Index(y) * wd + xx) = src(sy, sx);
          }
        }
      }
    }
  }
  Tensor3<Scalar> out(w.out_channels, h, wd);
  out.as_matrix().noalias() = w.weight * cols;
  out.as_matrix().colwise() += w.bias;
  return out;
}

template <typename Scalar>
Tensor3<Scalar> conv3x3_lrelu(const Tensor3<Scalar>& x, const ConvWeights<Scalar>& w, Scalar slope) {
  if (w.kernel != 3) throw ShapeError("conv3x3_lrelu expects a 3x3 kernel");
  return leaky_relu(conv2d(x, w), slope);
}

/// Exact 2x upsampling: out[o, 2y+a, 2x+b] = sum_i x[i, y, x] * w[i, o, a, b] + bias[o].
template <typename Scalar>
Tensor3<Scalar> conv_transpose2x2(const Tensor3<Scalar>& x, const DeconvWeights<Scalar>& w) {
  if (w.in_channels != x.channels())
    throw ShapeError("transposed conv expects " + std::to_string(w.in_channels) +
                     " input channels, got " + x.shape_string());
  if (w.weight.rows() != w.in_channels || w.weight.cols() != w.out_channels * 4 ||
      w.bias.size() != w.out_channels)
    throw ShapeError("transposed conv weight bank has inconsistent dimensions");
  const int h = x.height(), wd = x.width();
  Tensor3<Scalar> out(w.out_channels, 2 * h, 2 * wd);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> tap(w.out_channels, w.in_channels);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int o = 0; o < w.out_channels; ++o)
        for (int i = 0; i < w.in_channels; ++i) tap(o, i) = w.at(i, o, a, b);
      const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> y = tap * x.as_matrix();
      for (int o = 0; o < w.out_channels; ++o) {
        auto dst = out.channel(o);
        for (int yy = 0; yy < h; ++yy)
          for (int xx = 0; xx < wd; ++xx)
            dst(2 * yy + a, 2 * xx + b) = y(o, Eigen::Index(yy) * wd + xx) + w.bias(o);
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor3<Scalar> batch_norm(Tensor3<Scalar> x, const BatchNorm<Scalar>& bn) {
  const int c = x.channels();
  if (bn.gamma.size() != c || bn.beta.size() != c || bn.mean.size() != c || bn.var.size() != c)
    throw ShapeError("batch norm has " + std::to_string(bn.gamma.size()) + " channels, input " +
                     x.shape_string());
  if ((bn.var.array() < Scalar(0)).any()) throw ShapeError("batch norm variance is negative");
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> scale = bn.gamma.array() / (bn.var.array() + bn.eps).sqrt();
  const Eigen::Array<Scalar, Eigen::Dynamic, 1> shift = bn.beta.array() - scale * bn.mean.array();
  auto m = x.as_matrix();
  m.array().colwise() *= scale;
  m.array().colwise() += shift;
  return x;
}

template <typename Scalar>
Tensor3<Scalar> deconv2_bn_lrelu(const Tensor3<Scalar>& x, const MCDWeights<Scalar>& w) {
  return leaky_relu(batch_norm(conv_transpose2x2(x, w.deconv), w.bn), w.leaky_slope);
}

/// The residual branch: pool, 3x3 conv, transposed conv back to the input grid.
template <typename Scalar>
Tensor3<Scalar> mcd_transform(const Tensor3<Scalar>& x, const MCDWeights<Scalar>& w) {
  if (x.height() % 2 || x.width() % 2)
    throw ShapeError("mcd block needs even spatial size, got " + x.shape_string());
  Tensor3<Scalar> pooled = maxpool2(x);
  Tensor3<Scalar> context;
  try {
    context = conv3x3_lrelu(pooled, w.conv, w.leaky_slope);
  } catch (const ShapeError& e) {
    throw ShapeError(std::string("mcd conv stage: ") + e.what());
  }
  Tensor3<Scalar> up;
  try {
    up = deconv2_bn_lrelu(context, w);
  } catch (const ShapeError& e) {
    throw ShapeError(std::string("mcd deconv stage: ") + e.what());
  }
  if (!up.same_shape(x))
    throw ShapeError("mcd residual stage: branch output " + up.shape_string() + " vs input " +
                     x.shape_string());
  return up;
}

/// Y = x + T(x).
template <typename Scalar>
Tensor3<Scalar> mcd_block(const Tensor3<Scalar>& x, const MCDWeights<Scalar>& w) {
  Tensor3<Scalar> y = mcd_transform(x, w);
  y.data() += x.data();
  return y;
}

template <typename Scalar>
Tensor3<Scalar> run_branch(const Tensor3<Scalar>& p, const HeadBranch<Scalar>& b) {
  if (b.reduce.kernel != 1 || b.conv.kernel != 3 || b.project.kernel != 1)
    throw ShapeError("head branch must be 1x1 -> 3x3 -> 1x1");
  return conv2d(conv2d(conv2d(p, b.reduce), b.conv), b.project);
}

template <typename Scalar>
Tensor3<Scalar> softmax_channels(Tensor3<Scalar> x) {
  auto m = x.as_matrix();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    auto col = m.col(j);
    col.array() = (col.array() - col.maxCoeff()).exp();
    col /= col.sum();
  }
  return x;
}

template <typename Scalar>
Tensor3<Scalar> sigmoid(Tensor3<Scalar> x) {
  x.data() = Scalar(1) / (Scalar(1) + (-x.data()).exp());
  return x;
}

/// Independent classification (softmax), regression (raw) and objectness (sigmoid) branches.
template <typename Scalar>
HeadOutput<Scalar> decoupled_head(const Tensor3<Scalar>& p, const HeadWeights<Scalar>& w, int num_classes) {
  if (w.cls.project.out_channels != num_classes)
    throw ShapeError("classification branch emits " + std::to_string(w.cls.project.out_channels) +
                     " channels, expected " + std::to_string(num_classes));
  if (w.reg.project.out_channels != 4) throw ShapeError("regression branch must emit 4 channels");
  if (w.obj.project.out_channels != 1) throw ShapeError("objectness branch must emit 1 channel");
  return {softmax_channels(run_branch(p, w.cls)), run_branch(p, w.reg), sigmoid(run_branch(p, w.obj))};
}

}  // namespace emot::nn
