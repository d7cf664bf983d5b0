#include "oad/nn.hpp"

#include <cmath>

#include "oad/errors.hpp"

namespace oad::nn {
namespace {

Matrix he_normal(int rows, int cols, int fan_in, float gain, Rng& rng) {
  Matrix m(rows, cols);
  const float std = std::sqrt(gain / static_cast<float>(fan_in));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      m(i, j) = static_cast<float>(standard_normal(rng)) * std;
  return m;
}

}  // namespace

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      weight_(he_normal(out_channels, in_channels * kernel * kernel,
                        in_channels * kernel * kernel, 2.0f, rng)),
      bias_(Matrix::Zero(out_channels, 1)) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || padding < 0)
    throw InvalidArgument("Conv2d: bad geometry");
}

Matrix Conv2d::im2col(const FeatureBatch& x, int oh, int ow) const {
  const int k = kernel_;
  const Eigen::Index out_cols = static_cast<Eigen::Index>(x.batch) * oh * ow;
  Matrix cols(static_cast<Eigen::Index>(in_channels_) * k * k, out_cols);
  const Eigen::Index in_plane = static_cast<Eigen::Index>(x.height) * x.width;
  for (int n = 0; n < x.batch; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index col = (static_cast<Eigen::Index>(n) * oh + oy) * ow + ox;
        float* dst = cols.col(col).data();
        for (int c = 0; c < in_channels_; ++c)
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride_ - padding_ + ky;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride_ - padding_ + kx;
              *dst++ = (iy < 0 || iy >= x.height || ix < 0 || ix >= x.width)
                           ? 0.0f
                           : x.values(c, n * in_plane + static_cast<Eigen::Index>(iy) * x.width + ix);
            }
          }
      }
  return cols;
}

void Conv2d::col2im(const Matrix& cols, FeatureBatch& dx, int oh, int ow) const {
  const int k = kernel_;
  const Eigen::Index in_plane = static_cast<Eigen::Index>(dx.height) * dx.width;
  for (int n = 0; n < dx.batch; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index col = (static_cast<Eigen::Index>(n) * oh + oy) * ow + ox;
        const float* src = cols.col(col).data();
        for (int c = 0; c < in_channels_; ++c)
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride_ - padding_ + ky;
            for (int kx = 0; kx < k; ++kx, ++src) {
              const int ix = ox * stride_ - padding_ + kx;
              if (iy < 0 || iy >= dx.height || ix < 0 || ix >= dx.width) continue;
              dx.values(c, n * in_plane + static_cast<Eigen::Index>(iy) * dx.width + ix) += *src;
            }
          }
      }
}

FeatureBatch Conv2d::forward(const FeatureBatch& x) {
  if (x.channels != in_channels_) throw InvalidArgument("Conv2d: channel mismatch");
  const int oh = out_height(x.height);
  const int ow = out_width(x.width);
  input_shape_ = FeatureBatch{x.batch, x.channels, x.height, x.width, {}};
  cols_ = im2col(x, oh, ow);
  FeatureBatch y{x.batch, out_channels_, oh, ow, {}};
  y.values.noalias() = weight_.value * cols_;
  y.values.colwise() += bias_.value.col(0);
  return y;
}

FeatureBatch Conv2d::backward(const FeatureBatch& grad_out, bool need_input_grad) {
  weight_.grad.noalias() += grad_out.values * cols_.transpose();
  bias_.grad.col(0) += grad_out.values.rowwise().sum();
  FeatureBatch dx{input_shape_.batch, input_shape_.channels, input_shape_.height,
                  input_shape_.width, {}};
  if (!need_input_grad) return dx;
  const Matrix dcols = weight_.value.transpose() * grad_out.values;
  dx.values = Matrix::Zero(dx.channels, static_cast<Eigen::Index>(dx.batch) * dx.height * dx.width);
  col2im(dcols, dx, grad_out.height, grad_out.width);
  return dx;
}

Dense::Dense(int in_features, int out_features, Rng& rng, float init_gain)
    : weight_(he_normal(out_features, in_features, in_features, init_gain, rng)),
      bias_(Matrix::Zero(out_features, 1)) {
  if (in_features < 1 || out_features < 1) throw InvalidArgument("Dense: bad geometry");
}

Matrix Dense::forward(const Matrix& x) {
  if (x.rows() != weight_.value.cols()) throw InvalidArgument("Dense: feature size mismatch");
  input_ = x;
  Matrix y = weight_.value * x;
  y.colwise() += bias_.value.col(0);
  return y;
}

Matrix Dense::backward(const Matrix& grad_out, bool need_input_grad) {
  weight_.grad.noalias() += grad_out * input_.transpose();
  bias_.grad.col(0) += grad_out.rowwise().sum();
  if (!need_input_grad) return {};
  return weight_.value.transpose() * grad_out;
}

void Relu::forward(Matrix& x) {
  mask_ = (x.array() > 0.0f).cast<float>().matrix();
  x = x.cwiseProduct(mask_);
}

void Relu::backward(Matrix& grad) const { grad = grad.cwiseProduct(mask_); }

Matrix flatten(const FeatureBatch& x) {
  const Eigen::Index plane = static_cast<Eigen::Index>(x.height) * x.width;
  Matrix out(x.channels * plane, x.batch);
  for (int n = 0; n < x.batch; ++n)
    for (int c = 0; c < x.channels; ++c)
      out.col(n).segment(c * plane, plane) = x.values.row(c).segment(n * plane, plane).transpose();
  return out;
}

FeatureBatch unflatten(const Matrix& flat, int channels, int height, int width) {
  const Eigen::Index plane = static_cast<Eigen::Index>(height) * width;
  FeatureBatch x{static_cast<int>(flat.cols()), channels, height, width, {}};
  x.values.resize(channels, plane * x.batch);
  for (int n = 0; n < x.batch; ++n)
    for (int c = 0; c < channels; ++c)
      x.values.row(c).segment(n * plane, plane) = flat.col(n).segment(c * plane, plane).transpose();
  return x;
}

void adadelta_step(const std::vector<Parameter*>& params, const AdadeltaConfig& cfg) {
  for (Parameter* p : params) {
    p->accum_grad = cfg.rho * p->accum_grad + (1.0f - cfg.rho) * p->grad.cwiseAbs2();
    const Matrix update = (p->grad.array() * (p->accum_update.array() + cfg.epsilon).sqrt() /
                           (p->accum_grad.array() + cfg.epsilon).sqrt())
                              .matrix();
    p->accum_update = cfg.rho * p->accum_update + (1.0f - cfg.rho) * update.cwiseAbs2();
    p->value -= cfg.learning_rate * update;
  }
}

void zero_grad(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->grad.setZero();
}

}  // namespace oad::nn
