#pragma once

// Minimal dense/convolutional layers on Eigen matrices, enough for a small
// backbone plus fully connected regression head trained on one CPU core.
//
// Activations of a batch are stored as (channels x batch*height*width)
// matrices; the column of sample n at pixel (y, x) is n*h*w + y*w + x.

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "oad/random.hpp"

namespace oad::nn {

using Matrix = Eigen::MatrixXf;
using Vector = Eigen::VectorXf;

struct Parameter {
  Matrix value;
  Matrix grad;
  Matrix accum_grad;
  Matrix accum_update;

  explicit Parameter(Matrix init = {})
      : value(std::move(init)),
        grad(Matrix::Zero(value.rows(), value.cols())),
        accum_grad(Matrix::Zero(value.rows(), value.cols())),
        accum_update(Matrix::Zero(value.rows(), value.cols())) {}
};

struct FeatureBatch {
  int batch = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  Matrix values;
};

class Conv2d {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng);

  int out_height(int h) const { return (h + 2 * padding_ - kernel_) / stride_ + 1; }
  int out_width(int w) const { return (w + 2 * padding_ - kernel_) / stride_ + 1; }
  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

  FeatureBatch forward(const FeatureBatch& x);
  /// Accumulates parameter gradients and returns d(loss)/d(input).
  FeatureBatch backward(const FeatureBatch& grad_out, bool need_input_grad);

  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }

 private:
  Matrix im2col(const FeatureBatch& x, int oh, int ow) const;
  void col2im(const Matrix& cols, FeatureBatch& dx, int oh, int ow) const;

  int in_channels_, out_channels_, kernel_, stride_, padding_;
  Parameter weight_;  // out x (in * k * k)
  Parameter bias_;    // out x 1
  FeatureBatch input_shape_;
  Matrix cols_;
};

/// Fully connected layer on (features x batch) matrices.
class Dense {
 public:
  Dense(int in_features, int out_features, Rng& rng, float init_gain = 2.0f);

  int in_features() const { return static_cast<int>(weight_.value.cols()); }
  int out_features() const { return static_cast<int>(weight_.value.rows()); }

  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out, bool need_input_grad);

  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }

 private:
  Parameter weight_;
  Parameter bias_;
  Matrix input_;
};

/// In-place ReLU that remembers its mask for the backward pass.
class Relu {
 public:
  void forward(Matrix& x);
  void backward(Matrix& grad) const;

 private:
  Matrix mask_;
};

/// (C x N*H*W) feature maps -> (C*H*W x N) vectors, and back.
Matrix flatten(const FeatureBatch& x);
FeatureBatch unflatten(const Matrix& flat, int channels, int height, int width);

/// Adaptive-delta optimizer (per-parameter running averages of squared
/// gradients and squared updates, scaled by a global learning rate).
struct AdadeltaConfig {
  float learning_rate = 0.1f;
  float rho = 0.95f;
  float epsilon = 1e-7f;
};

void adadelta_step(const std::vector<Parameter*>& params, const AdadeltaConfig& cfg);
void zero_grad(const std::vector<Parameter*>& params);

}  // namespace oad::nn
