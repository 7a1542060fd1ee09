#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hierlab/matrix.hpp"
#include "hierlab/rng.hpp"

namespace hierlab {

/// Cached activations of one batched forward pass.
struct MlpWorkspace {
  Matrix input;
  std::vector<Matrix> outputs;  // outputs[l] = post-activation output of layer l
  Matrix delta;
  Matrix delta_prev;

  const Matrix& result() const { return outputs.back(); }
};

/// Fully connected network, tanh on hidden layers and identity on the output.
/// All parameters live in one flat vector: for each layer the weight matrix
/// W[out][in] row-major, followed by its bias[out].
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialised network with the given layer sizes (input first).
  explicit Mlp(std::vector<std::size_t> sizes);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation of weights and biases.
  static Mlp make(std::vector<std::size_t> sizes, Rng& rng);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t num_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + sizes_[layer + 1] * sizes_[layer]; }

  std::vector<double> forward(std::span<const double> x) const;
  /// Batched forward; rows of `x` are samples. Result is ws.result().
  const Matrix& forward(const Matrix& x, MlpWorkspace& ws) const;

  /// Reverse pass for the forward pass cached in `ws`.
  /// `grad_out` is dLoss/dOutput (batch x output_size). Parameter gradients are
  /// accumulated into `param_grad` when it is non-empty; dLoss/dInput is
  /// written to `input_grad` when it is non-null.
  void backward(MlpWorkspace& ws, const Matrix& grad_out, std::span<double> param_grad, Matrix* input_grad) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, AdamParams params);

  void step(std::span<double> params, std::span<const double> grad);
  std::int64_t steps() const { return t_; }
  const AdamParams& params() const { return params_; }

 private:
  AdamParams params_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

/// target <- (1 - tau) target + tau online. Throws InputError on shape mismatch.
void polyak(std::span<double> target, std::span<const double> online, double tau);

}  // namespace hierlab
