#include "hierlab/mlp.hpp"

#include <cmath>
#include <string>

#include "hierlab/error.hpp"
#include "hierlab/kernels.hpp"

namespace hierlab {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ConfigError("mlp: need at least input and output size");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw ConfigError("mlp: layer sizes must be > 0");
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::make(std::vector<std::size_t> sizes, Rng& rng) {
  Mlp net(std::move(sizes));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes_[l]));
    const std::size_t begin = net.offsets_[l];
    const std::size_t end = net.bias_offset(l) + net.sizes_[l + 1];
    for (std::size_t i = begin; i < end; ++i) net.params_[i] = (2.0 * uniform01(rng) - 1.0) * bound;
  }
  return net;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  if (x.size() != input_size())
    throw InputError("mlp forward: input size " + std::to_string(x.size()) + ", expected " +
                     std::to_string(input_size()));
  const auto& k = kernels::active();
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    next.resize(sizes_[l + 1]);
    k.linear_forward(cur.data(), params_.data() + weight_offset(l), params_.data() + bias_offset(l), next.data(), 1,
                     sizes_[l + 1], sizes_[l]);
    if (l + 1 < num_layers()) k.tanh_inplace(next.data(), next.size());
    cur.swap(next);
  }
  return cur;
}

const Matrix& Mlp::forward(const Matrix& x, MlpWorkspace& ws) const {
  if (x.cols != input_size())
    throw InputError("mlp forward: input size " + std::to_string(x.cols) + ", expected " +
                     std::to_string(input_size()));
  const auto& k = kernels::active();
  ws.input = x;
  ws.outputs.resize(num_layers());
  const Matrix* cur = &ws.input;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    Matrix& out = ws.outputs[l];
    out.resize(x.rows, sizes_[l + 1]);
    k.linear_forward(cur->data.data(), params_.data() + weight_offset(l), params_.data() + bias_offset(l),
                     out.data.data(), x.rows, sizes_[l + 1], sizes_[l]);
    if (l + 1 < num_layers()) k.tanh_inplace(out.data.data(), out.data.size());
    cur = &out;
  }
  return ws.outputs.back();
}

void Mlp::backward(MlpWorkspace& ws, const Matrix& grad_out, std::span<double> param_grad, Matrix* input_grad) const {
  if (ws.outputs.size() != num_layers()) throw UsageError("mlp backward: no cached forward pass");
  const std::size_t batch = ws.input.rows;
  if (grad_out.rows != batch || grad_out.cols != output_size()) throw InputError("mlp backward: grad_out shape mismatch");
  const bool want_params = !param_grad.empty();
  if (want_params && param_grad.size() != params_.size()) throw InputError("mlp backward: gradient buffer size mismatch");
  const auto& k = kernels::active();

  ws.delta = grad_out;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const Matrix& layer_in = l == 0 ? ws.input : ws.outputs[l - 1];
    const std::size_t n_out = sizes_[l + 1];
    const std::size_t n_in = sizes_[l];
    if (want_params) {
      k.matmul_tn_acc(ws.delta.data.data(), layer_in.data.data(), param_grad.data() + weight_offset(l), batch, n_out,
                      n_in);
      double* gb = param_grad.data() + bias_offset(l);
      for (std::size_t b = 0; b < batch; ++b) k.axpy(1.0, ws.delta.data.data() + b * n_out, gb, n_out);
    }
    if (l == 0 && input_grad == nullptr) break;
    ws.delta_prev.resize(batch, n_in);
    k.matmul_nn(ws.delta.data.data(), params_.data() + weight_offset(l), ws.delta_prev.data.data(), batch, n_out, n_in);
    if (l == 0) {
      *input_grad = ws.delta_prev;
      break;
    }
    k.tanh_backward(layer_in.data.data(), ws.delta_prev.data.data(), ws.delta_prev.data.size());
    std::swap(ws.delta, ws.delta_prev);
  }
}

Adam::Adam(std::size_t n, AdamParams params) : params_(params), m_(n, 0.0), v_(n, 0.0) {
  if (!(params.lr >= 0.0)) throw ConfigError("adam: lr must be >= 0");
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw InputError("adam: size mismatch");
  ++t_;
  kernels::AdamStep s{};
  s.beta1 = params_.beta1;
  s.beta2 = params_.beta2;
  s.step_size = params_.lr / (1.0 - std::pow(params_.beta1, static_cast<double>(t_)));
  s.v_scale = 1.0 / (1.0 - std::pow(params_.beta2, static_cast<double>(t_)));
  s.eps = params_.eps;
  kernels::active().adam(params.data(), grad.data(), m_.data(), v_.data(), params.size(), s);
}

void polyak(std::span<double> target, std::span<const double> online, double tau) {
  if (target.size() != online.size()) throw InputError("polyak: shape mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InputError("polyak: tau must lie in [0, 1]");
  if (tau == 1.0) {
    std::copy(online.begin(), online.end(), target.begin());
    return;
  }
  if (tau == 0.0) return;
  kernels::active().lerp(tau, online.data(), target.data(), target.size());
}

}  // namespace hierlab
