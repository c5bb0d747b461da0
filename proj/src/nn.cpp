#include "nn.hpp"

#include <algorithm>
#include <cmath>

#include "rng.hpp"
#include "util.hpp"

namespace flsim {

MlpSpec MlpSpec::dense(std::vector<int> sizes, Activation act, OutputHead head) {
  MlpSpec spec;
  spec.layer_sizes = std::move(sizes);
  if (spec.layer_sizes.size() >= 2) {
    spec.activations.assign(spec.layer_sizes.size() - 2, act);
  }
  spec.head = head;
  spec.validate();
  return spec;
}

std::size_t MlpSpec::param_count() const {
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    p += static_cast<std::size_t>(layer_sizes[l] + 1) * layer_sizes[l + 1];
  }
  return p;
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw ConfigError("MlpSpec needs at least an input and an output size");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw ConfigError("MlpSpec layer sizes must be >= 1");
  }
  if (activations.size() != layer_sizes.size() - 2) {
    throw ConfigError("MlpSpec needs one activation per hidden layer");
  }
}

void Batch::validate(const std::string& where) const {
  if (n < 0 || dim < 1 ||
      inputs.size() != static_cast<std::size_t>(n) * dim ||
      targets.size() != static_cast<std::size_t>(n)) {
    throw ConfigError(where + ": inconsistent batch shape");
  }
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ParamVector params;
  params.reserve(spec.param_count());
  for (int l = 0; l + 1 < static_cast<int>(spec.layer_sizes.size()); ++l) {
    const int fan_in = spec.layer_sizes[l];
    const int fan_out = spec.layer_sizes[l + 1];
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_in * fan_out; ++i) params.push_back(rng.uniform(-s, s));
    for (int i = 0; i < fan_out; ++i) params.push_back(0.0);
  }
  return params;
}

namespace {

struct LayerView {
  const double* weights;  // out x in, row-major
  const double* biases;
  int in, out;
};

std::vector<LayerView> layer_views(const MlpSpec& spec, const ParamVector& params) {
  if (params.size() != spec.param_count()) {
    throw ConfigError("parameter vector length does not match the model spec");
  }
  std::vector<LayerView> layers;
  const double* p = params.data();
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    LayerView v;
    v.in = spec.layer_sizes[l];
    v.out = spec.layer_sizes[l + 1];
    v.weights = p;
    v.biases = p + static_cast<std::size_t>(v.in) * v.out;
    p = v.biases + v.out;
    layers.push_back(v);
  }
  return layers;
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kReLU: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kIdentity: return z;
  }
  return z;
}

// Derivative in terms of the pre-activation z and the activation value y.
double activate_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::kReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

// Activations per layer for one input row; acts[0] is the input itself,
// acts.back() holds the raw output logits.
void forward_row(const std::vector<LayerView>& layers, const MlpSpec& spec,
                 std::span<const double> input,
                 std::vector<std::vector<double>>& acts) {
  acts.resize(layers.size() + 1);
  acts[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerView& lv = layers[l];
    auto& out = acts[l + 1];
    out.resize(lv.out);
    const bool is_output = (l + 1 == layers.size());
    for (int o = 0; o < lv.out; ++o) {
      double z = lv.biases[o];
      const double* w = lv.weights + static_cast<std::size_t>(o) * lv.in;
      for (int i = 0; i < lv.in; ++i) z += w[i] * acts[l][i];
      out[o] = is_output ? z : activate(spec.activations[l], z);
    }
  }
}

// Backprop one row given d(loss)/d(logits); accumulates into grad.
// Recomputes pre-activations from the stored activation values where needed.
void backprop_row(const std::vector<LayerView>& layers, const MlpSpec& spec,
                  const std::vector<std::vector<double>>& acts,
                  std::vector<double> delta, ParamVector& grad) {
  // Offsets of each layer's weight block within the flat vector.
  std::size_t offset = 0;
  std::vector<std::size_t> offsets(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offsets[l] = offset;
    offset += static_cast<std::size_t>(layers[l].in + 1) * layers[l].out;
  }

  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const LayerView& lv = layers[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + static_cast<std::size_t>(lv.in) * lv.out;
    const auto& in_act = acts[l];
    for (int o = 0; o < lv.out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      double* gwo = gw + static_cast<std::size_t>(o) * lv.in;
      for (int i = 0; i < lv.in; ++i) gwo[i] += d * in_act[i];
    }
    if (l == 0) break;
    std::vector<double> prev(lv.in, 0.0);
    for (int o = 0; o < lv.out; ++o) {
      const double d = delta[o];
      const double* w = lv.weights + static_cast<std::size_t>(o) * lv.in;
      for (int i = 0; i < lv.in; ++i) prev[i] += d * w[i];
    }
    // Chain through the previous layer's activation. For ReLU and identity
    // the derivative is recoverable from the activation value alone; tanh
    // likewise (1 - y^2).
    const Activation a = spec.activations[l - 1];
    for (int i = 0; i < lv.in; ++i) {
      const double y = acts[l][i];
      prev[i] *= activate_grad(a, y, y);
    }
    delta = std::move(prev);
  }
}

double row_ce_loss_and_delta(std::span<const double> logits, int target,
                             std::vector<double>& delta) {
  const int c = static_cast<int>(logits.size());
  if (target < 0 || target >= c) {
    throw ConfigError("target label out of range for the output layer");
  }
  double m = logits[0];
  for (double z : logits) m = std::max(m, z);
  double sum = 0.0;
  delta.resize(c);
  for (int i = 0; i < c; ++i) {
    delta[i] = std::exp(logits[i] - m);
    sum += delta[i];
  }
  for (int i = 0; i < c; ++i) delta[i] /= sum;  // softmax probabilities
  const double loss = std::log(sum) + m - logits[target];
  delta[target] -= 1.0;
  return loss;
}

int argmax(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void require_ce_head(const MlpSpec& spec, const char* op) {
  if (spec.head != OutputHead::kSoftmaxCrossEntropy) {
    throw ConfigError(std::string(op) + " requires a softmax cross-entropy head");
  }
}

}  // namespace

ForwardResult forward_loss(const MlpSpec& spec, const ParamVector& params,
                           const Batch& batch) {
  spec.validate();
  batch.validate("forward_loss");
  require_ce_head(spec, "forward_loss");
  if (batch.dim != spec.input_dim()) {
    throw ConfigError("forward_loss: batch dimension does not match the model input");
  }
  const auto layers = layer_views(spec, params);
  ForwardResult res;
  res.predictions.resize(batch.n);
  std::vector<std::vector<double>> acts;
  std::vector<double> delta;
  double total = 0.0;
  for (int r = 0; r < batch.n; ++r) {
    forward_row(layers, spec, batch.row(r), acts);
    res.predictions[r] = argmax(acts.back());
    total += row_ce_loss_and_delta(acts.back(), batch.targets[r], delta);
  }
  res.loss = batch.n > 0 ? total / batch.n : 0.0;
  return res;
}

BackwardResult backward(const MlpSpec& spec, const ParamVector& params,
                        const Batch& batch) {
  spec.validate();
  batch.validate("backward");
  require_ce_head(spec, "backward");
  if (batch.dim != spec.input_dim()) {
    throw ConfigError("backward: batch dimension does not match the model input");
  }
  if (batch.n == 0) throw ConfigError("backward: empty batch");
  const auto layers = layer_views(spec, params);
  BackwardResult res;
  res.grad.assign(params.size(), 0.0);
  std::vector<std::vector<double>> acts;
  std::vector<double> delta;
  double total = 0.0;
  const double inv_n = 1.0 / batch.n;
  for (int r = 0; r < batch.n; ++r) {
    forward_row(layers, spec, batch.row(r), acts);
    total += row_ce_loss_and_delta(acts.back(), batch.targets[r], delta);
    for (auto& d : delta) d *= inv_n;
    backprop_row(layers, spec, acts, delta, res.grad);
  }
  res.loss = total * inv_n;
  return res;
}

std::vector<double> forward_logits(const MlpSpec& spec, const ParamVector& params,
                                   std::span<const double> input) {
  spec.validate();
  if (static_cast<int>(input.size()) != spec.input_dim()) {
    throw ConfigError("forward_logits: input dimension mismatch");
  }
  const auto layers = layer_views(spec, params);
  std::vector<std::vector<double>> acts;
  forward_row(layers, spec, input, acts);
  return acts.back();
}

ParamVector backward_from_logit_grad(const MlpSpec& spec, const ParamVector& params,
                                     std::span<const double> input,
                                     std::span<const double> logit_grad) {
  spec.validate();
  if (static_cast<int>(input.size()) != spec.input_dim() ||
      static_cast<int>(logit_grad.size()) != spec.output_dim()) {
    throw ConfigError("backward_from_logit_grad: dimension mismatch");
  }
  const auto layers = layer_views(spec, params);
  std::vector<std::vector<double>> acts;
  forward_row(layers, spec, input, acts);
  ParamVector grad(params.size(), 0.0);
  backprop_row(layers, spec, acts,
               std::vector<double>(logit_grad.begin(), logit_grad.end()), grad);
  return grad;
}

void softmax_inplace(std::span<double> z) {
  if (z.empty()) return;
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

}  // namespace flsim
