#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flsim {

// Flat view of all model parameters, laid out layer-major: for each layer,
// the weight matrix (out x in, row-major) followed by the bias vector.
using ParamVector = std::vector<double>;

enum class Activation { kReLU, kTanh, kIdentity };
enum class OutputHead { kSoftmaxCrossEntropy, kLinear };

struct MlpSpec {
  std::vector<int> layer_sizes;          // input dim first, output dim last
  std::vector<Activation> activations;   // one per hidden layer
  OutputHead head = OutputHead::kSoftmaxCrossEntropy;

  // Same activation on every hidden layer.
  static MlpSpec dense(std::vector<int> sizes, Activation act, OutputHead head);

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int n_weight_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  std::size_t param_count() const;

  void validate() const;  // throws ConfigError
  bool operator==(const MlpSpec&) const = default;
};

struct Batch {
  std::vector<double> inputs;  // n x dim, row-major
  std::vector<int> targets;    // class labels in [0, n_classes)
  int n = 0;
  int dim = 0;

  std::span<const double> row(int i) const {
    return {inputs.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  void validate(const std::string& where) const;
};

// Glorot-style uniform weights, zero biases; deterministic in (spec, seed).
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

struct ForwardResult {
  double loss = 0.0;            // mean cross-entropy over the batch
  std::vector<int> predictions; // argmax class per row
};
ForwardResult forward_loss(const MlpSpec& spec, const ParamVector& params,
                           const Batch& batch);

struct BackwardResult {
  double loss = 0.0;
  ParamVector grad;  // d(mean loss)/d(params), same layout as ParamVector
};
BackwardResult backward(const MlpSpec& spec, const ParamVector& params,
                        const Batch& batch);

// Raw output-layer values for a single input row (no loss head applied).
std::vector<double> forward_logits(const MlpSpec& spec, const ParamVector& params,
                                   std::span<const double> input);

// Backprop an externally supplied d(loss)/d(logits) for a single input row.
// Used by the policy-gradient update, which does not go through the
// cross-entropy head.
ParamVector backward_from_logit_grad(const MlpSpec& spec, const ParamVector& params,
                                     std::span<const double> input,
                                     std::span<const double> logit_grad);

// Numerically stable in-place softmax.
void softmax_inplace(std::span<double> z);

}  // namespace flsim
