#pragma once

#include <span>
#include <string>
#include <vector>

#include "client.hpp"
#include "nn.hpp"

namespace flsim {

enum class WeightStrategy { kUniform, kSoftmaxLoss, kRl, kSampleSize };

// Length-N nonnegative vector summing to 1; one entry per sampled slot.
struct AggregationWeights {
  WeightStrategy strategy = WeightStrategy::kUniform;
  std::vector<double> weights;

  double sum() const;
  void validate() const;  // throws ConfigError if off the simplex
};

// Softmax of the negative scaled losses, computed with max-subtraction.
// Non-finite losses get weight 0 and the rest is renormalized (logged).
AggregationWeights softmax_weights(std::span<const double> losses, double beta);

AggregationWeights uniform_weights(int n);

// alpha_j proportional to the client's sample count. Extra baseline.
AggregationWeights sample_size_weights(std::span<const int> n_samples);

// Weighted pseudo-gradient sum, accumulated per component in slot order.
ParamVector aggregate(std::span<const ClientUpdate> updates,
                      const AggregationWeights& weights);

// Sample-count-weighted mean of final local models (the FedAvg combine).
ParamVector fedavg_combine(std::span<const ParamVector> models,
                           std::span<const int> n_samples);

// Zeroes the masked slots and renormalizes the rest; preserves the simplex.
AggregationWeights zero_and_renormalize(const AggregationWeights& w,
                                        const std::vector<bool>& excluded);

double weight_entropy(std::span<const double> weights);

}  // namespace flsim
