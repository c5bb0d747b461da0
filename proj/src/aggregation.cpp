#include "aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "util.hpp"

namespace flsim {

double AggregationWeights::sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

void AggregationWeights::validate() const {
  if (weights.empty()) throw ConfigError("aggregation weights: empty");
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("aggregation weights: negative or NaN entry");
  }
  if (std::fabs(sum() - 1.0) > 1e-12) {
    throw ConfigError("aggregation weights: do not sum to 1");
  }
}

AggregationWeights softmax_weights(std::span<const double> losses, double beta) {
  if (losses.empty()) throw ConfigError("softmax_weights: no losses");
  if (!(beta >= 0.0)) throw ConfigError("softmax_weights: beta must be >= 0");
  AggregationWeights out;
  out.strategy = WeightStrategy::kSoftmaxLoss;
  out.weights.assign(losses.size(), 0.0);

  int n_finite = 0;
  double m = -std::numeric_limits<double>::infinity();
  for (double l : losses) {
    if (std::isfinite(l)) {
      ++n_finite;
      m = std::max(m, -beta * l);
    }
  }
  if (n_finite == 0) {
    throw NumericalError("softmax_weights: every loss is non-finite");
  }
  if (n_finite < static_cast<int>(losses.size())) {
    log_notice("softmax_weights: excluding " +
               std::to_string(losses.size() - n_finite) +
               " slot(s) with non-finite loss");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < losses.size(); ++j) {
    if (!std::isfinite(losses[j])) continue;
    out.weights[j] = std::exp(-beta * losses[j] - m);
    sum += out.weights[j];
  }
  for (auto& w : out.weights) w /= sum;
  return out;
}

AggregationWeights uniform_weights(int n) {
  if (n < 1) throw ConfigError("uniform_weights: n must be >= 1");
  AggregationWeights out;
  out.strategy = WeightStrategy::kUniform;
  out.weights.assign(n, 1.0 / n);
  return out;
}

AggregationWeights sample_size_weights(std::span<const int> n_samples) {
  if (n_samples.empty()) throw ConfigError("sample_size_weights: empty");
  double total = 0.0;
  for (int n : n_samples) {
    if (n < 1) throw ConfigError("sample_size_weights: counts must be positive");
    total += n;
  }
  AggregationWeights out;
  out.strategy = WeightStrategy::kSampleSize;
  out.weights.reserve(n_samples.size());
  for (int n : n_samples) out.weights.push_back(n / total);
  return out;
}

ParamVector aggregate(std::span<const ClientUpdate> updates,
                      const AggregationWeights& weights) {
  if (updates.size() != weights.weights.size()) {
    throw ConfigError("aggregate: updates/weights length mismatch");
  }
  weights.validate();
  if (updates.empty()) throw ConfigError("aggregate: no updates");
  const std::size_t p = updates[0].pseudo_gradient.size();
  ParamVector g(p, 0.0);
  for (std::size_t j = 0; j < updates.size(); ++j) {
    if (updates[j].pseudo_gradient.size() != p) {
      throw ConfigError("aggregate: pseudo-gradient length mismatch");
    }
    const double a = weights.weights[j];
    const auto& delta = updates[j].pseudo_gradient;
    for (std::size_t i = 0; i < p; ++i) g[i] += a * delta[i];
  }
  return g;
}

ParamVector fedavg_combine(std::span<const ParamVector> models,
                           std::span<const int> n_samples) {
  if (models.empty() || models.size() != n_samples.size()) {
    throw ConfigError("fedavg_combine: models/counts length mismatch");
  }
  const auto w = sample_size_weights(n_samples);
  const std::size_t p = models[0].size();
  ParamVector avg(p, 0.0);
  for (std::size_t j = 0; j < models.size(); ++j) {
    if (models[j].size() != p) {
      throw ConfigError("fedavg_combine: model length mismatch");
    }
    for (std::size_t i = 0; i < p; ++i) avg[i] += w.weights[j] * models[j][i];
  }
  return avg;
}

AggregationWeights zero_and_renormalize(const AggregationWeights& w,
                                        const std::vector<bool>& excluded) {
  if (w.weights.size() != excluded.size()) {
    throw ConfigError("zero_and_renormalize: mask length mismatch");
  }
  AggregationWeights out = w;
  double sum = 0.0;
  for (std::size_t j = 0; j < out.weights.size(); ++j) {
    if (excluded[j]) out.weights[j] = 0.0;
    sum += out.weights[j];
  }
  if (sum <= 0.0) {
    throw NumericalError("zero_and_renormalize: no surviving weight mass");
  }
  for (auto& x : out.weights) x /= sum;
  return out;
}

double weight_entropy(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

}  // namespace flsim
