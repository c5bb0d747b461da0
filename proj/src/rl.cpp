#include "rl.hpp"

#include <algorithm>
#include <cmath>

#include "checkpoint.hpp"
#include "util.hpp"

namespace flsim {

void PolicyNet::validate() const {
  spec.validate();
  if (n_slots < 1) throw ConfigError("policy net: n_slots must be >= 1");
  if (noise_sigma < 0.0) throw ConfigError("policy net: noise sigma must be >= 0");
  if (spec.n_weight_layers() != 5) {
    throw ConfigError("policy net: expected exactly 5 weight layers");
  }
  const auto& s = spec.layer_sizes;
  if (s.front() != 3 * n_slots || s.back() != n_slots) {
    throw ConfigError("policy net: input must be 3N and output N");
  }
  if (s[4] >= s[3]) {
    throw ConfigError("policy net: second-to-last layer must be a bottleneck");
  }
  if (params.size() != spec.param_count()) {
    throw ConfigError("policy net: parameter length mismatch");
  }
}

PolicyNet make_policy_net(int n_slots, double noise_sigma, std::uint64_t seed) {
  if (n_slots < 1) throw ConfigError("make_policy_net: n_slots must be >= 1");
  const int bottleneck = std::max(4, n_slots / 4);
  PolicyNet net;
  net.spec = MlpSpec::dense(
      {3 * n_slots, 4 * n_slots, 2 * n_slots, std::max(n_slots, bottleneck + 1),
       bottleneck, n_slots},
      Activation::kReLU, OutputHead::kLinear);
  net.params = init_params(net.spec, seed);
  net.n_slots = n_slots;
  net.noise_sigma = noise_sigma;
  net.validate();
  return net;
}

std::vector<double> standardize_features(
    std::span<const std::array<double, 3>> per_slot,
    const std::vector<bool>& excluded) {
  const std::size_t n = per_slot.size();
  if (n == 0) throw ConfigError("standardize_features: no slots");
  if (!excluded.empty() && excluded.size() != n) {
    throw ConfigError("standardize_features: mask length mismatch");
  }
  auto is_ok = [&](std::size_t j) { return excluded.empty() || !excluded[j]; };

  std::array<double, 3> mean{}, var{};
  std::size_t n_ok = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!is_ok(j)) continue;
    ++n_ok;
    for (int f = 0; f < 3; ++f) mean[f] += per_slot[j][f];
  }
  if (n_ok == 0) throw ConfigError("standardize_features: every slot excluded");
  for (int f = 0; f < 3; ++f) mean[f] /= static_cast<double>(n_ok);
  for (std::size_t j = 0; j < n; ++j) {
    if (!is_ok(j)) continue;
    for (int f = 0; f < 3; ++f) {
      const double d = per_slot[j][f] - mean[f];
      var[f] += d * d;
    }
  }
  std::array<double, 3> inv_std{};
  for (int f = 0; f < 3; ++f) {
    const double sd = std::sqrt(var[f] / static_cast<double>(n_ok));
    inv_std[f] = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  std::vector<double> out(3 * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!is_ok(j)) continue;  // excluded slots read as the per-feature mean
    for (int f = 0; f < 3; ++f) {
      out[3 * j + f] = (per_slot[j][f] - mean[f]) * inv_std[f];
    }
  }
  return out;
}

AggregationWeights infer_weights(const PolicyNet& net,
                                 std::span<const double> features, bool explore,
                                 std::uint64_t seed) {
  net.validate();
  for (double x : features) {
    if (!std::isfinite(x)) {
      throw ConfigError("infer_weights: non-finite feature");
    }
  }
  std::vector<double> logits = forward_logits(net.spec, net.params, features);
  if (explore && net.noise_sigma > 0.0) {
    Rng rng(seed);
    for (auto& z : logits) z += net.noise_sigma * rng.gaussian();
  }
  softmax_inplace(logits);
  AggregationWeights out;
  out.strategy = WeightStrategy::kRl;
  out.weights = std::move(logits);
  return out;
}

RewardOutcome compute_reward(double err_rl, double err_sm,
                             const RewardPolicy& policy) {
  if (policy.theta < 0.0 || policy.magnitude <= 0.0) {
    throw ConfigError("reward policy: theta >= 0 and R > 0 required");
  }
  if (err_sm - err_rl > policy.theta) {
    return {policy.magnitude, ModelChoice::kRlModel};
  }
  if (std::fabs(err_rl - err_sm) <= policy.theta) {
    return {0.1 * policy.magnitude, ModelChoice::kRlModel};
  }
  return {-policy.magnitude, ModelChoice::kSmModel};
}

void ReplayMemory::push(ReplayEntry entry) {
  if (entries_.size() < capacity_) {
    entries_.push_back(std::move(entry));
    return;
  }
  entries_[head_] = std::move(entry);
  head_ = (head_ + 1) % capacity_;
}

const ReplayEntry& ReplayMemory::at(std::size_t i) const {
  if (i >= entries_.size()) throw ConfigError("replay memory: index out of range");
  if (entries_.size() < capacity_) return entries_[i];
  return entries_[(head_ + i) % capacity_];
}

std::vector<std::size_t> ReplayMemory::sample_indices(std::size_t batch,
                                                      Rng& rng) const {
  if (batch > entries_.size()) {
    throw ConfigError("replay memory: sample larger than memory");
  }
  std::vector<std::size_t> idx(entries_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + rng.uniform_int(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(batch);
  return idx;
}

namespace {

// The stored action is the weight vector (softmax output); softmax is
// shift-invariant, so the noisy logits are recovered in the zero-mean gauge.
std::vector<double> centered_log(std::span<const double> weights) {
  std::vector<double> z(weights.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = std::log(std::max(weights[i], 1e-300));
    mean += z[i];
  }
  mean /= static_cast<double>(z.size());
  for (auto& v : z) v -= mean;
  return z;
}

void center_inplace(std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (auto& x : v) x -= mean;
}

}  // namespace

bool update_policy(PolicyNet& net, const ReplayMemory& memory,
                   OptimizerState& opt, double reward_baseline, int batch_size,
                   Rng& rng) {
  net.validate();
  if (batch_size < 1) throw ConfigError("update_policy: batch_size must be >= 1");
  if (memory.size() < static_cast<std::size_t>(batch_size)) {
    log_notice("update_policy: skipped (memory " + std::to_string(memory.size()) +
               " < batch " + std::to_string(batch_size) + ")");
    return false;
  }
  const auto indices = memory.sample_indices(batch_size, rng);
  const double sigma2 = std::max(net.noise_sigma * net.noise_sigma, 1e-12);
  ParamVector grad(net.params.size(), 0.0);
  const double inv_batch = 1.0 / batch_size;
  for (const std::size_t idx : indices) {
    const ReplayEntry& e = memory.at(idx);
    std::vector<double> mean_logits =
        forward_logits(net.spec, net.params, e.features);
    center_inplace(mean_logits);
    const std::vector<double> action_logits = centered_log(e.action);
    const double advantage = e.reward - reward_baseline;
    // d/d(logits) of -(r - b) * log N(action_logits | mean_logits, sigma^2 I)
    // in the zero-mean gauge; the projection keeps the gradient centered.
    std::vector<double> logit_grad(mean_logits.size());
    for (std::size_t i = 0; i < logit_grad.size(); ++i) {
      logit_grad[i] =
          -advantage * (action_logits[i] - mean_logits[i]) / sigma2 * inv_batch;
    }
    center_inplace(logit_grad);
    const ParamVector g =
        backward_from_logit_grad(net.spec, net.params, e.features, logit_grad);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
  }
  opt.step(net.params, grad);
  return true;
}

RlAgent::RlAgent(int n_slots, double noise_sigma, double learning_rate,
                 std::uint64_t seed)
    : net_(make_policy_net(n_slots, noise_sigma, seed)),
      memory_(1000),
      opt_(OptimizerState::make(OptimizerKind::kAdam, {.lr = learning_rate},
                                net_.params.size())) {}

AggregationWeights RlAgent::infer(std::span<const double> features, bool explore,
                                  std::uint64_t seed) const {
  return infer_weights(net_, features, explore, seed);
}

void RlAgent::observe(std::vector<double> features, std::vector<double> action,
                      double reward) {
  memory_.push({std::move(features), std::move(action), reward});
  reward_sum_ += reward;
  ++reward_count_;
}

bool RlAgent::learn(Rng& rng, int batch_size) {
  return update_policy(net_, memory_, opt_, baseline(), batch_size, rng);
}

DualCandidateResult dual_candidate_step(
    const MlpSpec& task, const ParamVector& global_model,
    const OptimizerState& server_opt, std::span<const ClientUpdate> updates,
    const AggregationWeights& sm_weights, const AggregationWeights& rl_weights,
    const Batch& eval_set, const RewardPolicy& policy, RlAgent& agent,
    std::span<const double> features) {
  const ParamVector g_rl = aggregate(updates, rl_weights);
  const ParamVector g_sm = aggregate(updates, sm_weights);

  // Both candidates start from identical optimizer moments.
  OptimizerState opt_rl = server_opt;
  OptimizerState opt_sm = server_opt;
  ParamVector model_rl = global_model;
  ParamVector model_sm = global_model;
  opt_rl.step(model_rl, g_rl);
  opt_sm.step(model_sm, g_sm);

  const EvalResult ev_rl = evaluate(task, model_rl, eval_set);
  const EvalResult ev_sm = evaluate(task, model_sm, eval_set);

  DualCandidateResult res;
  res.err_rl = ev_rl.error;
  res.err_sm = ev_sm.error;
  res.loss_rl = ev_rl.loss;
  res.loss_sm = ev_sm.loss;
  res.outcome = compute_reward(ev_rl.error, ev_sm.error, policy);
  if (res.outcome.select == ModelChoice::kRlModel) {
    res.chosen_model = std::move(model_rl);
    res.chosen_opt = std::move(opt_rl);
  } else {
    res.chosen_model = std::move(model_sm);
    res.chosen_opt = std::move(opt_sm);
  }
  agent.observe(std::vector<double>(features.begin(), features.end()),
                rl_weights.weights, res.outcome.reward);
  return res;
}

void save_policy(const PolicyNet& net, const std::string& path) {
  net.validate();
  save_mlp_container("FLRL1\n", net.spec, net.params, path);
}

PolicyNet load_policy(const std::string& path, double noise_sigma) {
  MlpSnapshot snap = load_mlp_container("FLRL1\n", path);
  PolicyNet net;
  net.spec = std::move(snap.spec);
  net.params = std::move(snap.params);
  net.n_slots = net.spec.output_dim();
  net.noise_sigma = noise_sigma;
  net.validate();
  return net;
}

}  // namespace flsim
