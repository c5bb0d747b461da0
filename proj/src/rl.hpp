#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggregation.hpp"
#include "client.hpp"
#include "eval.hpp"
#include "nn.hpp"
#include "optim.hpp"
#include "rng.hpp"

namespace flsim {

// Weight-inference network: 5 weight layers with ReLU activations and a
// bottleneck second-to-last, mapping the 3N per-slot features to N logits
// that a softmax turns into aggregation weights.
struct PolicyNet {
  MlpSpec spec;
  ParamVector params;
  int n_slots = 0;
  double noise_sigma = 0.0;  // exploration noise on the logits

  void validate() const;
};

PolicyNet make_policy_net(int n_slots, double noise_sigma, std::uint64_t seed);

// Per-feature z-score across the N slots, flattened slot-major into the 3N
// network input. Slots marked excluded contribute nothing to the statistics
// and read as all-zero features.
std::vector<double> standardize_features(
    std::span<const std::array<double, 3>> per_slot,
    const std::vector<bool>& excluded = {});

// Forward pass to weights; with explore set, Gaussian noise of scale
// noise_sigma is added to the logits before the softmax.
AggregationWeights infer_weights(const PolicyNet& net,
                                 std::span<const double> features, bool explore,
                                 std::uint64_t seed);

struct RewardPolicy {
  double theta = 1e-3;     // similarity threshold on the error-rate gap
  double magnitude = 1.0;  // R
};

enum class ModelChoice { kRlModel, kSmModel };

struct RewardOutcome {
  double reward = 0.0;
  ModelChoice select = ModelChoice::kRlModel;
};

// +R and keep the RL candidate when it beats the softmax candidate by more
// than theta; +0.1R and keep it when the two are within theta; -R and fall
// back to the softmax candidate otherwise.
RewardOutcome compute_reward(double err_rl, double err_sm,
                             const RewardPolicy& policy);

struct ReplayEntry {
  std::vector<double> features;  // 3N, standardized
  std::vector<double> action;    // N inferred weights
  double reward = 0.0;
};

// Fixed-capacity ring buffer with FIFO eviction.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 1000) : capacity_(capacity) {}

  void push(ReplayEntry entry);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Entries ordered oldest to newest.
  const ReplayEntry& at(std::size_t i) const;
  // Uniform sample without replacement; indices into insertion order.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next write position once full
  std::vector<ReplayEntry> entries_;
};

// One REINFORCE step from a replay minibatch: ascends
// sum (r - baseline) * grad log p(action | features) under the
// Gaussian-perturbed-logit policy, applying a single Adam update.
// Returns false (and leaves the net untouched) when the memory holds fewer
// than batch_size entries.
bool update_policy(PolicyNet& net, const ReplayMemory& memory,
                   OptimizerState& opt, double reward_baseline, int batch_size,
                   Rng& rng);

// Everything the orchestrator owns for DGA_RL: the policy net, its optimizer,
// the replay memory and the running-mean reward baseline.
class RlAgent {
 public:
  RlAgent(int n_slots, double noise_sigma, double learning_rate,
          std::uint64_t seed);

  AggregationWeights infer(std::span<const double> features, bool explore,
                           std::uint64_t seed) const;
  void observe(std::vector<double> features, std::vector<double> action,
               double reward);
  // One update_policy step; no-op until the memory can fill a minibatch.
  bool learn(Rng& rng, int batch_size = 32);

  const PolicyNet& net() const { return net_; }
  PolicyNet& net() { return net_; }
  const ReplayMemory& memory() const { return memory_; }
  double baseline() const { return reward_count_ ? reward_sum_ / reward_count_ : 0.0; }

 private:
  PolicyNet net_;
  ReplayMemory memory_;
  OptimizerState opt_;
  double reward_sum_ = 0.0;
  std::uint64_t reward_count_ = 0;
};

struct DualCandidateResult {
  ParamVector chosen_model;
  OptimizerState chosen_opt;  // the chosen candidate's stepped optimizer state
  double err_rl = 0.0, err_sm = 0.0;
  double loss_rl = 0.0, loss_sm = 0.0;
  RewardOutcome outcome;
};

// Builds the two candidate global models from cloned optimizer states (so
// both see identical moments), scores them on the evaluation set, applies the
// reward policy and appends (features, rl action, reward) to the agent's
// replay memory.
DualCandidateResult dual_candidate_step(
    const MlpSpec& task, const ParamVector& global_model,
    const OptimizerState& server_opt, std::span<const ClientUpdate> updates,
    const AggregationWeights& sm_weights, const AggregationWeights& rl_weights,
    const Batch& eval_set, const RewardPolicy& policy, RlAgent& agent,
    std::span<const double> features);

void save_policy(const PolicyNet& net, const std::string& path);
PolicyNet load_policy(const std::string& path, double noise_sigma = 0.0);

}  // namespace flsim
