#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aggregation.hpp"
#include "client.hpp"
#include "data.hpp"
#include "eval.hpp"
#include "nn.hpp"
#include "optim.hpp"
#include "rl.hpp"

namespace flsim {

enum class AggregatorKind { kFedAvg, kHierUniform, kHierSoftmax, kHierRl, kHierSampleSize };

AggregatorKind aggregator_from_string(const std::string& name);
const char* aggregator_name(AggregatorKind kind);

struct FLConfig {
  int pool_size = 100;        // K
  int clients_per_round = 10; // N, sampled with replacement
  int max_rounds = 800;
  double target_error = 0.125;
  AggregatorKind aggregator = AggregatorKind::kHierSoftmax;
  double beta = 1.0;          // softmax temperature
  int local_steps = 0;        // 0 = one epoch over the shard
  int batch_size = 32;
  OptimizerKind client_optimizer = OptimizerKind::kSGD;
  OptimizerKind server_optimizer = OptimizerKind::kAdam;
  double client_lr = 0.015;    // local optimizer rate
  double server_lr = 0.012;    // global optimizer rate
  double rehearsal_lr = 0.01;  // server rehearsal rate
  double rl_lr = 1e-3;         // policy-net optimizer rate
  int rehearsal_steps = 0;    // per round; 0 disables the rehearsal pass
  int rehearsal_batch = 32;
  RehearsalSource rehearsal_source = RehearsalSource::kHeldOut;
  double theta = 1e-3;        // reward-policy similarity threshold
  double reward_magnitude = 1.0;
  double noise_sigma = 0.5;   // policy exploration noise
  std::uint64_t master_seed = 1;
  int threads = 0;            // 0 = FLSIM_THREADS env or hardware concurrency

  void validate() const;
};

// Everything one training run operates on. Shards index into `data`; the
// evaluation rows must be disjoint from shard and rehearsal rows.
struct SimEnv {
  MlpSpec task;
  const Dataset* data = nullptr;
  std::vector<std::vector<int>> shards;  // client -> rows
  std::vector<double> corruption;        // per-client noise rate (empty = none)
  std::vector<int> rehearsal_rows;
  std::vector<int> eval_rows;
  // Seed model w_0; when absent the orchestrator initializes from the master
  // seed.
  std::optional<ParamVector> initial_model;

  void validate(const FLConfig& config) const;
};

struct RoundRecord {
  int round = 0;  // 1-based
  AggregatorKind aggregator = AggregatorKind::kHierUniform;
  std::vector<int> slot_clients;  // sampled client id per slot
  std::vector<double> weights;    // per slot; zeros at failed slots
  double eval_loss = 0.0;
  double eval_error = 0.0;
  std::optional<double> reward;  // RL rounds only
  double wall_seconds = 0.0;
};

struct RlRoundLog {
  int round = 0;
  double err_rl = 0.0, err_sm = 0.0;
  ModelChoice selected = ModelChoice::kRlModel;
  double reward = 0.0;
};

struct RunResult {
  ParamVector final_model;
  std::vector<RoundRecord> records;
  std::optional<int> rounds_to_target;
  std::vector<RlRoundLog> rl_log;               // HierRl runs only
  std::uint64_t model_transfers = 0;            // 2 per sampled slot per round
  std::optional<std::string> abort_reason;      // set when a round failed
};

// N independent uniform draws from [0, pool_size); duplicates permitted.
std::vector<int> sample_clients(int pool_size, int n, Rng& rng);

// `steps` SGD minibatch updates on the rehearsal set;
// steps == 0 returns the model unchanged.
ParamVector rehearsal_step(const MlpSpec& task, ParamVector model,
                           const ShardView& rehearsal, double lr, int steps,
                           int batch_size, std::uint64_t seed);

// Owns all mutable training state. Rounds can be driven one at a time (tests)
// or to completion via run().
class Orchestrator {
 public:
  Orchestrator(const FLConfig& config, const SimEnv& env);
  ~Orchestrator();

  RoundRecord run_round();  // throws NumericalError when every client failed
  RunResult run();

  const ParamVector& model() const { return model_; }
  const OptimizerState& server_optimizer() const { return server_opt_; }
  const RlAgent* agent() const { return agent_.get(); }
  const std::vector<RlRoundLog>& rl_log() const { return rl_log_; }
  std::uint64_t model_transfers() const { return transfers_; }
  int rounds_done() const { return round_; }

 private:
  std::vector<ClientUpdate> dispatch_round(const std::vector<int>& slots);
  void apply_hier_update(const std::vector<ClientUpdate>& updates,
                         const std::vector<bool>& failed, RoundRecord& rec);
  void apply_fedavg(const std::vector<ClientUpdate>& updates,
                    const std::vector<bool>& failed, RoundRecord& rec);
  void apply_rl(const std::vector<ClientUpdate>& updates,
                const std::vector<bool>& failed, RoundRecord& rec);

  FLConfig config_;
  const SimEnv& env_;
  std::vector<ShardView> views_;  // per client, corruption applied
  Batch eval_batch_;
  ShardView rehearsal_view_;
  ParamVector model_;
  OptimizerState server_opt_;
  std::unique_ptr<RlAgent> agent_;
  int round_ = 0;
  std::uint64_t transfers_ = 0;
  std::vector<RlRoundLog> rl_log_;
  int n_workers_ = 1;
};

RunResult run_training(const FLConfig& config, const SimEnv& env);

}  // namespace flsim
