#include "orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "util.hpp"

namespace flsim {

namespace {

// Stream tags for per-round RNG derivation; every consumer gets its own
// stream so the outcome does not depend on evaluation order.
enum StreamTag : std::uint64_t {
  kSampleStream = 1,
  kClientStream = 2,
  kExploreStream = 3,
  kRehearsalStream = 4,
  kLearnStream = 5,
  kCorruptStream = 6,
  kModelInitStream = 7,
  kAgentInitStream = 8,
};

int resolve_workers(int configured, int n_tasks) {
  int w = configured;
  if (w <= 0) {
    if (const char* env = std::getenv("FLSIM_THREADS")) {
      w = std::atoi(env);
    }
  }
  if (w <= 0) w = static_cast<int>(std::thread::hardware_concurrency());
  if (w <= 0) w = 1;
  return std::max(1, std::min(w, n_tasks));
}

}  // namespace

AggregatorKind aggregator_from_string(const std::string& name) {
  if (name == "fedavg") return AggregatorKind::kFedAvg;
  if (name == "hier_uniform") return AggregatorKind::kHierUniform;
  if (name == "hier_softmax") return AggregatorKind::kHierSoftmax;
  if (name == "hier_rl") return AggregatorKind::kHierRl;
  if (name == "hier_sample_size") return AggregatorKind::kHierSampleSize;
  throw ConfigError("unknown aggregator '" + name +
                    "' (expected fedavg, hier_uniform, hier_softmax, hier_rl "
                    "or hier_sample_size)");
}

const char* aggregator_name(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kFedAvg: return "fedavg";
    case AggregatorKind::kHierUniform: return "hier_uniform";
    case AggregatorKind::kHierSoftmax: return "hier_softmax";
    case AggregatorKind::kHierRl: return "hier_rl";
    case AggregatorKind::kHierSampleSize: return "hier_sample_size";
  }
  return "?";
}

void FLConfig::validate() const {
  if (pool_size < 1) throw ConfigError("config: pool size K must be >= 1");
  if (clients_per_round < 1) {
    throw ConfigError("config: clients per round N must be >= 1");
  }
  if (max_rounds < 0) throw ConfigError("config: max_rounds must be >= 0");
  if (client_lr < 0 || server_lr < 0 || rehearsal_lr < 0 || rl_lr < 0) {
    throw ConfigError("config: learning rates must be >= 0");
  }
  if (beta < 0) throw ConfigError("config: beta must be >= 0");
  if (batch_size < 1 || rehearsal_batch < 1) {
    throw ConfigError("config: batch sizes must be >= 1");
  }
  if (local_steps < 0 || rehearsal_steps < 0) {
    throw ConfigError("config: step counts must be >= 0");
  }
  if (theta < 0 || reward_magnitude <= 0 || noise_sigma < 0) {
    throw ConfigError("config: invalid reward policy or noise scale");
  }
  if (clients_per_round > pool_size) {
    log_warn("N > K: sampling with replacement will repeat clients often");
  }
}

void SimEnv::validate(const FLConfig& config) const {
  task.validate();
  if (data == nullptr) throw ConfigError("environment: no dataset");
  data->validate();
  if (static_cast<int>(shards.size()) != config.pool_size) {
    throw ConfigError("environment: shard count does not match pool size K");
  }
  if (!corruption.empty() &&
      corruption.size() != shards.size()) {
    throw ConfigError("environment: corruption rates do not match pool size");
  }
  if (eval_rows.empty()) throw ConfigError("environment: empty evaluation set");
  // Disjointness audit: no evaluation row may ever be trained on.
  std::vector<bool> in_eval(data->n, false);
  for (int r : eval_rows) in_eval.at(r) = true;
  for (const auto& shard : shards) {
    for (int r : shard) {
      if (in_eval.at(r)) {
        throw ConfigError("environment: evaluation row " + std::to_string(r) +
                          " appears in a client shard");
      }
    }
  }
  for (int r : rehearsal_rows) {
    if (in_eval.at(r)) {
      throw ConfigError("environment: evaluation row " + std::to_string(r) +
                        " appears in the rehearsal set");
    }
  }
}

std::vector<int> sample_clients(int pool_size, int n, Rng& rng) {
  if (pool_size < 1) throw ConfigError("sample_clients: pool size must be >= 1");
  if (n < 1) throw ConfigError("sample_clients: N must be >= 1");
  std::vector<int> slots(n);
  for (auto& s : slots) s = static_cast<int>(rng.uniform_int(pool_size));
  return slots;
}

ParamVector rehearsal_step(const MlpSpec& task, ParamVector model,
                           const ShardView& rehearsal, double lr, int steps,
                           int batch_size, std::uint64_t seed) {
  if (steps < 0) throw ConfigError("rehearsal_step: steps must be >= 0");
  if (steps == 0) return model;
  if (rehearsal.size() == 0) {
    throw ConfigError("rehearsal_step: empty rehearsal set with steps > 0");
  }
  OptimizerState opt = OptimizerState::make(OptimizerKind::kSGD, {.lr = lr},
                                            model.size());
  const int n = rehearsal.size();
  const int batch = std::min(batch_size, n);
  const int per_epoch = (n + batch - 1) / batch;
  const bool full = batch >= n;
  Rng rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int in_epoch = per_epoch;
  int cursor = 0;
  for (int t = 0; t < steps; ++t) {
    if (in_epoch == per_epoch) {
      if (!full) rng.shuffle(order);
      in_epoch = 0;
      cursor = 0;
    }
    const int count = std::min(batch, n - cursor);
    const Batch mb = rehearsal.gather(order, cursor, count);
    cursor += count;
    ++in_epoch;
    const BackwardResult back = backward(task, model, mb);
    opt.step(model, back.grad);
  }
  return model;
}

Orchestrator::Orchestrator(const FLConfig& config, const SimEnv& env)
    : config_(config), env_(env) {
  config_.validate();
  env_.validate(config_);

  views_.reserve(env_.shards.size());
  for (std::size_t c = 0; c < env_.shards.size(); ++c) {
    const double rate = env_.corruption.empty() ? 0.0 : env_.corruption[c];
    if (rate > 0.0) {
      views_.push_back(corrupt(*env_.data, env_.shards[c], rate,
                               derive_seed(config_.master_seed, c, 0, kCorruptStream)));
    } else {
      views_.push_back(make_view(*env_.data, env_.shards[c]));
    }
  }
  eval_batch_ = make_view(*env_.data, env_.eval_rows).full_batch();
  rehearsal_view_ = make_view(*env_.data, env_.rehearsal_rows);

  if (env_.initial_model) {
    if (env_.initial_model->size() != env_.task.param_count()) {
      throw ConfigError("environment: initial model length does not match the task");
    }
    model_ = *env_.initial_model;
  } else {
    model_ = init_params(env_.task, derive_seed(config_.master_seed, 0, 0,
                                                kModelInitStream));
  }
  server_opt_ = OptimizerState::make(config_.server_optimizer,
                                     {.lr = config_.server_lr}, model_.size());
  if (config_.aggregator == AggregatorKind::kHierRl) {
    agent_ = std::make_unique<RlAgent>(
        config_.clients_per_round, config_.noise_sigma, config_.rl_lr,
        derive_seed(config_.master_seed, 0, 0, kAgentInitStream));
  }
  n_workers_ = resolve_workers(config_.threads, config_.clients_per_round);
}

Orchestrator::~Orchestrator() = default;

std::vector<ClientUpdate> Orchestrator::dispatch_round(
    const std::vector<int>& slots) {
  const int n = static_cast<int>(slots.size());
  std::vector<ClientUpdate> updates(n);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const int s = next.fetch_add(1);
      if (s >= n) return;
      try {
        OptimizerState local = OptimizerState::make(
            config_.client_optimizer, {.lr = config_.client_lr}, model_.size());
        updates[s] = local_train(
            env_.task, model_, views_[slots[s]], std::move(local),
            {.steps = config_.local_steps, .batch_size = config_.batch_size},
            derive_seed(config_.master_seed, static_cast<std::uint64_t>(round_),
                        static_cast<std::uint64_t>(s), kClientStream));
        updates[s].client_id = slots[s];
        updates[s].slot = s;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers_; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  // Model down + pseudo-gradient up per surviving slot.
  for (const auto& u : updates) transfers_ += u.failed ? 1 : 2;
  return updates;
}

namespace {

// Expands survivor weights back to one entry per slot, zeros at failures.
std::vector<double> expand_weights(const std::vector<double>& filtered,
                                   const std::vector<bool>& failed) {
  std::vector<double> full(failed.size(), 0.0);
  std::size_t k = 0;
  for (std::size_t j = 0; j < failed.size(); ++j) {
    if (!failed[j]) full[j] = filtered[k++];
  }
  return full;
}

std::vector<ClientUpdate> filter_updates(const std::vector<ClientUpdate>& updates,
                                         const std::vector<bool>& failed) {
  std::vector<ClientUpdate> ok;
  for (std::size_t j = 0; j < updates.size(); ++j) {
    if (!failed[j]) ok.push_back(updates[j]);
  }
  return ok;
}

}  // namespace

void Orchestrator::apply_hier_update(const std::vector<ClientUpdate>& updates,
                                     const std::vector<bool>& failed,
                                     RoundRecord& rec) {
  const auto ok = filter_updates(updates, failed);
  AggregationWeights w;
  switch (config_.aggregator) {
    case AggregatorKind::kHierUniform:
      w = uniform_weights(static_cast<int>(ok.size()));
      break;
    case AggregatorKind::kHierSoftmax: {
      std::vector<double> losses;
      losses.reserve(ok.size());
      for (const auto& u : ok) losses.push_back(u.mean_local_loss);
      w = softmax_weights(losses, config_.beta);
      break;
    }
    case AggregatorKind::kHierSampleSize: {
      std::vector<int> counts;
      counts.reserve(ok.size());
      for (const auto& u : ok) counts.push_back(u.n_samples);
      w = sample_size_weights(counts);
      break;
    }
    default:
      throw ConfigError("apply_hier_update: unexpected aggregator");
  }
  const ParamVector g = aggregate(ok, w);
  server_opt_.step(model_, g);
  rec.weights = expand_weights(w.weights, failed);
}

void Orchestrator::apply_fedavg(const std::vector<ClientUpdate>& updates,
                                const std::vector<bool>& failed,
                                RoundRecord& rec) {
  const auto ok = filter_updates(updates, failed);
  std::vector<ParamVector> finals;
  std::vector<int> counts;
  finals.reserve(ok.size());
  counts.reserve(ok.size());
  for (const auto& u : ok) {
    ParamVector final_model(model_.size());
    for (std::size_t i = 0; i < model_.size(); ++i) {
      final_model[i] = model_[i] - u.pseudo_gradient[i];
    }
    finals.push_back(std::move(final_model));
    counts.push_back(u.n_samples);
  }
  model_ = fedavg_combine(finals, counts);
  rec.weights = expand_weights(sample_size_weights(counts).weights, failed);
}

void Orchestrator::apply_rl(const std::vector<ClientUpdate>& updates,
                            const std::vector<bool>& failed, RoundRecord& rec) {
  std::vector<std::array<double, 3>> feats(updates.size());
  std::vector<double> losses(updates.size());
  for (std::size_t j = 0; j < updates.size(); ++j) {
    feats[j] = client_features(updates[j]);
    losses[j] = failed[j] ? std::numeric_limits<double>::quiet_NaN()
                          : updates[j].mean_local_loss;
  }
  const std::vector<double> features = standardize_features(feats, failed);
  // Softmax side: failed slots carry NaN losses and are excluded there.
  const AggregationWeights sm_full = softmax_weights(losses, config_.beta);
  const AggregationWeights rl_raw = infer_weights(
      agent_->net(), features, /*explore=*/true,
      derive_seed(config_.master_seed, static_cast<std::uint64_t>(round_), 0,
                  kExploreStream));
  const AggregationWeights rl_full = zero_and_renormalize(rl_raw, failed);

  const auto ok = filter_updates(updates, failed);
  AggregationWeights sm_ok, rl_ok;
  sm_ok.strategy = WeightStrategy::kSoftmaxLoss;
  rl_ok.strategy = WeightStrategy::kRl;
  for (std::size_t j = 0; j < updates.size(); ++j) {
    if (failed[j]) continue;
    sm_ok.weights.push_back(sm_full.weights[j]);
    rl_ok.weights.push_back(rl_full.weights[j]);
  }

  DualCandidateResult res = dual_candidate_step(
      env_.task, model_, server_opt_, ok, sm_ok, rl_ok, eval_batch_,
      {.theta = config_.theta, .magnitude = config_.reward_magnitude}, *agent_,
      features);
  // The replay entry keeps the policy's own (raw) action rather than the
  // renormalized one, so the log-probability matches what the net emitted.
  model_ = std::move(res.chosen_model);
  server_opt_ = std::move(res.chosen_opt);
  rl_log_.push_back({rec.round, res.err_rl, res.err_sm, res.outcome.select,
                     res.outcome.reward});
  rec.reward = res.outcome.reward;
  rec.weights = res.outcome.select == ModelChoice::kRlModel
                    ? rl_full.weights
                    : sm_full.weights;

  Rng learn_rng(derive_seed(config_.master_seed,
                            static_cast<std::uint64_t>(round_), 0, kLearnStream));
  agent_->learn(learn_rng);
}

RoundRecord Orchestrator::run_round() {
  const auto t0 = std::chrono::steady_clock::now();
  ++round_;
  RoundRecord rec;
  rec.round = round_;
  rec.aggregator = config_.aggregator;

  Rng round_rng(derive_seed(config_.master_seed,
                            static_cast<std::uint64_t>(round_), 0, kSampleStream));
  const std::vector<int> slots =
      sample_clients(config_.pool_size, config_.clients_per_round, round_rng);
  rec.slot_clients = slots;
  const std::vector<ClientUpdate> updates = dispatch_round(slots);

  std::vector<bool> failed(updates.size());
  int n_failed = 0;
  for (std::size_t j = 0; j < updates.size(); ++j) {
    failed[j] = updates[j].failed;
    if (failed[j]) {
      ++n_failed;
      log_warn("round " + std::to_string(round_) + ": client " +
               std::to_string(updates[j].client_id) + " failed (" +
               updates[j].failure + "), excluded");
    }
  }
  if (n_failed == static_cast<int>(updates.size())) {
    throw NumericalError("round " + std::to_string(round_) +
                         ": all sampled clients failed");
  }

  switch (config_.aggregator) {
    case AggregatorKind::kFedAvg:
      apply_fedavg(updates, failed, rec);
      break;
    case AggregatorKind::kHierRl:
      apply_rl(updates, failed, rec);
      break;
    default:
      apply_hier_update(updates, failed, rec);
      break;
  }

  if (config_.rehearsal_steps > 0) {
    model_ = rehearsal_step(
        env_.task, std::move(model_), rehearsal_view_, config_.rehearsal_lr,
        config_.rehearsal_steps, config_.rehearsal_batch,
        derive_seed(config_.master_seed, static_cast<std::uint64_t>(round_), 0,
                    kRehearsalStream));
  }

  const EvalResult ev = evaluate(env_.task, model_, eval_batch_);
  rec.eval_loss = ev.loss;
  rec.eval_error = ev.error;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

RunResult Orchestrator::run() {
  RunResult result;
  for (int t = 0; t < config_.max_rounds; ++t) {
    RoundRecord rec;
    try {
      rec = run_round();
    } catch (const NumericalError& e) {
      result.abort_reason = e.what();
      log_warn(std::string("run aborted: ") + e.what());
      break;
    }
    result.records.push_back(rec);
    if (!result.rounds_to_target && rec.eval_error <= config_.target_error) {
      result.rounds_to_target = rec.round;
      break;
    }
  }
  result.final_model = model_;
  result.rl_log = rl_log_;
  result.model_transfers = transfers_;
  return result;
}

RunResult run_training(const FLConfig& config, const SimEnv& env) {
  Orchestrator orch(config, env);
  return orch.run();
}

}  // namespace flsim
