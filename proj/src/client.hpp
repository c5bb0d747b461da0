#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "data.hpp"
#include "nn.hpp"
#include "optim.hpp"

namespace flsim {

// One client's round output. The pseudo-gradient follows the descent
// convention seed - final, so the server step w -= lr * g moves
// toward the client's local optimum.
struct ClientUpdate {
  int client_id = -1;
  int slot = -1;
  ParamVector pseudo_gradient;
  double mean_local_loss = 0.0;  // mean of the per-step minibatch losses
  double grad_mag_mean = 0.0;    // mean of |pseudo_gradient| entries
  double grad_mag_var = 0.0;     // population variance of |pseudo_gradient|
  int n_samples = 0;
  int local_steps_run = 0;
  bool failed = false;
  std::string failure;
};

struct LocalTrainOptions {
  int steps = 0;       // 0 means one epoch over the shard
  int batch_size = 32;
};

// Runs the local pass from seed_params with a freshly reset optimizer and
// returns the pseudo-gradient plus the statistics the aggregation weighting
// needs. Minibatches are drawn by per-epoch shuffles, except that a batch
// covering the whole shard keeps the shard's natural row order. A non-finite
// loss mid-pass produces a failed update instead of throwing.
ClientUpdate local_train(const MlpSpec& spec, const ParamVector& seed_params,
                         const ShardView& shard, OptimizerState local_opt,
                         const LocalTrainOptions& opts, std::uint64_t seed);

// The 3-dim per-client slice of the weighting network's input.
std::array<double, 3> client_features(const ClientUpdate& update);

}  // namespace flsim
