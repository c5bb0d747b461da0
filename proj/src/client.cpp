#include "client.hpp"

#include <cmath>
#include <numeric>

#include "rng.hpp"
#include "util.hpp"

namespace flsim {

ClientUpdate local_train(const MlpSpec& spec, const ParamVector& seed_params,
                         const ShardView& shard, OptimizerState local_opt,
                         const LocalTrainOptions& opts, std::uint64_t seed) {
  ClientUpdate u;
  u.n_samples = shard.size();
  if (shard.size() == 0) {
    u.failed = true;
    u.failure = "empty shard";
    return u;
  }
  if (opts.batch_size < 1) throw ConfigError("local_train: batch_size must be >= 1");

  const int n = shard.size();
  const int batch = std::min(opts.batch_size, n);
  const int batches_per_epoch = (n + batch - 1) / batch;
  const int steps = opts.steps > 0 ? opts.steps : batches_per_epoch;
  const bool full_batch = batch >= n;

  local_opt.reset();
  Rng rng(seed);
  ParamVector params = seed_params;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  double loss_sum = 0.0;
  int in_epoch = batches_per_epoch;  // force a shuffle before the first step
  int cursor = 0;
  for (int t = 0; t < steps; ++t) {
    if (in_epoch == batches_per_epoch) {
      if (!full_batch) rng.shuffle(order);
      in_epoch = 0;
      cursor = 0;
    }
    const int count = std::min(batch, n - cursor);
    const Batch mb = shard.gather(order, cursor, count);
    cursor += count;
    ++in_epoch;
    BackwardResult back;
    try {
      back = backward(spec, params, mb);
    } catch (const NumericalError& e) {
      u.failed = true;
      u.failure = e.what();
      return u;
    }
    if (!std::isfinite(back.loss)) {
      u.failed = true;
      u.failure = "non-finite local loss at step " + std::to_string(t);
      return u;
    }
    loss_sum += back.loss;
    try {
      local_opt.step(params, back.grad);
    } catch (const NumericalError& e) {
      u.failed = true;
      u.failure = e.what();
      return u;
    }
  }

  u.local_steps_run = steps;
  u.mean_local_loss = loss_sum / steps;
  u.pseudo_gradient.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    u.pseudo_gradient[i] = seed_params[i] - params[i];
  }

  double mag_sum = 0.0;
  for (double g : u.pseudo_gradient) mag_sum += std::fabs(g);
  u.grad_mag_mean = mag_sum / u.pseudo_gradient.size();
  double var_sum = 0.0;
  for (double g : u.pseudo_gradient) {
    const double d = std::fabs(g) - u.grad_mag_mean;
    var_sum += d * d;
  }
  u.grad_mag_var = var_sum / u.pseudo_gradient.size();
  return u;
}

std::array<double, 3> client_features(const ClientUpdate& update) {
  return {update.mean_local_loss, update.grad_mag_mean, update.grad_mag_var};
}

}  // namespace flsim
