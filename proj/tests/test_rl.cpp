#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "rl.hpp"
#include "rng.hpp"
#include "util.hpp"

using namespace flsim;

namespace {

ReplayEntry entry(int n_slots, double reward, double feature_fill = 0.1) {
  ReplayEntry e;
  e.features.assign(3 * n_slots, feature_fill);
  e.action.assign(n_slots, 1.0 / n_slots);
  e.reward = reward;
  return e;
}

}  // namespace

TEST_CASE("policy net has 5 weight layers with a bottleneck") {
  for (int n : {4, 10, 100}) {
    const PolicyNet net = make_policy_net(n, 0.5, 1);
    CHECK(net.spec.n_weight_layers() == 5);
    CHECK(net.spec.input_dim() == 3 * n);
    CHECK(net.spec.output_dim() == n);
    const auto& s = net.spec.layer_sizes;
    CHECK(s[4] < s[3]);  // second-to-last is the bottleneck
    for (Activation a : net.spec.activations) CHECK(a == Activation::kReLU);
  }
}

TEST_CASE("fresh net on zero features infers exactly uniform weights") {
  const PolicyNet net = make_policy_net(6, 0.0, 3);
  const std::vector<double> zeros(18, 0.0);
  const auto w = infer_weights(net, zeros, false, 0);
  for (double x : w.weights) CHECK(x == 1.0 / 6);
}

TEST_CASE("inference is deterministic without noise and on a fixed seed") {
  const PolicyNet quiet = make_policy_net(5, 0.0, 4);
  std::vector<double> f(15);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.1 * (i % 7) - 0.3;
  CHECK(infer_weights(quiet, f, true, 9).weights ==
        infer_weights(quiet, f, true, 10).weights);  // sigma = 0: seed ignored

  PolicyNet noisy = quiet;
  noisy.noise_sigma = 0.5;
  CHECK(infer_weights(noisy, f, true, 9).weights ==
        infer_weights(noisy, f, true, 9).weights);
  CHECK(infer_weights(noisy, f, true, 9).weights !=
        infer_weights(noisy, f, true, 10).weights);
  // explore off ignores noise entirely
  CHECK(infer_weights(noisy, f, false, 9).weights ==
        infer_weights(quiet, f, false, 0).weights);
}

TEST_CASE("inferred weights stay on the probability simplex") {
  Rng rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(7));
    const PolicyNet net = make_policy_net(n, 0.3, rng.next_u64());
    std::vector<double> f(3 * n);
    for (auto& x : f) x = rng.gaussian();
    const auto w = infer_weights(net, f, trial % 2 == 0, rng.next_u64());
    double sum = 0.0;
    for (double x : w.weights) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("feature standardization is a per-feature z-score across slots") {
  std::vector<std::array<double, 3>> slots = {
      {2.0, 1.0, 0.0}, {4.0, 1.0, 0.0}, {6.0, 1.0, 0.0}};
  const auto f = standardize_features(slots);
  REQUIRE(f.size() == 9);
  // loss column: mean 4, population std sqrt(8/3)
  const double sd = std::sqrt(8.0 / 3.0);
  CHECK(f[0] == doctest::Approx(-2.0 / sd).epsilon(1e-12));
  CHECK(f[3] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f[6] == doctest::Approx(2.0 / sd).epsilon(1e-12));
  // constant columns collapse to zero rather than dividing by zero
  CHECK(f[1] == 0.0);
  CHECK(f[2] == 0.0);

  const auto masked = standardize_features(slots, {false, true, false});
  CHECK(masked[3] == 0.0);  // excluded slot reads neutral
  CHECK(masked[4] == 0.0);
  CHECK(masked[0] == doctest::Approx(-1.0).epsilon(1e-12));  // std over {2,6}
}

TEST_CASE("reward policy follows the prose semantics") {
  const RewardPolicy policy{.theta = 0.001, .magnitude = 1.0};
  auto better = compute_reward(0.10, 0.12, policy);
  CHECK(better.reward == 1.0);
  CHECK(better.select == ModelChoice::kRlModel);

  auto worse = compute_reward(0.12, 0.10, policy);
  CHECK(worse.reward == -1.0);
  CHECK(worse.select == ModelChoice::kSmModel);

  auto similar = compute_reward(0.1005, 0.1000, policy);
  CHECK(similar.reward == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(similar.select == ModelChoice::kRlModel);
}

TEST_CASE("reward is antisymmetric outside the similarity band") {
  Rng rng(6);
  const RewardPolicy policy{.theta = 0.01, .magnitude = 2.0};
  for (int trial = 0; trial < 200; ++trial) {
    const double a = rng.uniform(), b = rng.uniform();
    if (std::fabs(a - b) <= policy.theta) continue;
    const auto fwd = compute_reward(a, b, policy);
    const auto rev = compute_reward(b, a, policy);
    CHECK(fwd.reward == -rev.reward);
    CHECK(fwd.select != rev.select);
  }
}

TEST_CASE("replay memory caps at its capacity with FIFO eviction") {
  ReplayMemory mem(1000);
  for (int i = 0; i < 1005; ++i) {
    mem.push(entry(2, static_cast<double>(i)));
  }
  CHECK(mem.size() == 1000);
  CHECK(mem.at(0).reward == 5.0);     // oldest five evicted
  CHECK(mem.at(999).reward == 1004.0);

  Rng rng(1);
  const auto idx = mem.sample_indices(32, rng);
  CHECK(idx.size() == 32);
  std::vector<bool> seen(1000, false);
  for (auto i : idx) {
    CHECK(!seen[i]);  // without replacement
    seen[i] = true;
  }
}

TEST_CASE("update_policy is a no-op below one minibatch of memory") {
  PolicyNet net = make_policy_net(3, 0.5, 7);
  const ParamVector before = net.params;
  ReplayMemory mem;
  for (int i = 0; i < 10; ++i) mem.push(entry(3, 1.0));
  auto opt = OptimizerState::make(OptimizerKind::kAdam, {.lr = 1e-3},
                                  net.params.size());
  Rng rng(2);
  CHECK(!update_policy(net, mem, opt, 0.0, 32, rng));
  CHECK(net.params == before);
}

TEST_CASE("zero advantage leaves the net unchanged") {
  PolicyNet net = make_policy_net(3, 0.5, 7);
  const ParamVector before = net.params;
  ReplayMemory mem;
  for (int i = 0; i < 40; ++i) mem.push(entry(3, 0.7, 0.05 * i));
  auto opt = OptimizerState::make(OptimizerKind::kAdam, {.lr = 1e-3},
                                  net.params.size());
  Rng rng(2);
  CHECK(update_policy(net, mem, opt, /*baseline=*/0.7, 32, rng));
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(std::fabs(net.params[i] - before[i]) <= 1e-12);
  }
}

TEST_CASE("a rewarded action pulls the mean logits toward it") {
  PolicyNet net = make_policy_net(2, 0.5, 13);
  std::vector<double> features = {0.4, -0.2, 0.8, -0.4, 0.2, -0.8};
  auto centered = [](std::vector<double> z) {
    const double m = (z[0] + z[1]) / 2;
    return std::vector<double>{z[0] - m, z[1] - m};
  };
  const auto before = centered(forward_logits(net.spec, net.params, features));

  // one replayed action with logit 0 pushed up, rewarded above baseline
  std::vector<double> action_logits = {before[0] + 1.0, before[1] - 1.0};
  std::vector<double> action(action_logits);
  softmax_inplace(action);
  ReplayMemory mem;
  for (int i = 0; i < 8; ++i) mem.push({features, action, 1.0});
  auto opt = OptimizerState::make(OptimizerKind::kAdam, {.lr = 0.05},
                                  net.params.size());
  Rng rng(3);
  REQUIRE(update_policy(net, mem, opt, /*baseline=*/0.0, 8, rng));

  const auto after = centered(forward_logits(net.spec, net.params, features));
  CHECK(after[0] > before[0]);
  CHECK(after[1] < before[1]);
}

TEST_CASE("dual candidates agree when the weight vectors agree") {
  const Dataset d = gen_gaussian_task(3, 4, 30, 3.0, 11);
  const auto task = MlpSpec::dense({4, 6, 3}, Activation::kReLU,
                                   OutputHead::kSoftmaxCrossEntropy);
  const ParamVector model = init_params(task, 5);
  auto server = OptimizerState::make(OptimizerKind::kAdam, {.lr = 0.01},
                                     model.size());
  std::vector<int> rows(d.n);
  for (int i = 0; i < d.n; ++i) rows[i] = i;
  const Batch eval_set = make_view(d, rows).full_batch();

  std::vector<ClientUpdate> updates(2);
  Rng rng(3);
  for (auto& u : updates) {
    u.pseudo_gradient.resize(model.size());
    for (auto& g : u.pseudo_gradient) g = 0.01 * rng.gaussian();
    u.mean_local_loss = rng.uniform(0.5, 1.5);
    u.n_samples = 10;
  }
  AggregationWeights same{WeightStrategy::kRl, {0.5, 0.5}};
  RlAgent agent(2, 0.0, 1e-3, 17);
  std::vector<double> features(6, 0.0);

  const auto res = dual_candidate_step(task, model, server, updates, same, same,
                                       eval_set, {.theta = 0.001, .magnitude = 1.0},
                                       agent, features);
  CHECK(res.err_rl == res.err_sm);
  CHECK(res.outcome.reward == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(res.outcome.select == ModelChoice::kRlModel);
  CHECK(agent.memory().size() == 1);
  CHECK(agent.baseline() == doctest::Approx(0.1).epsilon(1e-15));

  // theta = 1 always lands in the similarity branch
  AggregationWeights skew{WeightStrategy::kRl, {0.9, 0.1}};
  const auto always = dual_candidate_step(task, model, server, updates, same,
                                          skew, eval_set,
                                          {.theta = 1.0, .magnitude = 1.0},
                                          agent, features);
  CHECK(always.outcome.select == ModelChoice::kRlModel);
}

TEST_CASE("downweighting a fully corrupted client never loses to softmax") {
  const Dataset d = gen_gaussian_task(4, 4, 60, 4.0, 23);
  const auto task = MlpSpec::dense({4, 8, 4}, Activation::kReLU,
                                   OutputHead::kSoftmaxCrossEntropy);
  const ParamVector model = init_params(task, 2);
  auto server =
      OptimizerState::make(OptimizerKind::kSGD, {.lr = 1.0}, model.size());

  std::vector<int> clean_rows, bad_rows, eval_rows;
  for (int i = 0; i < d.n; ++i) {
    if (i % 3 == 0) clean_rows.push_back(i);
    else if (i % 3 == 1) bad_rows.push_back(i);
    else eval_rows.push_back(i);
  }
  const Batch eval_set = make_view(d, eval_rows).full_batch();
  auto sgd = OptimizerState::make(OptimizerKind::kSGD, {.lr = 0.05},
                                  model.size());
  std::vector<ClientUpdate> updates(2);
  updates[0] = local_train(task, model, make_view(d, clean_rows), sgd,
                           {.steps = 0, .batch_size = 16}, 51);
  updates[1] = local_train(task, model, corrupt(d, bad_rows, 1.0, 4), sgd,
                           {.steps = 0, .batch_size = 16}, 52);
  REQUIRE(!updates[0].failed);
  REQUIRE(!updates[1].failed);

  const AggregationWeights sm = softmax_weights(
      std::vector<double>{updates[0].mean_local_loss, updates[1].mean_local_loss},
      1.0);
  const AggregationWeights rl{WeightStrategy::kRl, {1.0, 0.0}};
  RlAgent agent(2, 0.0, 1e-3, 9);
  const RewardPolicy policy{.theta = 0.001, .magnitude = 1.0};
  const auto res = dual_candidate_step(task, model, server, updates, sm, rl,
                                       eval_set, policy, agent,
                                       std::vector<double>(6, 0.0));

  // brute force: build both candidates directly and compare
  for (auto side : {&rl, &sm}) {
    OptimizerState opt = server;
    ParamVector cand = model;
    opt.step(cand, aggregate(updates, *side));
    const double err = evaluate(task, cand, eval_set).error;
    if (side == &rl) CHECK(err == res.err_rl);
    else CHECK(err == res.err_sm);
  }
  const double chosen_err = evaluate(task, res.chosen_model, eval_set).error;
  CHECK(chosen_err <= res.err_sm + policy.theta);
}

TEST_CASE("policy checkpoints round-trip through the FLRL1 container") {
  const PolicyNet net = make_policy_net(5, 0.25, 31);
  const std::string path = "flsim_test_policy.flrl";
  save_policy(net, path);
  const PolicyNet back = load_policy(path, 0.25);
  CHECK(back.params == net.params);
  CHECK(back.spec == net.spec);
  CHECK(back.n_slots == 5);
  std::remove(path.c_str());
}
