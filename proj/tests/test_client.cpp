#include <doctest.h>

#include <cmath>

#include "client.hpp"
#include "rng.hpp"
#include "util.hpp"

using namespace flsim;

namespace {

struct Toy {
  Dataset data;
  MlpSpec spec;
  ParamVector seed_params;
  ShardView view;
};

Toy make_toy(int classes = 3, int dim = 4, std::uint64_t seed = 5) {
  Toy toy;
  toy.data = gen_gaussian_task(classes, dim, 12, 3.0, seed);
  toy.spec = MlpSpec::dense({dim, 5, classes}, Activation::kReLU,
                            OutputHead::kSoftmaxCrossEntropy);
  toy.seed_params = init_params(toy.spec, seed + 1);
  std::vector<int> rows(toy.data.n);
  for (int i = 0; i < toy.data.n; ++i) rows[i] = i;
  toy.view = make_view(toy.data, rows);
  return toy;
}

OptimizerState sgd(double lr, std::size_t n) {
  return OptimizerState::make(OptimizerKind::kSGD, {.lr = lr}, n);
}

}  // namespace

TEST_CASE("one full-batch step returns eta times the gradient") {
  Toy toy = make_toy();
  const double eta = 0.1;
  const ClientUpdate u =
      local_train(toy.spec, toy.seed_params, toy.view,
                  sgd(eta, toy.seed_params.size()),
                  {.steps = 1, .batch_size = toy.view.size()}, 99);
  REQUIRE(!u.failed);
  CHECK(u.local_steps_run == 1);
  CHECK(u.n_samples == toy.view.size());
  const BackwardResult back =
      backward(toy.spec, toy.seed_params, toy.view.full_batch());
  CHECK(u.mean_local_loss == back.loss);
  for (std::size_t i = 0; i < u.pseudo_gradient.size(); ++i) {
    const double expected = eta * back.grad[i];
    CHECK(u.pseudo_gradient[i] ==
          doctest::Approx(expected).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("zero learning rate produces a zero pseudo-gradient") {
  Toy toy = make_toy();
  const ClientUpdate u =
      local_train(toy.spec, toy.seed_params, toy.view,
                  sgd(0.0, toy.seed_params.size()),
                  {.steps = 3, .batch_size = 8}, 42);
  REQUIRE(!u.failed);
  for (double g : u.pseudo_gradient) CHECK(g == 0.0);
  CHECK(u.grad_mag_mean == 0.0);
  CHECK(u.grad_mag_var == 0.0);
}

TEST_CASE("identical shards, seeds and configs give identical updates") {
  Toy toy = make_toy();
  const LocalTrainOptions opts{.steps = 0, .batch_size = 5};
  const ClientUpdate a = local_train(toy.spec, toy.seed_params, toy.view,
                                     sgd(0.05, toy.seed_params.size()), opts, 7);
  const ClientUpdate b = local_train(toy.spec, toy.seed_params, toy.view,
                                     sgd(0.05, toy.seed_params.size()), opts, 7);
  CHECK(a.pseudo_gradient == b.pseudo_gradient);
  CHECK(a.mean_local_loss == b.mean_local_loss);
  CHECK(a.grad_mag_mean == b.grad_mag_mean);
  CHECK(a.grad_mag_var == b.grad_mag_var);
}

TEST_CASE("steps=0 runs exactly one epoch") {
  Toy toy = make_toy();
  const ClientUpdate u =
      local_train(toy.spec, toy.seed_params, toy.view,
                  sgd(0.05, toy.seed_params.size()),
                  {.steps = 0, .batch_size = 5}, 7);
  REQUIRE(!u.failed);
  CHECK(u.local_steps_run == (toy.view.size() + 4) / 5);
}

TEST_CASE("feature extraction is the documented triple") {
  ClientUpdate u;
  u.mean_local_loss = 0.5;
  u.pseudo_gradient = {1.0, -1.0};
  u.grad_mag_mean = 1.0;
  u.grad_mag_var = 0.0;
  auto f = client_features(u);
  CHECK(f[0] == 0.5);
  CHECK(f[1] == 1.0);
  CHECK(f[2] == 0.0);

  // population variance of |{0, 2}| is 1, not the sample variance 2
  Toy toy = make_toy();
  ClientUpdate v;
  v.mean_local_loss = 0.7;
  v.pseudo_gradient = {0.0, 2.0};
  v.grad_mag_mean = 1.0;
  v.grad_mag_var = 1.0;
  auto g = client_features(v);
  CHECK(g[0] == 0.7);
  CHECK(g[1] == 1.0);
  CHECK(g[2] == 1.0);

  // and local_train itself uses the population convention
  const ClientUpdate real =
      local_train(toy.spec, toy.seed_params, toy.view,
                  sgd(0.1, toy.seed_params.size()),
                  {.steps = 1, .batch_size = toy.view.size()}, 3);
  double mean = 0.0;
  for (double x : real.pseudo_gradient) mean += std::fabs(x);
  mean /= real.pseudo_gradient.size();
  double var = 0.0;
  for (double x : real.pseudo_gradient) {
    var += (std::fabs(x) - mean) * (std::fabs(x) - mean);
  }
  var /= real.pseudo_gradient.size();
  CHECK(real.grad_mag_mean == doctest::Approx(mean).epsilon(1e-15));
  CHECK(real.grad_mag_var == doctest::Approx(var).epsilon(1e-15));
}

TEST_CASE("server step with eta 1 reproduces the final local model bitwise") {
  // the sign-convention soundness check: w - 1 * (w - w_final) == w_final
  Toy toy = make_toy();
  for (int steps : {1, 3}) {
    const ClientUpdate u =
        local_train(toy.spec, toy.seed_params, toy.view,
                    sgd(0.1, toy.seed_params.size()),
                    {.steps = steps, .batch_size = toy.view.size()}, 11);
    REQUIRE(!u.failed);
    // replicate the local pass to get the final model
    ParamVector expected = toy.seed_params;
    auto opt = sgd(0.1, expected.size());
    const Batch full = toy.view.full_batch();
    for (int t = 0; t < steps; ++t) {
      const auto back = backward(toy.spec, expected, full);
      opt.step(expected, back.grad);
    }
    ParamVector reconstructed(toy.seed_params.size());
    for (std::size_t i = 0; i < reconstructed.size(); ++i) {
      reconstructed[i] = toy.seed_params[i] - 1.0 * u.pseudo_gradient[i];
    }
    CHECK(reconstructed == expected);
  }
}

TEST_CASE("pseudo-gradient norm obeys the step-sum bound") {
  Toy toy = make_toy();
  const double eta = 0.05;
  const int steps = 4;
  const ClientUpdate u =
      local_train(toy.spec, toy.seed_params, toy.view,
                  sgd(eta, toy.seed_params.size()),
                  {.steps = steps, .batch_size = toy.view.size()}, 11);
  REQUIRE(!u.failed);
  // the same pass, accumulating eta * ||grad|| per step
  ParamVector p = toy.seed_params;
  auto opt = sgd(eta, p.size());
  const Batch full = toy.view.full_batch();
  double bound = 0.0;
  for (int t = 0; t < steps; ++t) {
    const auto back = backward(toy.spec, p, full);
    double norm = 0.0;
    for (double g : back.grad) norm += g * g;
    bound += eta * std::sqrt(norm);
    opt.step(p, back.grad);
  }
  double delta_norm = 0.0;
  for (double g : u.pseudo_gradient) delta_norm += g * g;
  CHECK(std::sqrt(delta_norm) <= bound + 1e-12);
}

TEST_CASE("non-finite training becomes a failure report, not a throw") {
  Toy toy = make_toy();
  ParamVector huge(toy.seed_params.size(), 1e308);
  const ClientUpdate u = local_train(toy.spec, huge, toy.view,
                                     sgd(0.1, huge.size()),
                                     {.steps = 2, .batch_size = 8}, 1);
  CHECK(u.failed);
  CHECK(!u.failure.empty());

  ShardView empty;
  empty.data = &toy.data;
  const ClientUpdate e = local_train(toy.spec, toy.seed_params, empty,
                                     sgd(0.1, toy.seed_params.size()),
                                     {.steps = 1, .batch_size = 8}, 1);
  CHECK(e.failed);
}
