#include <doctest.h>

#include <cmath>
#include <limits>

#include "aggregation.hpp"
#include "rng.hpp"
#include "util.hpp"

using namespace flsim;

namespace {

ClientUpdate with_delta(std::vector<double> delta, int n_samples = 10) {
  ClientUpdate u;
  u.pseudo_gradient = std::move(delta);
  u.n_samples = n_samples;
  return u;
}

}  // namespace

TEST_CASE("softmax weighting hand examples") {
  const auto equal = softmax_weights(std::vector<double>{1, 1, 1}, 1.0);
  for (double w : equal.weights) CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const auto beta0 = softmax_weights(std::vector<double>{5, -2, 0.3, 9}, 0.0);
  for (double w : beta0.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-15));

  const auto pair = softmax_weights(std::vector<double>{0.0, std::log(2.0)}, 1.0);
  CHECK(std::fabs(pair.weights[0] - 2.0 / 3) < 1e-12);
  CHECK(std::fabs(pair.weights[1] - 1.0 / 3) < 1e-12);
}

TEST_CASE("lower loss always wins more weight, sharply as beta grows") {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(8));
    std::vector<double> losses(n);
    for (auto& l : losses) l = rng.uniform(-2.0, 6.0);
    const double beta = rng.uniform(0.01, 10.0);
    const auto w = softmax_weights(losses, beta);
    CHECK(std::fabs(w.sum() - 1.0) <= 1e-12);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (losses[i] < losses[j]) CHECK(w.weights[i] > w.weights[j]);
      }
    }
  }

  // beta -> inf concentrates on the argmin (gap >= 0.01)
  const auto sharp = softmax_weights(std::vector<double>{0.55, 0.54, 0.87}, 1e6);
  CHECK(sharp.weights[1] > 1.0 - 1e-6);
}

TEST_CASE("softmax weights are shift invariant") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(6));
    std::vector<double> losses(n), shifted(n);
    const double c = rng.uniform(-50.0, 50.0);
    for (int i = 0; i < n; ++i) {
      losses[i] = rng.uniform(0.0, 4.0);
      shifted[i] = losses[i] + c;
    }
    const auto a = softmax_weights(losses, 1.3);
    const auto b = softmax_weights(shifted, 1.3);
    for (int i = 0; i < n; ++i) {
      CHECK(std::fabs(a.weights[i] - b.weights[i]) <= 1e-12);
    }
  }
}

TEST_CASE("non-finite losses are excluded and the rest renormalized") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto w = softmax_weights(std::vector<double>{1.0, nan, 1.0}, 2.0);
  CHECK(w.weights[1] == 0.0);
  CHECK(w.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::fabs(w.sum() - 1.0) <= 1e-12);
  CHECK_THROWS_AS(softmax_weights(std::vector<double>{nan, nan}, 1.0),
                  NumericalError);
}

TEST_CASE("uniform weights") {
  const auto w4 = uniform_weights(4);
  for (double w : w4.weights) CHECK(w == 0.25);
  CHECK(uniform_weights(1).weights[0] == 1.0);
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(1000));
    CHECK(std::fabs(uniform_weights(n).sum() - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(uniform_weights(0), ConfigError);
}

TEST_CASE("aggregate computes the weighted slot-ordered sum") {
  std::vector<ClientUpdate> updates;
  updates.push_back(with_delta({2, 0}));
  updates.push_back(with_delta({0, 2}));
  AggregationWeights half{WeightStrategy::kUniform, {0.5, 0.5}};
  const ParamVector g = aggregate(updates, half);
  CHECK(g == ParamVector{1, 1});

  AggregationWeights first_only{WeightStrategy::kUniform, {1.0, 0.0}};
  CHECK(aggregate(updates, first_only) == updates[0].pseudo_gradient);
}

TEST_CASE("aggregate with uniform quarter weights equals the brute-force mean") {
  Rng rng(12);
  std::vector<ClientUpdate> updates;
  for (int j = 0; j < 4; ++j) {
    std::vector<double> d(6);
    for (auto& x : d) x = rng.gaussian();
    updates.push_back(with_delta(std::move(d)));
  }
  const auto g = aggregate(updates, uniform_weights(4));
  for (int i = 0; i < 6; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) sum += updates[j].pseudo_gradient[i];
    CHECK(g[i] == doctest::Approx(sum / 4.0).epsilon(1e-15));
  }
}

TEST_CASE("aggregate is linear in weights and in each pseudo-gradient") {
  Rng rng(21);
  std::vector<ClientUpdate> updates;
  for (int j = 0; j < 3; ++j) {
    std::vector<double> d(4);
    for (auto& x : d) x = rng.gaussian();
    updates.push_back(with_delta(std::move(d)));
  }
  AggregationWeights wa{WeightStrategy::kUniform, {0.2, 0.5, 0.3}};
  AggregationWeights wb{WeightStrategy::kUniform, {0.6, 0.1, 0.3}};
  AggregationWeights mix{WeightStrategy::kUniform, {}};
  for (int i = 0; i < 3; ++i) {
    mix.weights.push_back(0.5 * wa.weights[i] + 0.5 * wb.weights[i]);
  }
  const auto ga = aggregate(updates, wa);
  const auto gb = aggregate(updates, wb);
  const auto gm = aggregate(updates, mix);
  for (int i = 0; i < 4; ++i) {
    CHECK(gm[i] == doctest::Approx(0.5 * ga[i] + 0.5 * gb[i]).epsilon(1e-12));
  }

  // doubling one delta doubles its contribution
  auto doubled = updates;
  for (auto& x : doubled[1].pseudo_gradient) x *= 2.0;
  const auto gd = aggregate(doubled, wa);
  for (int i = 0; i < 4; ++i) {
    const double expected = ga[i] + wa.weights[1] * updates[1].pseudo_gradient[i];
    CHECK(gd[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("fedavg combine") {
  std::vector<ParamVector> models = {{0, 0}, {2, 2}};
  CHECK(fedavg_combine(models, std::vector<int>{5, 5}) == ParamVector{1, 1});

  std::vector<ParamVector> pair = {{0.0}, {4.0}};
  const auto w = fedavg_combine(pair, std::vector<int>{3, 1});
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<ParamVector> single = {{1.5, -2.5}};
  CHECK(fedavg_combine(single, std::vector<int>{7}) == single[0]);

  CHECK_THROWS_AS(fedavg_combine(models, std::vector<int>{1}), ConfigError);
  CHECK_THROWS_AS(fedavg_combine(models, std::vector<int>{1, 0}), ConfigError);
}

TEST_CASE("sample-size weights are proportional and normalized") {
  const auto w = sample_size_weights(std::vector<int>{30, 10});
  CHECK(w.weights[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(w.weights[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("zeroing failed slots preserves the simplex") {
  AggregationWeights w{WeightStrategy::kSoftmaxLoss, {0.4, 0.4, 0.2}};
  const auto out = zero_and_renormalize(w, {false, true, false});
  CHECK(out.weights[1] == 0.0);
  CHECK(std::fabs(out.sum() - 1.0) <= 1e-12);
  CHECK(out.weights[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK_THROWS_AS(zero_and_renormalize(w, {true, true, true}), NumericalError);
}

TEST_CASE("mismatched lengths are configuration errors") {
  std::vector<ClientUpdate> updates;
  updates.push_back(with_delta({1, 2}));
  updates.push_back(with_delta({1, 2, 3}));
  CHECK_THROWS_AS(aggregate(updates, uniform_weights(2)), ConfigError);
  updates.pop_back();
  CHECK_THROWS_AS(aggregate(updates, uniform_weights(2)), ConfigError);
  AggregationWeights bad{WeightStrategy::kUniform, {0.7, 0.7}};
  updates.push_back(with_delta({1, 2}));
  CHECK_THROWS_AS(aggregate(updates, bad), ConfigError);
}

TEST_CASE("weight entropy") {
  CHECK(weight_entropy(std::vector<double>{1.0}) == 0.0);
  CHECK(weight_entropy(std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(weight_entropy(std::vector<double>{1.0, 0.0}) == 0.0);
}
