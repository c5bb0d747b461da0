#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "config.hpp"
#include "util.hpp"

using namespace flsim;

TEST_CASE("minimal config gets defaults, required keys stay required") {
  const Experiment exp = parse_experiment(R"({"classes": 5, "dim": 8})", "t");
  CHECK(exp.classes == 5);
  CHECK(exp.dim == 8);
  CHECK(exp.fl.pool_size == 100);
  CHECK(exp.fl.aggregator == AggregatorKind::kHierSoftmax);
  CHECK(exp.fl.client_optimizer == OptimizerKind::kSGD);
  CHECK(exp.fl.server_optimizer == OptimizerKind::kAdam);
  CHECK(exp.partition == PartitionKind::kByLabel);
  CHECK(exp.emit_timing == false);

  try {
    parse_experiment(R"({"dim": 8})", "t");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("classes") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected by name") {
  try {
    parse_experiment(R"({"classes": 3, "dim": 4, "clinets": 10})", "t");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("clinets") != std::string::npos);
  }
}

TEST_CASE("full config round") {
  const Experiment exp = parse_experiment(R"({
    "classes": 4, "dim": 6, "n_per_class": 50, "separation": 3.5,
    "partition": "dirichlet", "dirichlet_alpha": 0.7,
    "corrupt_fraction": 0.1, "corrupt_noise": 0.5,
    "eval_fraction": 0.3, "rehearsal_fraction": 0.05,
    "clients": 12, "clients_per_round": 4, "max_rounds": 20,
    "target_error": 0.1, "aggregator": "hier_rl", "beta": 2.0,
    "local_steps": 3, "batch_size": 16,
    "client_optimizer": "momentum", "server_optimizer": "sgd",
    "client_lr": 0.02, "server_lr": 0.5, "rehearsal_lr": 0.005,
    "rl_lr": 0.0005, "rehearsal_steps": 2, "rehearsal_batch": 8,
    "rehearsal_source": "replay_seen", "theta": 0.01, "reward": 2.0,
    "sigma": 0.25, "seed": 99, "threads": 2,
    "hidden_layers": [16, 8], "dataset": "d.flds", "shards": "s.tsv",
    "out_dir": "/tmp/x", "emit_timing": true
  })", "t");
  CHECK(exp.fl.aggregator == AggregatorKind::kHierRl);
  CHECK(exp.fl.clients_per_round == 4);
  CHECK(exp.fl.rehearsal_source == RehearsalSource::kReplaySeen);
  CHECK(exp.fl.master_seed == 99);
  CHECK(exp.hidden_layers == std::vector<int>{16, 8});
  CHECK(exp.task_spec().layer_sizes == std::vector<int>{6, 16, 8, 4});
  CHECK(exp.resolve("d.flds") == "/tmp/x/d.flds");
  CHECK(exp.resolve("/abs/d.flds") == "/abs/d.flds");
}

TEST_CASE("bad values carry the offending key or token") {
  CHECK_THROWS_AS(parse_experiment(R"({"classes": 3, "dim": 4, "beta": "x"})", "t"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_experiment(R"({"classes": 3, "dim": 4, "aggregator": "best"})", "t"),
      ConfigError);
  CHECK_THROWS_AS(parse_experiment("{nope", "t"), ConfigError);
  CHECK_THROWS_AS(parse_experiment(R"({"classes": 1, "dim": 4})", "t"),
                  ConfigError);
  CHECK_THROWS_AS(load_experiment("does_not_exist.json"), IoError);
}

TEST_CASE("corruption rates mark a deterministic client subset") {
  Experiment exp = parse_experiment(
      R"({"classes": 3, "dim": 4, "clients": 10, "corrupt_fraction": 0.2,
          "corrupt_noise": 0.8, "seed": 5})", "t");
  const auto rates = corruption_rates(exp);
  REQUIRE(rates.size() == 10);
  int bad = 0;
  for (double r : rates) {
    if (r > 0.0) {
      CHECK(r == 0.8);
      ++bad;
    }
  }
  CHECK(bad == 2);
  CHECK(rates == corruption_rates(exp));

  exp.corrupt_fraction = 0.0;
  for (double r : corruption_rates(exp)) CHECK(r == 0.0);
}
