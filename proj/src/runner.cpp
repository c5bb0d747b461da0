#include "runner.hpp"

#include "checkpoint.hpp"
#include "rl.hpp"
#include "rng.hpp"
#include "util.hpp"

namespace flsim {

namespace {

// Stream tags for seeds derived from the experiment master seed.
enum ExperimentStream : std::uint64_t {
  kSplitStream = 10,
  kPartitionStream = 11,
};

// Keyed off the dataset's embedded generation seed, not the run seed, so a
// seed override at run time still reproduces the split the shard file was
// built against.
DataSplit recompute_split(const Experiment& exp, const Dataset& data) {
  return split_dataset(data, exp.eval_fraction, exp.rehearsal_fraction,
                       exp.fl.rehearsal_source,
                       derive_seed(data.seed, 0, 0, kSplitStream));
}

}  // namespace

GenDataSummary gen_data(const Experiment& exp) {
  exp.validate();
  const Dataset data = gen_gaussian_task(exp.classes, exp.dim, exp.n_per_class,
                                         exp.separation, exp.fl.master_seed);
  const DataSplit split = recompute_split(exp, data);
  const ShardAssignment shards = partition_rows(
      data, split.train, exp.partition, exp.fl.pool_size, exp.dirichlet_alpha,
      derive_seed(data.seed, 0, 0, kPartitionStream));

  GenDataSummary summary;
  summary.rows = data.n;
  summary.dim = data.dim;
  summary.classes = data.classes;
  summary.clients = exp.fl.pool_size;
  summary.partition = partition_kind_name(exp.partition);
  summary.dataset_path = exp.resolve(exp.dataset_path);
  summary.shards_path = exp.resolve(exp.shards_path);
  save_dataset(data, summary.dataset_path);
  save_shards(shards, summary.shards_path);
  return summary;
}

BuiltEnv build_env(const Experiment& exp) {
  exp.validate();
  BuiltEnv built;
  built.data = load_dataset(exp.resolve(exp.dataset_path));
  const DataSplit split = recompute_split(exp, built.data);
  built.env.task = exp.task_spec();
  built.env.data = &built.data;
  built.env.shards = load_shards(exp.resolve(exp.shards_path));
  built.env.corruption = corruption_rates(exp);
  built.env.rehearsal_rows = split.rehearsal;
  built.env.eval_rows = split.eval;
  return built;
}

BuiltEnv build_env_in_memory(const Experiment& exp) {
  exp.validate();
  BuiltEnv built;
  built.data = gen_gaussian_task(exp.classes, exp.dim, exp.n_per_class,
                                 exp.separation, exp.fl.master_seed);
  const DataSplit split = recompute_split(exp, built.data);
  built.env.task = exp.task_spec();
  built.env.data = &built.data;
  built.env.shards =
      partition_rows(built.data, split.train, exp.partition, exp.fl.pool_size,
                     exp.dirichlet_alpha,
                     derive_seed(built.data.seed, 0, 0, kPartitionStream))
          .shards;
  built.env.corruption = corruption_rates(exp);
  built.env.rehearsal_rows = split.rehearsal;
  built.env.eval_rows = split.eval;
  return built;
}

RunOutput run_experiment(const Experiment& exp) {
  BuiltEnv built = build_env(exp);
  RunOutput out;
  Orchestrator orch(exp.fl, built.env);
  out.result = orch.run();

  out.metrics_path = exp.resolve("metrics.csv");
  write_metrics_csv(out.metrics_path, out.result.records, exp.emit_timing);
  out.checkpoint_path = exp.resolve("checkpoint.flck");
  save_mlp_container("FLCK1\n", built.env.task, out.result.final_model,
                     out.checkpoint_path);
  if (const RlAgent* agent = orch.agent()) {
    out.policy_path = exp.resolve("policy.flrl");
    save_policy(agent->net(), out.policy_path);
  }
  return out;
}

CompareOutput compare_experiment(const Experiment& exp,
                                 const std::vector<std::string>& aggregators) {
  if (aggregators.empty()) {
    throw ConfigError("compare: need at least one aggregator");
  }
  BuiltEnv built = build_env(exp);
  CompareOutput out;
  std::vector<CurveSeries> curves;
  for (const auto& name : aggregators) {
    FLConfig config = exp.fl;
    config.aggregator = aggregator_from_string(name);
    const RunResult result = run_training(config, built.env);
    if (result.abort_reason) {
      throw NumericalError("compare: " + name + " aborted: " +
                           *result.abort_reason);
    }

    CompareRow row;
    row.aggregator = name;
    row.rounds_to_target = result.rounds_to_target;
    row.final_error =
        result.records.empty() ? 1.0 : result.records.back().eval_error;
    out.rows.push_back(row);

    CurveSeries series;
    series.label = name;
    for (const auto& rec : result.records) series.values.push_back(rec.eval_error);
    curves.push_back(std::move(series));

    const std::string run_csv = exp.resolve("metrics_" + name + ".csv");
    write_metrics_csv(run_csv, result.records, exp.emit_timing);
    out.per_run_csv.push_back(run_csv);
  }
  out.csv_path = exp.resolve("compare.csv");
  write_compare_csv(out.csv_path, out.rows);
  out.svg_path = exp.resolve("compare.svg");
  write_convergence_svg(out.svg_path, curves);
  return out;
}

}  // namespace flsim
