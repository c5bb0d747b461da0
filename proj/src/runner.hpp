#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "metrics.hpp"
#include "orchestrator.hpp"

namespace flsim {

struct GenDataSummary {
  int rows = 0, dim = 0, classes = 0, clients = 0;
  std::string partition;
  std::string dataset_path, shards_path;
};

// Generates the task dataset, splits off eval/rehearsal rows, partitions the
// training rows and writes the FLDS1 dataset plus the shard-assignment file.
GenDataSummary gen_data(const Experiment& exp);

// Rebuilds the environment an experiment describes (dataset and shard files
// must exist; the eval/rehearsal split is recomputed from the seed and
// audited against the shards).
struct BuiltEnv {
  Dataset data;
  SimEnv env;  // env.data points at this->data
};
BuiltEnv build_env(const Experiment& exp);

// The environment gen_data followed by build_env would produce, constructed
// without touching the filesystem.
BuiltEnv build_env_in_memory(const Experiment& exp);

struct RunOutput {
  RunResult result;
  std::string metrics_path;
  std::string checkpoint_path;
  std::string policy_path;  // HierRl runs only
};

RunOutput run_experiment(const Experiment& exp);

struct CompareOutput {
  std::vector<CompareRow> rows;
  std::string csv_path;
  std::string svg_path;
  std::vector<std::string> per_run_csv;
};

// Runs each aggregator on the same dataset, shards and master seed.
CompareOutput compare_experiment(const Experiment& exp,
                                 const std::vector<std::string>& aggregators);

}  // namespace flsim
