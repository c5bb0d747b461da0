#pragma once

#include <string>
#include <vector>

#include "data.hpp"
#include "orchestrator.hpp"

namespace flsim {

// One experiment file: the training configuration plus dataset generation
// parameters and output paths. Unknown keys are rejected; missing optional
// keys fall back to defaults with a logged notice.
struct Experiment {
  // dataset generation (classes and dim are required keys)
  int classes = 10;
  int dim = 20;
  int n_per_class = 2860;
  double separation = 3.2;
  PartitionKind partition = PartitionKind::kByLabel;
  double dirichlet_alpha = 0.5;
  double corrupt_fraction = 0.2;  // fraction of clients with noisy labels
  double corrupt_noise = 0.8;     // label-noise rate on those clients
  double eval_fraction = 0.2;
  double rehearsal_fraction = 0.1;

  FLConfig fl;

  std::vector<int> hidden_layers = {32};  // task model hidden widths

  // paths (relative ones are resolved against out_dir)
  std::string dataset_path = "task.flds";
  std::string shards_path = "task.shards";
  std::string out_dir = ".";

  bool emit_timing = false;  // measured wall time breaks byte-determinism

  MlpSpec task_spec() const;
  std::string resolve(const std::string& path) const;
  void validate() const;
};

Experiment load_experiment(const std::string& path);
Experiment parse_experiment(const std::string& json_text, const std::string& origin);

// Deterministic per-client corruption rates from the experiment knobs:
// floor(corrupt_fraction * K) clients, chosen by seeded shuffle, get
// corrupt_noise; the rest get 0.
std::vector<double> corruption_rates(const Experiment& exp);

}  // namespace flsim
