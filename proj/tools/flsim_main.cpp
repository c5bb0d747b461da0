// flsim command-line front end. Everything goes through the C API in
// flsim/flsim.h; this translation unit never touches engine internals.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

#include "flsim/flsim.h"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int fail(flsim_status status) {
  std::fprintf(stderr, "flsim: error: %s\n", flsim_last_error());
  return static_cast<int>(status);
}

flsim_status open_config(const CommonArgs& args, flsim_config** config) {
  flsim_status s = flsim_config_open(args.config_path.c_str(), config);
  if (s != FLSIM_OK) return s;
  if (args.seed_set) flsim_config_set_seed(*config, args.seed);
  if (!args.out_dir.empty()) {
    flsim_config_set_out_dir(*config, args.out_dir.c_str());
  }
  return FLSIM_OK;
}

int cmd_gen_data(const CommonArgs& args) {
  flsim_config* config = nullptr;
  flsim_status s = open_config(args, &config);
  if (s != FLSIM_OK) return fail(s);
  flsim_data_summary summary{};
  s = flsim_gen_data(config, &summary);
  flsim_config_close(config);
  if (s != FLSIM_OK) return fail(s);
  std::printf("generated %u rows (dim %u, %u classes) into %u shards, %s partition\n",
              summary.rows, summary.dim, summary.classes, summary.clients,
              summary.partition);
  return 0;
}

int cmd_run(const CommonArgs& args) {
  flsim_config* config = nullptr;
  flsim_status s = open_config(args, &config);
  if (s != FLSIM_OK) return fail(s);
  flsim_run* run = nullptr;
  s = flsim_run_training(config, &run);
  flsim_config_close(config);
  if (s != FLSIM_OK) return fail(s);

  const int32_t rounds = flsim_run_rounds(run);
  const int32_t to_target = flsim_run_rounds_to_target(run);
  std::printf("ran %d rounds, final eval error %.4f, metrics: %s\n", rounds,
              flsim_run_final_error(run), flsim_run_metrics_path(run));
  std::printf("checkpoint: %s\n", flsim_run_checkpoint_path(run));
  if (*flsim_run_policy_path(run)) {
    std::printf("policy: %s\n", flsim_run_policy_path(run));
  }
  int exit_code = 0;
  if (to_target >= 0) {
    std::printf("target error reached at round %d\n", to_target);
  } else {
    std::printf("target error not reached within %d rounds\n", rounds);
    exit_code = FLSIM_ERR_TARGET;
  }
  flsim_run_close(run);
  return exit_code;
}

int cmd_compare(const CommonArgs& args, const std::string& aggregators) {
  flsim_config* config = nullptr;
  flsim_status s = open_config(args, &config);
  if (s != FLSIM_OK) return fail(s);
  flsim_compare* cmp = nullptr;
  s = flsim_compare_run(config, aggregators.c_str(), &cmp);
  flsim_config_close(config);
  if (s != FLSIM_OK) return fail(s);

  const int32_t n = flsim_compare_count(cmp);
  std::printf("%-20s %-16s %s\n", "aggregator", "rounds_to_target", "final_error");
  for (int32_t i = 0; i < n; ++i) {
    const int32_t r = flsim_compare_rounds_to_target(cmp, i);
    if (r >= 0) {
      std::printf("%-20s %-16d %.4f\n", flsim_compare_aggregator(cmp, i), r,
                  flsim_compare_final_error(cmp, i));
    } else {
      std::printf("%-20s %-16s %.4f\n", flsim_compare_aggregator(cmp, i),
                  "unreached", flsim_compare_final_error(cmp, i));
    }
  }
  std::printf("summary: %s\nchart:   %s\n", flsim_compare_csv_path(cmp),
              flsim_compare_svg_path(cmp));
  flsim_compare_close(cmp);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated-learning simulation engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(flsim_version()));

  CommonArgs args;
  std::string aggregators;

  auto add_common = [&](CLI::App* cmd, bool with_overrides) {
    cmd->add_option("--config", args.config_path, "experiment JSON file")
        ->required();
    if (with_overrides) {
      cmd->add_option("--seed", args.seed, "master seed override")
          ->each([&](const std::string&) { args.seed_set = true; });
      cmd->add_option("--out", args.out_dir, "output directory override");
    }
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate dataset and shard files");
  add_common(gen, true);
  CLI::App* run = app.add_subcommand("run", "run one federated training");
  add_common(run, true);
  CLI::App* compare =
      app.add_subcommand("compare", "run several aggregators on the same task");
  add_common(compare, true);
  compare->add_option("--aggregators", aggregators,
                      "comma-separated aggregator list")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : FLSIM_ERR_CONFIG;
  }

  if (gen->parsed()) return cmd_gen_data(args);
  if (run->parsed()) return cmd_run(args);
  if (compare->parsed()) return cmd_compare(args, aggregators);
  return FLSIM_ERR_CONFIG;
}
