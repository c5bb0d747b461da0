#include "flsim/flsim.h"

#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include "config.hpp"
#include "runner.hpp"
#include "util.hpp"

struct flsim_config {
  flsim::Experiment exp;
};

struct flsim_run {
  flsim::RunOutput out;
};

struct flsim_compare {
  flsim::CompareOutput out;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

// Translates C++ failures into status codes at the API boundary.
template <typename Fn>
flsim_status guarded(Fn&& fn) {
  try {
    fn();
    return FLSIM_OK;
  } catch (const flsim::ConfigError& e) {
    set_error(e.what());
    return FLSIM_ERR_CONFIG;
  } catch (const flsim::NumericalError& e) {
    set_error(e.what());
    return FLSIM_ERR_RUNTIME;
  } catch (const std::exception& e) {
    set_error(e.what());
    return FLSIM_ERR_RUNTIME;
  }
}

flsim_status require(bool ok, const char* what) {
  if (ok) return FLSIM_OK;
  set_error(std::string("null argument: ") + what);
  return FLSIM_ERR_CONFIG;
}

}  // namespace

extern "C" {

const char* flsim_version(void) { return "1.0.0"; }

const char* flsim_last_error(void) { return g_last_error.c_str(); }

flsim_status flsim_config_open(const char* path, flsim_config** out) {
  if (auto s = require(path && out, "path/out")) return s;
  *out = nullptr;
  return guarded([&] { *out = new flsim_config{flsim::load_experiment(path)}; });
}

flsim_status flsim_config_parse(const char* json_text, flsim_config** out) {
  if (auto s = require(json_text && out, "json_text/out")) return s;
  *out = nullptr;
  return guarded([&] {
    *out = new flsim_config{flsim::parse_experiment(json_text, "<inline>")};
  });
}

void flsim_config_close(flsim_config* config) { delete config; }

flsim_status flsim_config_set_seed(flsim_config* config, uint64_t seed) {
  if (auto s = require(config, "config")) return s;
  config->exp.fl.master_seed = seed;
  return FLSIM_OK;
}

flsim_status flsim_config_set_out_dir(flsim_config* config, const char* dir) {
  if (auto s = require(config && dir, "config/dir")) return s;
  config->exp.out_dir = dir;
  return FLSIM_OK;
}

flsim_status flsim_config_set_aggregator(flsim_config* config,
                                         const char* name) {
  if (auto s = require(config && name, "config/name")) return s;
  return guarded([&] {
    config->exp.fl.aggregator = flsim::aggregator_from_string(name);
  });
}

flsim_status flsim_config_set_threads(flsim_config* config, int32_t threads) {
  if (auto s = require(config, "config")) return s;
  config->exp.fl.threads = threads;
  return FLSIM_OK;
}

flsim_status flsim_gen_data(const flsim_config* config,
                            flsim_data_summary* summary) {
  if (auto s = require(config, "config")) return s;
  return guarded([&] {
    const flsim::GenDataSummary out = flsim::gen_data(config->exp);
    if (summary) {
      summary->rows = static_cast<uint32_t>(out.rows);
      summary->dim = static_cast<uint32_t>(out.dim);
      summary->classes = static_cast<uint32_t>(out.classes);
      summary->clients = static_cast<uint32_t>(out.clients);
      std::snprintf(summary->partition, sizeof(summary->partition), "%s",
                    out.partition.c_str());
    }
  });
}

flsim_status flsim_run_training(const flsim_config* config, flsim_run** out) {
  if (auto s = require(config && out, "config/out")) return s;
  *out = nullptr;
  flsim_status status = guarded([&] {
    auto run = std::make_unique<flsim_run>();
    run->out = flsim::run_experiment(config->exp);
    if (run->out.result.abort_reason) {
      throw flsim::NumericalError(*run->out.result.abort_reason);
    }
    *out = run.release();
  });
  return status;
}

void flsim_run_close(flsim_run* run) { delete run; }

int32_t flsim_run_rounds(const flsim_run* run) {
  return run ? static_cast<int32_t>(run->out.result.records.size()) : -1;
}

int32_t flsim_run_rounds_to_target(const flsim_run* run) {
  if (!run || !run->out.result.rounds_to_target) return -1;
  return *run->out.result.rounds_to_target;
}

double flsim_run_final_error(const flsim_run* run) {
  if (!run || run->out.result.records.empty()) return 1.0;
  return run->out.result.records.back().eval_error;
}

double flsim_run_final_loss(const flsim_run* run) {
  if (!run || run->out.result.records.empty()) return 0.0;
  return run->out.result.records.back().eval_loss;
}

uint64_t flsim_run_model_transfers(const flsim_run* run) {
  return run ? run->out.result.model_transfers : 0;
}

const char* flsim_run_metrics_path(const flsim_run* run) {
  return run ? run->out.metrics_path.c_str() : "";
}

const char* flsim_run_checkpoint_path(const flsim_run* run) {
  return run ? run->out.checkpoint_path.c_str() : "";
}

const char* flsim_run_policy_path(const flsim_run* run) {
  return run ? run->out.policy_path.c_str() : "";
}

flsim_status flsim_compare_run(const flsim_config* config,
                               const char* aggregators, flsim_compare** out) {
  if (auto s = require(config && aggregators && out, "config/aggregators/out")) {
    return s;
  }
  *out = nullptr;
  return guarded([&] {
    std::vector<std::string> names;
    std::string token;
    for (const char* p = aggregators;; ++p) {
      if (*p == ',' || *p == '\0') {
        if (!token.empty()) names.push_back(token);
        token.clear();
        if (*p == '\0') break;
      } else {
        token.push_back(*p);
      }
    }
    auto cmp = std::make_unique<flsim_compare>();
    cmp->out = flsim::compare_experiment(config->exp, names);
    *out = cmp.release();
  });
}

void flsim_compare_close(flsim_compare* cmp) { delete cmp; }

int32_t flsim_compare_count(const flsim_compare* cmp) {
  return cmp ? static_cast<int32_t>(cmp->out.rows.size()) : 0;
}

const char* flsim_compare_aggregator(const flsim_compare* cmp, int32_t i) {
  if (!cmp || i < 0 || i >= flsim_compare_count(cmp)) return "";
  return cmp->out.rows[i].aggregator.c_str();
}

int32_t flsim_compare_rounds_to_target(const flsim_compare* cmp, int32_t i) {
  if (!cmp || i < 0 || i >= flsim_compare_count(cmp)) return -1;
  const auto& r = cmp->out.rows[i].rounds_to_target;
  return r ? *r : -1;
}

double flsim_compare_final_error(const flsim_compare* cmp, int32_t i) {
  if (!cmp || i < 0 || i >= flsim_compare_count(cmp)) return 1.0;
  return cmp->out.rows[i].final_error;
}

const char* flsim_compare_csv_path(const flsim_compare* cmp) {
  return cmp ? cmp->out.csv_path.c_str() : "";
}

const char* flsim_compare_svg_path(const flsim_compare* cmp) {
  return cmp ? cmp->out.svg_path.c_str() : "";
}

}  // extern "C"
