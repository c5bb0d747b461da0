/* flsim — federated-learning simulation engine, C interface.
 *
 * All engine functionality is reached through opaque handles. Functions
 * return FLSIM_OK on success; on failure they return one of the error codes
 * below and flsim_last_error() describes what went wrong (the message is
 * thread-local and valid until the next failing call on the same thread).
 */
#ifndef FLSIM_H
#define FLSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FLSIM_API __declspec(dllexport)
#else
#define FLSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t flsim_status;

enum {
  FLSIM_OK = 0,
  FLSIM_ERR_CONFIG = 2,  /* bad config, bad file, user error   */
  FLSIM_ERR_TARGET = 3,  /* run finished, target error unmet   */
  FLSIM_ERR_RUNTIME = 4  /* numerical failure, aborted round   */
};

typedef struct flsim_config flsim_config;
typedef struct flsim_run flsim_run;
typedef struct flsim_compare flsim_compare;

FLSIM_API const char* flsim_version(void);
FLSIM_API const char* flsim_last_error(void);

/* ---- configuration ----------------------------------------------------- */

FLSIM_API flsim_status flsim_config_open(const char* path, flsim_config** out);
FLSIM_API flsim_status flsim_config_parse(const char* json_text,
                                          flsim_config** out);
FLSIM_API void flsim_config_close(flsim_config* config);

FLSIM_API flsim_status flsim_config_set_seed(flsim_config* config,
                                             uint64_t seed);
FLSIM_API flsim_status flsim_config_set_out_dir(flsim_config* config,
                                                const char* dir);
FLSIM_API flsim_status flsim_config_set_aggregator(flsim_config* config,
                                                   const char* name);
FLSIM_API flsim_status flsim_config_set_threads(flsim_config* config,
                                                int32_t threads);

/* ---- dataset generation ------------------------------------------------ */

typedef struct {
  uint32_t rows;
  uint32_t dim;
  uint32_t classes;
  uint32_t clients;
  char partition[16];
} flsim_data_summary;

/* Writes the dataset and shard-assignment files named by the config. */
FLSIM_API flsim_status flsim_gen_data(const flsim_config* config,
                                      flsim_data_summary* summary);

/* ---- training runs ------------------------------------------------------ */

/* Runs federated training to completion, writing the per-round metrics CSV
 * and the final model checkpoint. Returns FLSIM_OK even when the target
 * error was not reached; query flsim_run_rounds_to_target for that. */
FLSIM_API flsim_status flsim_run_training(const flsim_config* config,
                                          flsim_run** out);
FLSIM_API void flsim_run_close(flsim_run* run);

FLSIM_API int32_t flsim_run_rounds(const flsim_run* run);
/* -1 when the target error was never reached. */
FLSIM_API int32_t flsim_run_rounds_to_target(const flsim_run* run);
FLSIM_API double flsim_run_final_error(const flsim_run* run);
FLSIM_API double flsim_run_final_loss(const flsim_run* run);
FLSIM_API uint64_t flsim_run_model_transfers(const flsim_run* run);
FLSIM_API const char* flsim_run_metrics_path(const flsim_run* run);
FLSIM_API const char* flsim_run_checkpoint_path(const flsim_run* run);
/* Empty string unless the run used the RL aggregator. */
FLSIM_API const char* flsim_run_policy_path(const flsim_run* run);

/* ---- aggregator comparison ---------------------------------------------- */

/* `aggregators` is a comma-separated list, e.g. "fedavg,hier_uniform,
 * hier_softmax". Every aggregator runs on the same dataset, shards and
 * master seed; writes the comparison CSV and an SVG convergence chart. */
FLSIM_API flsim_status flsim_compare_run(const flsim_config* config,
                                         const char* aggregators,
                                         flsim_compare** out);
FLSIM_API void flsim_compare_close(flsim_compare* cmp);

FLSIM_API int32_t flsim_compare_count(const flsim_compare* cmp);
FLSIM_API const char* flsim_compare_aggregator(const flsim_compare* cmp,
                                               int32_t i);
FLSIM_API int32_t flsim_compare_rounds_to_target(const flsim_compare* cmp,
                                                 int32_t i);
FLSIM_API double flsim_compare_final_error(const flsim_compare* cmp, int32_t i);
FLSIM_API const char* flsim_compare_csv_path(const flsim_compare* cmp);
FLSIM_API const char* flsim_compare_svg_path(const flsim_compare* cmp);

#ifdef __cplusplus
}
#endif

#endif /* FLSIM_H */
