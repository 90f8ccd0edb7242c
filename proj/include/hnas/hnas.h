/* Copyright 2026 The hnas Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the hierarchical architecture search library.
 *
 * Every function returns an hnas_status. On failure hnas_last_error() holds
 * a message for the calling thread until its next call into the library.
 * Handles are opaque and owned by the caller; free them with the matching
 * *_free function. Passing NULL to a *_free function is a no-op.
 */

#ifndef HNAS_HNAS_H_
#define HNAS_HNAS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HNAS_API __declspec(dllexport)
#else
#define HNAS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hnas_status {
  HNAS_OK = 0,
  HNAS_ERR_INVALID_ARGUMENT = 1,
  HNAS_ERR_CONFIG = 2,
  HNAS_ERR_IO = 3,
  HNAS_ERR_TABLE_LOAD = 4,
  HNAS_ERR_CORRUPT_CHECKPOINT = 5,
  HNAS_ERR_INTERNAL = 6
} hnas_status;

typedef struct hnas_config hnas_config;
typedef struct hnas_experiment hnas_experiment;

typedef struct hnas_generation_stats {
  int generation;
  double best_fitness;
  double mean_fitness;
  int notable_size;
  int candidate_size;
  int banned_size;
  int promotions;
  int bans;
  int evaluations;
} hnas_generation_stats;

typedef struct hnas_compare_summary {
  int seeds;
  int final_best_wins;
  int early_generation;
  int early_mean_wins;
  double wilcoxon_p_value;
} hnas_compare_summary;

typedef enum hnas_export_format { HNAS_EXPORT_JSON = 0, HNAS_EXPORT_DOT = 1 } hnas_export_format;

HNAS_API const char* hnas_last_error(void);
HNAS_API const char* hnas_status_string(hnas_status status);
HNAS_API const char* hnas_version(void);

/* Configuration. */
HNAS_API hnas_status hnas_config_load(const char* path, hnas_config** out);
HNAS_API hnas_status hnas_config_preset(const char* name, hnas_config** out);
/* Replaces the seed list with this single seed. */
HNAS_API hnas_status hnas_config_set_seed(hnas_config* config, uint64_t seed);
HNAS_API hnas_status hnas_config_set_generations(hnas_config* config, int generations);
HNAS_API hnas_status hnas_config_set_output_dir(hnas_config* config, const char* dir);
/* Number of configured seeds and the seed at `index`. */
HNAS_API hnas_status hnas_config_seeds(const hnas_config* config, size_t* count);
HNAS_API hnas_status hnas_config_seed_at(const hnas_config* config, size_t index, uint64_t* seed);
/* JSON text of the configuration. Free with hnas_string_free. */
HNAS_API hnas_status hnas_config_to_json(const hnas_config* config, char** out);
HNAS_API void hnas_config_free(hnas_config* config);

/* Single-seed experiments stepped by the caller. */
HNAS_API hnas_status hnas_experiment_create(const hnas_config* config, uint64_t seed,
                                            hnas_experiment** out);
HNAS_API hnas_status hnas_experiment_load_checkpoint(const char* path, hnas_experiment** out);
HNAS_API hnas_status hnas_experiment_step(hnas_experiment* experiment,
                                          hnas_generation_stats* stats);
/* Sets *finished to 1 once the configured generation count is reached. */
HNAS_API hnas_status hnas_experiment_finished(const hnas_experiment* experiment, int* finished);
HNAS_API hnas_status hnas_experiment_save_checkpoint(const hnas_experiment* experiment,
                                                     const char* path);
HNAS_API void hnas_experiment_free(hnas_experiment* experiment);

/* Whole runs. stop_after < 0 means no limit. */
HNAS_API hnas_status hnas_run(const hnas_config* config, const char* out_dir, int stop_after);
HNAS_API hnas_status hnas_resume(const char* checkpoint_path, const char* out_dir);
/* The first `seed_count` seeds are seeds[0..seed_count). */
HNAS_API hnas_status hnas_compare(const hnas_config* config, const uint64_t* seeds,
                                  size_t seed_count, const char* out_dir,
                                  hnas_compare_summary* summary);
/* Best phenotype of a checkpoint file. Free *out with hnas_string_free. */
HNAS_API hnas_status hnas_export(const char* checkpoint_path, hnas_export_format format,
                                 char** out);
HNAS_API void hnas_string_free(char* s);

/* Asks running hnas_run/hnas_resume calls to stop after the current
 * generation. Async-signal-safe. */
HNAS_API void hnas_request_stop(void);
HNAS_API void hnas_clear_stop(void);

#ifdef __cplusplus
}
#endif

#endif /* HNAS_HNAS_H_ */
