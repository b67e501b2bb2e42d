/* SPDX-License-Identifier: Apache-2.0 */
#ifndef DISHFT_DISHFT_H
#define DISHFT_DISHFT_H

#include <stddef.h>
#include <stdint.h>

#if defined(DISHFT_BUILDING_CAPI)
#define DFT_API __attribute__((visibility("default")))
#else
#define DFT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dft_status {
  DFT_OK = 0,
  DFT_E_ARGUMENT = 1, /* null handle or out-pointer, index out of range */
  DFT_E_CONFIG = 2,
  DFT_E_PARSE = 3,
  DFT_E_DATA = 4,
  DFT_E_RANGE = 5,
  DFT_E_SHAPE = 6,
  DFT_E_NUMERIC = 7,
  DFT_E_IO = 8,
  DFT_E_INTERNAL = 9
} dft_status;

DFT_API const char* dft_version(void);
DFT_API const char* dft_status_name(dft_status status);
/* Message of the last failing call on this thread; "" after a success. */
DFT_API const char* dft_last_error(void);

/* ---- configuration ---------------------------------------------------- */

typedef struct dft_config dft_config;

DFT_API dft_status dft_config_load(const char* path, dft_config** out);
DFT_API dft_status dft_config_parse(const char* text, dft_config** out);
DFT_API void dft_config_free(dft_config* config);

/* Sets the training seed; the experiment seed list keeps its length and
   becomes seed, seed + 1, ... */
DFT_API dft_status dft_config_set_seed(dft_config* config, uint64_t seed);
DFT_API dft_status dft_config_set_output_dir(dft_config* config, const char* dir);
/* Pointer stays valid until the next setter call or free. */
DFT_API const char* dft_config_output_dir(const dft_config* config);
DFT_API dft_status dft_config_validate(const dft_config* config);
DFT_API dft_status dft_config_write_effective(const dft_config* config, const char* path);

/* ---- data ------------------------------------------------------------- */

typedef struct dft_dataset dft_dataset;

typedef struct dft_dataset_info {
  size_t n_stocks;
  size_t n_days;
  size_t n_windows;
  size_t n_train;
  size_t n_val;
  size_t n_test;
  const char* first_date;
  const char* last_date;
} dft_dataset_info;

typedef struct dft_sector_stat {
  const char* industry;
  const char* first_date;
  const char* last_date;
  double mean_log_return;
} dft_sector_stat;

DFT_API dft_status dft_dataset_load(const dft_config* config, dft_dataset** out);
DFT_API void dft_dataset_free(dft_dataset* data);
DFT_API dft_status dft_dataset_info_get(const dft_dataset* data, dft_dataset_info* out);
/* prices.csv, relations.csv, sector_stats.csv */
DFT_API dft_status dft_dataset_export(dft_dataset* data, const char* dir, size_t block_days);
/* Per-industry block statistics: 20-day blocks after load, the export's
   block size after an export. Strings live as long as the dataset. */
DFT_API size_t dft_dataset_sector_count(const dft_dataset* data);
DFT_API dft_status dft_dataset_sector(const dft_dataset* data, size_t index, dft_sector_stat* out);

/* ---- models ----------------------------------------------------------- */

typedef struct dft_model dft_model;

typedef struct dft_model_info {
  int has_teacher;
  size_t teacher_epochs;
  double teacher_val_acc; /* last logged epoch */
  size_t student_epochs;
  double student_val_acc;
} dft_model_info;

/* Teacher phase, then the student at the configured lambda. */
DFT_API dft_status dft_train(const dft_config* config, const dft_dataset* data, dft_model** out);
DFT_API dft_status dft_model_load_student(const dft_config* config, const char* checkpoint, dft_model** out);
DFT_API void dft_model_free(dft_model* model);
DFT_API dft_status dft_model_info_get(const dft_model* model, dft_model_info* out);
/* teacher.ckpt (when present), student.ckpt and the epoch logs. */
DFT_API dft_status dft_model_save(const dft_model* model, const char* dir);

/* ---- evaluation and back-test ----------------------------------------- */

typedef struct dft_eval_summary {
  size_t decisions;
  size_t windows;
  double acc;
  double mcc;
  size_t tp, fp, tn, fn;
} dft_eval_summary;

typedef struct dft_backtest_summary {
  size_t days;
  size_t rebalances;
  double student_return; /* final equity - 1 */
  double uniform_return;
  double oracle_return;
} dft_backtest_summary;

/* Test split of `data`. CSVs are written under `dir` unless it is NULL. */
DFT_API dft_status dft_evaluate(const dft_config* config, const dft_dataset* data, const dft_model* model,
                                const char* dir, dft_eval_summary* out);
DFT_API dft_status dft_backtest(const dft_config* config, const dft_dataset* data, const dft_model* model,
                                const char* dir, dft_backtest_summary* out);

/* ---- multi-seed experiment -------------------------------------------- */

typedef struct dft_report dft_report;

typedef struct dft_comparison {
  const char* backbone;
  double baseline_acc;
  double dishft_acc;
  double acc_gain;
  double t_stat;
  double dof;
  double p_value;
} dft_comparison;

typedef void (*dft_progress_fn)(const char* message, void* user);

DFT_API dft_status dft_experiment_run(const dft_config* config, const dft_dataset* data, dft_progress_fn progress,
                                      void* user, dft_report** out);
DFT_API void dft_report_free(dft_report* report);
DFT_API dft_status dft_report_write(const dft_report* report, const char* dir);
DFT_API size_t dft_report_backbone_count(const dft_report* report);
DFT_API dft_status dft_report_comparison(const dft_report* report, size_t index, dft_comparison* out);

#ifdef __cplusplus
}
#endif

#endif /* DISHFT_DISHFT_H */
