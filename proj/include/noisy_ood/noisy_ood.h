#ifndef NOISY_OOD_H
#define NOISY_OOD_H

/* C interface to the noisy-OOD experiment library.
 *
 * Every function returns a noisy_ood_status. On failure the message of the
 * last error on the calling thread is available from noisy_ood_last_error().
 * Handles are opaque and must be released with the matching *_free call.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(NOISY_OOD_BUILDING)
#define NOISY_OOD_API __attribute__((visibility("default")))
#else
#define NOISY_OOD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    NOISY_OOD_OK = 0,
    NOISY_OOD_INVALID_ARGUMENT = 1,
    NOISY_OOD_CONFIG_ERROR = 2,
    NOISY_OOD_IO_ERROR = 3,
    NOISY_OOD_RUN_ERROR = 4,
} noisy_ood_status;

typedef enum {
    NOISY_OOD_FORMAT_CSV = 1,
    NOISY_OOD_FORMAT_MARKDOWN = 2,
    NOISY_OOD_FORMAT_BOTH = 3,
} noisy_ood_format;

/* Metric indices: AUC, F1, accuracy, recall, specificity. */
enum { NOISY_OOD_METRIC_AUC = 0, NOISY_OOD_METRIC_F1, NOISY_OOD_METRIC_ACC, NOISY_OOD_METRIC_REC, NOISY_OOD_METRIC_SPEC };

/* Statistic selectors for noisy_ood_report_stat. */
enum { NOISY_OOD_STAT_ID = 0, NOISY_OOD_STAT_OOD, NOISY_OOD_STAT_DIFF, NOISY_OOD_STAT_ABS_DIFF };

typedef struct noisy_ood_config noisy_ood_config;
typedef struct noisy_ood_report noisy_ood_report;

NOISY_OOD_API const char* noisy_ood_last_error(void);
NOISY_OOD_API const char* noisy_ood_version(void);

/* Configuration */
NOISY_OOD_API noisy_ood_status noisy_ood_config_default(noisy_ood_config** out);
NOISY_OOD_API noisy_ood_status noisy_ood_config_load(const char* path, noisy_ood_config** out);
NOISY_OOD_API noisy_ood_status noisy_ood_config_from_json(const char* json_text, noisy_ood_config** out);
NOISY_OOD_API noisy_ood_status noisy_ood_config_set_seeds(noisy_ood_config* cfg, const uint64_t* seeds, size_t n);
/* "baseline" or "noise_augmented"; restricts the run to that one condition. */
NOISY_OOD_API noisy_ood_status noisy_ood_config_set_condition(noisy_ood_config* cfg, const char* condition);
NOISY_OOD_API noisy_ood_status noisy_ood_config_set_output_dir(noisy_ood_config* cfg, const char* dir);
NOISY_OOD_API noisy_ood_status noisy_ood_config_output_dir(const noisy_ood_config* cfg, char* buf, size_t cap,
                                                           size_t* needed);
/* Resolved JSON. Writes at most cap bytes including the terminator; *needed
 * receives the full length + 1. */
NOISY_OOD_API noisy_ood_status noisy_ood_config_to_json(const noisy_ood_config* cfg, char* buf, size_t cap,
                                                        size_t* needed);
NOISY_OOD_API void noisy_ood_config_free(noisy_ood_config* cfg);

/* Experiment. threads <= 0 uses NOISY_OOD_THREADS or the hardware count. */
NOISY_OOD_API noisy_ood_status noisy_ood_run(const noisy_ood_config* cfg, int threads, noisy_ood_report** out);
/* Writes the report tree into dir (NULL = the config's output_dir). */
NOISY_OOD_API noisy_ood_status noisy_ood_report_write(const noisy_ood_report* report, const char* dir,
                                                      noisy_ood_format format);
NOISY_OOD_API noisy_ood_status noisy_ood_report_csv(const noisy_ood_report* report, char* buf, size_t cap,
                                                    size_t* needed);
NOISY_OOD_API noisy_ood_status noisy_ood_report_markdown(const noisy_ood_report* report, char* buf, size_t cap,
                                                         size_t* needed);
NOISY_OOD_API size_t noisy_ood_report_run_count(const noisy_ood_report* report);
/* Seed-averaged mean of one statistic for (table, condition, metric). */
NOISY_OOD_API noisy_ood_status noisy_ood_report_stat(const noisy_ood_report* report, const char* table,
                                                     const char* condition, int metric, int stat, double* mean,
                                                     double* std);
NOISY_OOD_API void noisy_ood_report_free(noisy_ood_report* report);

/* Renders report.md from a report.csv file. */
NOISY_OOD_API noisy_ood_status noisy_ood_markdown_from_csv(const char* csv_path, char* buf, size_t cap,
                                                           size_t* needed);

/* Utilities */

/* Dumps the main composition's splits for `seed` as PGM + CSV manifests
 * (train, validation, id_test, ood_test) under dir. */
NOISY_OOD_API noisy_ood_status noisy_ood_generate_dataset(const noisy_ood_config* cfg, uint64_t seed,
                                                          const char* dir);

typedef struct {
    double auc, f1, accuracy, recall, specificity;
    int64_t n_samples;
} noisy_ood_metrics;

/* Scores a manifest with a checkpoint and the config's feature bank. */
NOISY_OOD_API noisy_ood_status noisy_ood_evaluate_manifest(const noisy_ood_config* cfg, const char* manifest_path,
                                                           const char* checkpoint_path, noisy_ood_metrics* out);

/* Applies one noise operator to a PGM. kind: gaussian, speckle, poisson,
 * salt_pepper. param is the variance (gaussian, speckle), density
 * (salt_pepper) or scale (poisson); a negative value keeps the default. */
NOISY_OOD_API noisy_ood_status noisy_ood_noise_demo(const char* kind, double param, uint64_t seed,
                                                    const char* in_path, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif
