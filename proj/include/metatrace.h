/* C interface to the metatrace meta-analysis library.
 *
 * All functions returning char* hand over ownership; release with mt_free.
 * On failure they return NULL (or a non-zero mt_status) and mt_last_error()
 * describes what went wrong for the calling thread. */

#ifndef METATRACE_H
#define METATRACE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef MT_API
#if defined(_WIN32)
#define MT_API __declspec(dllexport)
#else
#define MT_API __attribute__((visibility("default")))
#endif
#endif

/* Mirrors the library's error taxonomy; the CLI reuses the values as exit
 * codes. */
typedef enum mt_status {
    MT_OK = 0,
    MT_ERROR_INPUT = 2, /* invalid data or configuration */
    MT_ERROR_MODEL = 3, /* model or numeric failure */
    MT_ERROR_IO = 4     /* filesystem trouble */
} mt_status;

typedef struct mt_dataset mt_dataset;
typedef struct mt_config mt_config;
typedef struct mt_analysis mt_analysis;

MT_API const char* mt_version(void);

/* Thread-local message describing the most recent failure; empty string when
 * the last call succeeded. The pointer stays valid until the next API call on
 * the same thread. */
MT_API const char* mt_last_error(void);

/* Status of the most recent call on this thread; MT_OK after a success.
 * Useful with constructors that signal failure by returning NULL. */
MT_API mt_status mt_last_status(void);

MT_API void mt_free(char* text);

/* -- datasets ------------------------------------------------------------ */

/* CSV with header label,y,se[,covariate...]; '#' comment lines allowed at the
 * top, '# source: ...' is kept as the dataset's origin note. */
MT_API mt_dataset* mt_dataset_from_csv(const char* text);
MT_API mt_dataset* mt_dataset_from_file(const char* path);
MT_API mt_dataset* mt_dataset_bundled(const char* name);
MT_API void mt_dataset_free(mt_dataset* data);
MT_API size_t mt_dataset_size(const mt_dataset* data);
MT_API char* mt_dataset_to_csv(const mt_dataset* data);

/* Bundled-data helpers: an aligned listing for display, and the raw CSV of
 * one bundled set. */
MT_API char* mt_bundled_listing(void);
MT_API char* mt_bundled_csv(const char* name);

/* -- configuration ------------------------------------------------------- */

MT_API mt_config* mt_config_new(void);
MT_API void mt_config_free(mt_config* config);

MT_API mt_status mt_config_set_mode(mt_config* config, const char* mode); /* bayes|freq */
MT_API mt_status mt_config_set_prior(mt_config* config,
                                     const char* prior); /* uniform|halfnormal:<s>|dumouchel[:<s0>] */
MT_API mt_status mt_config_set_estimator(mt_config* config, const char* name); /* reml|ml|dl */
MT_API mt_status mt_config_set_interval(mt_config* config,
                                        const char* method); /* shortest|central */
MT_API mt_status mt_config_add_regressor(mt_config* config, const char* covariate);
MT_API mt_status mt_config_add_contrast(mt_config* config, const char* spec); /* label:c1,c2 */
MT_API mt_status mt_config_add_prediction(mt_config* config, const char* spec); /* name=value,... */
MT_API mt_status mt_config_add_exclude(mt_config* config, const char* label);
/* points: trace grid size (>= 21); tau_max <= 0 selects the automatic rule */
MT_API mt_status mt_config_set_grid(mt_config* config, size_t points, double tau_max);

/* -- running and results ------------------------------------------------- */

MT_API mt_analysis* mt_run(const mt_dataset* data, const mt_config* config);
MT_API void mt_analysis_free(mt_analysis* analysis);

MT_API char* mt_report_text(const mt_analysis* analysis);
MT_API char* mt_report_json(const mt_analysis* analysis);
MT_API char* mt_trace_svg(const mt_analysis* analysis, int conditional_bands);
MT_API char* mt_forest_svg(const mt_analysis* analysis);
MT_API char* mt_trace_csv(const mt_analysis* analysis);

/* Numeric accessors. Layouts:
 *   mt_tau_summary:         point, mean (bayes; 0 otherwise), ci lo, ci hi
 *   mt_study_summary:       y, se, mean, sd, median, ci lo, ci hi
 *   mt_coefficient_summary: mean, sd, median, ci lo, ci hi
 *   mt_overall_summary / mt_prediction_summary: same as coefficient layout */
MT_API mt_status mt_tau_summary(const mt_analysis* analysis, double out[4]);
MT_API size_t mt_n_studies(const mt_analysis* analysis);
MT_API mt_status mt_study_summary(const mt_analysis* analysis, size_t index, double out[7]);
MT_API size_t mt_n_coefficients(const mt_analysis* analysis);
MT_API mt_status mt_coefficient_summary(const mt_analysis* analysis, size_t index, double out[5]);
MT_API mt_status mt_overall_summary(const mt_analysis* analysis, double out[5]);
MT_API mt_status mt_prediction_summary(const mt_analysis* analysis, double out[5]);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* METATRACE_H */
