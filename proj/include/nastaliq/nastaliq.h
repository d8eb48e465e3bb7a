/* C interface to the nastaliq line-recognition library.
 *
 * Every function returning int returns an nql_status. On failure the message
 * is available from nql_last_error() on the calling thread until the next
 * call into the library on that thread. Handles are opaque and owned by the
 * caller; release them with the matching *_free function (NULL is accepted).
 */
#ifndef NASTALIQ_H
#define NASTALIQ_H

#include <stddef.h>
#include <stdint.h>

#if defined(NASTALIQ_BUILDING_LIBRARY)
#define NQL_API __attribute__((visibility("default")))
#else
#define NQL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nql_status {
  NQL_OK = 0,
  NQL_ERR_USAGE = 1,    /* bad argument or configuration */
  NQL_ERR_DATA = 2,     /* unreadable or inconsistent input, interruption */
  NQL_ERR_INTERNAL = 3  /* invariant violation */
} nql_status;

typedef enum nql_ink { NQL_INK_NONE = 0, NQL_INK_RED = 1, NQL_INK_BLACK = 2 } nql_ink;

typedef enum nql_direction { NQL_RIGHT_TO_LEFT = 0, NQL_LEFT_TO_RIGHT = 1 } nql_direction;

NQL_API const char* nql_last_error(void);
NQL_API const char* nql_version(void);

/* Cooperative cancellation, polled between epochs and pipeline stages.
 * nql_request_cancel only stores to a lock-free flag and may be called from
 * a signal handler. */
NQL_API void nql_request_cancel(void);
NQL_API void nql_reset_cancel(void);

/* ---- images ---- */

typedef struct nql_image nql_image;

NQL_API int nql_image_load(const char* path, nql_image** out);
NQL_API int nql_image_save_pgm(const nql_image* image, const char* path);
NQL_API int nql_image_size(const nql_image* image, size_t* height, size_t* width);
NQL_API void nql_image_free(nql_image* image);

/* ---- preprocess ---- */

typedef struct nql_preprocess_options {
  int ink;                /* nql_ink */
  double color_tolerance; /* 0.25 */
  int median_radius;      /* 1; 0 disables */
  double max_angle;       /* 15 */
  double coarse_step;     /* 1 */
  double fine_step;       /* 0.1 */
  int threads;            /* 1 */
} nql_preprocess_options;

typedef struct nql_skew_report {
  double angle;
  double best_variance;
  size_t evaluated_angles;
} nql_skew_report;

NQL_API void nql_preprocess_options_init(nql_preprocess_options* opts);

/* strip_color (when ink is set) -> median filter -> deskew. */
NQL_API int nql_preprocess_page(const char* input, const nql_preprocess_options* opts, nql_image** out,
                                nql_skew_report* report);
NQL_API int nql_detect_skew(const nql_image* image, const nql_preprocess_options* opts, nql_skew_report* report);

/* Writes "angle,best_variance,evaluated_angles" (no newline) into buf.
 * *needed receives the length including the terminator. */
NQL_API int nql_skew_report_csv(const nql_skew_report* report, char* buf, size_t cap, size_t* needed);

/* ---- segment ---- */

/* Writes <page_id>-NN.pgm per line band into outdir. */
NQL_API int nql_segment_page(const nql_image* page, const char* page_id, const char* outdir, int64_t tau,
                             size_t min_height, size_t* lines_written);

/* ---- corpus ---- */

typedef struct nql_corpus_stats {
  size_t lines;
  size_t tokens;
  size_t distinct_tokens;
  size_t writers[3]; /* train, val, test */
  size_t split_lines[3];
} nql_corpus_stats;

/* fractions: "train,val,test", or NULL for 0.6,0.24,0.16. */
NQL_API int nql_build_manifest(const char* image_dir, const char* gt_dir, const char* fractions, uint64_t seed,
                               const char* out_path);
NQL_API int nql_manifest_stats(const char* manifest, nql_corpus_stats* stats);
NQL_API int nql_write_alphabet(const char* manifest, const char* out_path);

/* ---- synthetic corpus ---- */

typedef struct nql_synth_config {
  int glyph_classes;
  int lines_per_page;
  int tokens_min;
  int tokens_max;
  double skew_min;
  double skew_max;
  double noise;
  double stroke_jitter;
  int pages_per_writer;
  int first_writer;
  int red_ink;
  double fractions[3];
  uint64_t seed;
} nql_synth_config;

NQL_API void nql_synth_config_init(nql_synth_config* cfg);
NQL_API int nql_synth_generate(const nql_synth_config* cfg, size_t pages, const char* outdir, int threads);

/* ---- training ---- */

typedef struct nql_train_config {
  size_t hidden_size;
  double learning_rate;
  double momentum;
  size_t max_epochs;
  size_t patience;
  double gradient_clip;
  size_t batch_size;
  uint64_t seed;
  int reproducible;
  int threads;
  int direction; /* nql_direction */
} nql_train_config;

typedef struct nql_epoch_metrics {
  size_t epoch;
  double train_ctc_loss;
  double train_label_error;
  double val_label_error;
  double wall_seconds;
} nql_epoch_metrics;

typedef struct nql_train_summary {
  size_t epochs_run;
  size_t best_epoch;
  double best_val_label_error;
  size_t processed;
  size_t skipped;
  int early_stopped;
  double train_seconds;
} nql_train_summary;

typedef void (*nql_epoch_callback)(const nql_epoch_metrics* metrics, void* user);

NQL_API void nql_train_config_init(nql_train_config* cfg);

/* metrics_csv, callback and summary may be NULL. */
NQL_API int nql_train(const char* manifest, const char* alphabet, const nql_train_config* cfg,
                      const char* model_out, const char* metrics_csv, nql_epoch_callback on_epoch, void* user,
                      nql_train_summary* summary);

/* split: "train", "val" or "test". per_sample_tsv may be NULL. */
NQL_API int nql_evaluate(const char* model, const char* manifest, const char* alphabet, const char* split,
                         int direction, int threads, const char* per_sample_tsv, double* label_error_rate);

typedef struct nql_sweep_row {
  size_t hidden_size;
  double best_val_label_error;
  double test_label_error;
  double train_seconds;
  size_t epochs;
} nql_sweep_row;

/* rows may be NULL; otherwise it must hold count entries. */
NQL_API int nql_sweep(const char* manifest, const char* alphabet, const size_t* sizes, size_t count,
                      const nql_train_config* base, const char* csv_out, nql_sweep_row* rows);

/* ---- models ---- */

typedef struct nql_model nql_model;

/* alphabet may be NULL to skip the fingerprint check. */
NQL_API int nql_model_load(const char* path, const char* alphabet, nql_model** out);
NQL_API int nql_model_shape(const nql_model* model, size_t* input, size_t* hidden, size_t* classes);
/* Decodes one line image into space-separated tokens. */
NQL_API int nql_model_recognize(const nql_model* model, const char* line_image, int direction, char* buf,
                                size_t cap, size_t* needed);
NQL_API void nql_model_free(nql_model* model);

/* ---- configuration and pipeline ---- */

typedef void (*nql_key_value_visitor)(const char* key, const char* value, void* user);

/* Reads `key = value` lines and calls visit for each pair in file order. */
NQL_API int nql_config_read(const char* path, nql_key_value_visitor visit, void* user);

typedef struct nql_pipeline nql_pipeline;

typedef struct nql_pipeline_report {
  size_t pages;
  size_t lines_segmented;
  size_t lines_matched;
  size_t mismatched_pages;
  size_t epochs_run;
  size_t best_epoch;
  double best_val_label_error;
  double test_label_error;
} nql_pipeline_report;

typedef void (*nql_stage_callback)(const char* stage, void* user);

/* config_path may be NULL for an empty configuration. */
NQL_API int nql_pipeline_new(const char* config_path, nql_pipeline** out);
/* Unknown keys fail with NQL_ERR_USAGE and a message naming the key. */
NQL_API int nql_pipeline_set(nql_pipeline* pipeline, const char* key, const char* value);
NQL_API int nql_pipeline_run(const nql_pipeline* pipeline, nql_stage_callback on_stage, nql_epoch_callback on_epoch,
                             void* user, nql_pipeline_report* report);
NQL_API void nql_pipeline_free(nql_pipeline* pipeline);

NQL_API int nql_run_pipeline(const char* config_path, nql_pipeline_report* report);

#ifdef __cplusplus
}
#endif

#endif /* NASTALIQ_H */
