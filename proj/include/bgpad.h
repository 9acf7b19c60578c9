/* SPDX-License-Identifier: Apache-2.0 */
#ifndef BGPAD_H
#define BGPAD_H

#include <stddef.h>
#include <stdint.h>

#if defined(BGPAD_BUILDING_LIBRARY)
#define BGPAD_API __attribute__((visibility("default")))
#else
#define BGPAD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bgpad_status {
  BGPAD_OK = 0,
  BGPAD_ERR_INVALID_ARGUMENT = 1,
  BGPAD_ERR_PARSE = 2,
  BGPAD_ERR_IO = 3,
  BGPAD_ERR_SHAPE = 4,
  BGPAD_ERR_NUMERIC = 5,
  BGPAD_ERR_INTERNAL = 6
} bgpad_status;

/* Message of the last failed call on this thread; "" after a success. */
BGPAD_API const char* bgpad_last_error(void);
BGPAD_API const char* bgpad_status_name(bgpad_status s);
BGPAD_API const char* bgpad_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
BGPAD_API void bgpad_string_free(char* s);

/* Writes `size` bytes via a temp file and rename. */
BGPAD_API bgpad_status bgpad_write_file(const char* path, const char* data, size_t size);

typedef struct bgpad_records bgpad_records; /* parsed BGP update records */
typedef struct bgpad_series bgpad_series;   /* labeled per-minute series */
typedef struct bgpad_config bgpad_config;   /* pipeline configuration */
typedef struct bgpad_model bgpad_model;     /* trained model + preprocessing */
typedef struct bgpad_report bgpad_report;   /* evaluation report */

/* ---- ingest ------------------------------------------------------------ */

typedef struct bgpad_ingest_options {
  const uint32_t* peer_as; /* NULL or empty: every peer */
  size_t peer_as_count;
  int64_t start; /* inclusive, unix seconds */
  int64_t end;   /* exclusive; 0 means unbounded */
  int family;    /* 0 any, 4 IPv4 only, 6 IPv6 only */
} bgpad_ingest_options;

typedef struct bgpad_ingest_counters {
  uint64_t total;
  uint64_t emitted;
  uint64_t skipped_non_update;
  uint64_t skipped_unknown_type;
  uint64_t skipped_filtered;
  uint64_t dropped_malformed;
} bgpad_ingest_counters;

/* Reads MRT (optionally gzip) or text update logs and merges them by time. */
BGPAD_API bgpad_status bgpad_ingest(const char* const* paths, size_t path_count, const bgpad_ingest_options* options,
                                    bgpad_records** out);
BGPAD_API void bgpad_records_free(bgpad_records* r);
BGPAD_API size_t bgpad_records_count(const bgpad_records* r);
BGPAD_API bgpad_status bgpad_records_counters(const bgpad_records* r, bgpad_ingest_counters* out);
BGPAD_API bgpad_status bgpad_records_write_text(const bgpad_records* r, const char* path);

/* ---- features ---------------------------------------------------------- */

typedef struct bgpad_feature_options {
  uint32_t rare_threshold; /* 0 selects the default (5) */
  int flap_definition;     /* 0 duplicate, 1 withdraw then re-announce */
  size_t prefix_cap;       /* 0 unbounded */
} bgpad_feature_options;

/* labels_json: NULL or `[{"event":1,"start":t0,"end":t1}, ...]`. */
BGPAD_API bgpad_status bgpad_featurize(const bgpad_records* r, const char* labels_json,
                                       const bgpad_feature_options* options, bgpad_series** out);

BGPAD_API bgpad_status bgpad_series_read_csv(const char* path, bgpad_series** out);
BGPAD_API bgpad_status bgpad_series_write_csv(const bgpad_series* s, const char* path);
BGPAD_API void bgpad_series_free(bgpad_series* s);
BGPAD_API size_t bgpad_series_rows(const bgpad_series* s);
BGPAD_API size_t bgpad_series_cols(const bgpad_series* s);
BGPAD_API bgpad_status bgpad_series_value(const bgpad_series* s, size_t row, size_t col, double* out);
BGPAD_API bgpad_status bgpad_series_label(const bgpad_series* s, size_t row, int* out);
BGPAD_API bgpad_status bgpad_series_column_name(const bgpad_series* s, size_t col, char** out);

/* events: comma-separated preset names (worm, blackout, leak, flap, origin, rare). */
BGPAD_API bgpad_status bgpad_synth(const char* events, size_t n, double anomaly_fraction, double strength,
                                   uint64_t seed, bgpad_series** out);
/* One preset event: `samples` rows, anomaly between `before` normal rows on each side. */
BGPAD_API bgpad_status bgpad_synth_event_set(const char* preset, size_t samples, size_t before, uint64_t seed,
                                             bgpad_series** out);

/* ---- configuration ----------------------------------------------------- */

BGPAD_API bgpad_status bgpad_config_new(bgpad_config** out);
BGPAD_API void bgpad_config_free(bgpad_config* c);
/* Keys: seed, stl, period, seasonal_span, trend_span, lowpass_span, inner,
 * outer, window, hidden, activation, leaky_mode, leaky_slope, fusion,
 * feature_gat, temporal_gat, lr, dropout, epochs, optimizer, batch,
 * patience, class_weights, split, stratified, chronological, jobs. */
BGPAD_API bgpad_status bgpad_config_set(bgpad_config* c, const char* key, const char* value);
/* Every value, defaults included, as JSON. */
BGPAD_API bgpad_status bgpad_config_json(const bgpad_config* c, char** out);
BGPAD_API bgpad_status bgpad_config_hash(const bgpad_config* c, char** out);

typedef void (*bgpad_epoch_callback)(size_t epoch, double train_loss, double val_f1, void* user);
BGPAD_API void bgpad_config_set_progress(bgpad_config* c, bgpad_epoch_callback cb, void* user);

/* ---- augmentation and windows ------------------------------------------ */

/* STL expansion to [obs, res, seas, trend, w] channel blocks. */
BGPAD_API bgpad_status bgpad_augment(const bgpad_series* s, const bgpad_config* c, bgpad_series** out);
/* Stride-1 windows, min-max normalized with statistics of `s`, as CSV. */
BGPAD_API bgpad_status bgpad_windows_csv(const bgpad_series* s, const bgpad_config* c, char** out);

/* ---- training and evaluation ------------------------------------------- */

/* Augment, window, split, train, and evaluate on the test split. */
BGPAD_API bgpad_status bgpad_train(const bgpad_series* raw, const bgpad_config* c, bgpad_model** model,
                                   bgpad_report** report);
/* Scores every window of `raw` with the model's preprocessing. */
BGPAD_API bgpad_status bgpad_evaluate(const bgpad_model* m, const bgpad_series* raw, bgpad_report** out);

BGPAD_API bgpad_status bgpad_model_save(const bgpad_model* m, const char* path);
BGPAD_API bgpad_status bgpad_model_load(const char* path, bgpad_model** out);
BGPAD_API void bgpad_model_free(bgpad_model* m);
/* Training log CSV (epoch,train_loss,val_f1,val_accuracy,val_loss); empty for loaded models. */
BGPAD_API bgpad_status bgpad_model_log_csv(const bgpad_model* m, char** out);
BGPAD_API bgpad_status bgpad_model_json(const bgpad_model* m, char** out);
BGPAD_API int bgpad_model_equal(const bgpad_model* a, const bgpad_model* b);

BGPAD_API void bgpad_report_free(bgpad_report* r);
BGPAD_API bgpad_status bgpad_report_json(const bgpad_report* r, char** out);
BGPAD_API bgpad_status bgpad_report_csv(const bgpad_report* r, char** out);
/* name: accuracy, precision, recall, f1. */
BGPAD_API bgpad_status bgpad_report_metric(const bgpad_report* r, const char* name, double* out);
BGPAD_API int bgpad_report_equal(const bgpad_report* a, const bgpad_report* b);

/* ---- experiments ------------------------------------------------------- */

/* arms: ';'-separated toggle sets such as "temporal_gat+feature_gat+stl+window;window;none",
 * or NULL for the six default rows. Writes the result table as CSV. */
BGPAD_API bgpad_status bgpad_ablate(const bgpad_series* raw, const bgpad_config* c, const char* arms, char** csv);
/* windows, periods: comma-separated lists, or NULL for the default grid. */
BGPAD_API bgpad_status bgpad_sweep(const bgpad_series* raw, const bgpad_config* c, const char* windows,
                                   const char* periods, char** csv);

/* `samples`/`before` select the rows cut around each event (600/150 by default when 0). */
BGPAD_API bgpad_status bgpad_multiclass(const bgpad_series* const* events, const char* const* names, size_t count,
                                        size_t samples, size_t before, const bgpad_config* c, bgpad_report** report,
                                        bgpad_report** binary_view);
BGPAD_API bgpad_status bgpad_holdout(const bgpad_series* const* events, const char* const* names, size_t count,
                                     size_t held_out, size_t samples, size_t before, const bgpad_config* c,
                                     bgpad_report** unseen, bgpad_report** seen);

/* Averaged attention of each view over the windows of `raw`, as
 * `src,dst,weight` CSV of entries above the thresholds. A disabled view
 * yields only the header line. */
BGPAD_API bgpad_status bgpad_attention(const bgpad_model* m, const bgpad_series* raw, double feature_threshold,
                                       double temporal_threshold, char** feature_csv, char** temporal_csv);

#ifdef __cplusplus
}
#endif

#endif /* BGPAD_H */
