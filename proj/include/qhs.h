/*
 * qhs - streaming semi-supervised learning on quantized similarity graphs.
 *
 * C interface over the core engine: opaque handles, integer status codes,
 * thread-local error messages. All matrices are row-major double arrays.
 */
#ifndef QHS_H
#define QHS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(QHS_BUILD_SHARED)
#    define QHS_API __declspec(dllexport)
#  else
#    define QHS_API __declspec(dllimport)
#  endif
#else
#  if defined(QHS_BUILD_SHARED)
#    define QHS_API __attribute__((visibility("default")))
#  else
#    define QHS_API
#  endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct qhs_learner qhs_learner;
typedef struct qhs_replay qhs_replay;

typedef enum qhs_status {
  QHS_OK = 0,
  QHS_ERROR_INVALID_ARGUMENT = 1,
  QHS_ERROR_DIMENSION_MISMATCH = 2,
  QHS_ERROR_NONFINITE_INPUT = 3,
  QHS_ERROR_UNKNOWN_LABEL = 4,
  QHS_ERROR_SINGULAR_SYSTEM = 5,
  QHS_ERROR_UNSUPPORTED_MODE = 6,
  QHS_ERROR_BAD_CHECKPOINT = 7,
  QHS_ERROR_LIMIT_EXCEEDED = 8,
  QHS_ERROR_INTERNAL = 9
} qhs_status;

/* Label sentinel on inputs; abstention sentinel on predictions. */
#define QHS_NO_LABEL (-1)
#define QHS_ABSTAIN (-1)

enum { QHS_MODE_HARD = 0, QHS_MODE_SOFT = 1 };

typedef struct qhs_config {
  int32_t capacity;          /* max number of centroids (k), required >= 1 */
  double multiplier;         /* radius growth factor m > 1, default 1.5 */
  double gamma_g;            /* Laplacian regularizer, >= 0 */
  double sigma;              /* Gaussian kernel width, > 0 */
  int32_t feature_scaling;   /* p in exp(-d^2 / (2 p sigma^2)), default 1 */
  double epsilon;            /* weight cutoff; negative = default 0.1*gamma_g */
  int32_t mode;              /* QHS_MODE_HARD or QHS_MODE_SOFT */
  double cost_labeled;       /* soft-constraint cost on labeled vertices */
  double cost_unlabeled;     /* soft-constraint cost on unlabeled vertices */
  int32_t outlier_rejection; /* nonzero: reject disconnected unlabeled points */
  int32_t class_count;       /* >= 2 */
  int32_t track_lineage;     /* nonzero: keep merge lineage (diagnostic mode) */
} qhs_config;

typedef struct qhs_step_record {
  int64_t step;            /* session-local step index */
  int32_t prediction;      /* class index or QHS_ABSTAIN */
  int32_t outlier;         /* example was rejected, state untouched */
  double margin;           /* best minus runner-up score */
  double class0_score;     /* signed score for binary tasks */
  int32_t centroid_count;
  int32_t radius_defined;
  double radius;
  int32_t repartition_passes;
  double solve_residual;
  int32_t solve_fallback;
  double wall_time_ms;
  int32_t assigned_centroid;
  int32_t is_new_centroid;
} qhs_step_record;

typedef struct qhs_learner_stats {
  int32_t centroid_count;
  int32_t dimension; /* -1 before the first observation */
  int32_t radius_defined;
  double radius;
  double distortion_bound; /* R m / (m - 1), 0 while R is undefined */
  int64_t accepted_points;
  int64_t labels_seen;
  int64_t outliers_rejected;
  int64_t conflicted_centroids; /* centroids holding more than one class */
} qhs_learner_stats;

typedef struct qhs_centroid_info {
  int64_t multiplicity;
  int64_t labeled_count;
  int32_t majority_class; /* QHS_NO_LABEL when unlabeled */
  int64_t insertion_index;
} qhs_centroid_info;

typedef struct qhs_replay_options {
  int32_t compute_online;  /* per-step solves on the observed raw graph */
  int32_t compute_theory;  /* per-step solves on the expanded quantized graph */
  int32_t gap_stride;      /* 0: final-step gap only; s: every s-th step */
  int64_t max_points;      /* replay memory guard */
  int32_t compute_prop3;   /* also extract the stability-bound quantities */
  double prop3_delta;
} qhs_replay_options;

/* Absent values are NaN. Scores are the signed class-0 column. */
typedef struct qhs_replay_row {
  int64_t t;
  int32_t truth; /* evaluation label or QHS_NO_LABEL */
  int32_t quantized_prediction;
  int32_t outlier;
  int64_t labels_so_far;
  double quantized_score;
  double offline_score;
  double online_score;
  double theory_quantized_score;
  double gap_unnormalized;
  double gap_normalized;
  double lemma2_lhs;
  double lemma2_rhs;
  double acc_quantized;
  double acc_online;
  double acc_offline;
} qhs_replay_row;

typedef struct qhs_replay_summary {
  int64_t n;
  int64_t n_l;
  double accuracy_quantized;
  double accuracy_online;
  double accuracy_offline;
  double final_gap_normalized;
  double final_gap_unnormalized;
  double offline_empirical_risk;
  double lambda_max_laplacian;
  int64_t conflicts;
  double abstention_rate;
} qhs_replay_summary;

typedef struct qhs_bound_check {
  char name[32];
  int64_t checked;
  int64_t violations;
  double max_lhs;
  double max_rhs;
  double min_slack;
} qhs_bound_check;

typedef struct qhs_audit_report {
  int32_t check_count;
  int32_t all_hold;
  qhs_bound_check checks[16];
  int32_t has_prop3;
  double beta_bound;
  double transductive_bound;
  int32_t beta_negative;
} qhs_audit_report;

typedef struct qhs_error_decomposition {
  double lhs;
  double offline_term;
  double online_term;
  double quantization_term;
  int32_t holds;
} qhs_error_decomposition;

/* Library version and status names. */
QHS_API const char* qhs_version(void);
QHS_API const char* qhs_status_name(qhs_status status);

/* Message for the most recent failure on this thread. */
QHS_API const char* qhs_last_error(void);

/* Fills defaults; capacity is left at 0 and must be set by the caller. */
QHS_API void qhs_config_init(qhs_config* config);

QHS_API qhs_status qhs_learner_create(const qhs_config* config, qhs_learner** out_learner);
QHS_API void qhs_learner_destroy(qhs_learner* learner);

/* Labeled warm-up batch; only valid before the first step. */
QHS_API qhs_status qhs_learner_seed(qhs_learner* learner, const double* points, int64_t count,
                                    int32_t dim, const int32_t* labels);

QHS_API qhs_status qhs_learner_step(qhs_learner* learner, const double* point, int32_t dim,
                                    int32_t label, qhs_step_record* out_record);

QHS_API qhs_status qhs_learner_get_stats(const qhs_learner* learner, qhs_learner_stats* out_stats);

/* Copies a centroid location (dim doubles) and its bookkeeping. */
QHS_API qhs_status qhs_learner_centroid(const qhs_learner* learner, int32_t index,
                                        double* out_location, int32_t dim,
                                        qhs_centroid_info* out_info);

/* Versioned snapshot; free the buffer with qhs_buffer_free. */
QHS_API qhs_status qhs_learner_checkpoint(const qhs_learner* learner, uint8_t** out_data,
                                          size_t* out_size);
QHS_API qhs_status qhs_learner_restore(const uint8_t* data, size_t size,
                                       qhs_learner** out_learner);
QHS_API void qhs_buffer_free(void* buffer);

/* Mean per-feature standard deviation of a warm-up buffer. */
QHS_API qhs_status qhs_estimate_sigma(const double* points, int64_t count, int32_t dim,
                                      double* out_sigma);

QHS_API void qhs_replay_options_init(qhs_replay_options* options);

/*
 * Replays a finite binary stream offline: the live quantized learner next to
 * the offline, online and expanded-quantized solution families, with
 * Laplacian gaps and bound bookkeeping. Labels use QHS_NO_LABEL for "none";
 * train labels are revealed to the learner, eval labels only score it.
 */
QHS_API qhs_status qhs_replay_run(const qhs_config* config, const double* points, int64_t count,
                                  int32_t dim, const int32_t* train_labels,
                                  const int32_t* eval_labels,
                                  const qhs_replay_options* options, qhs_replay** out_replay);
QHS_API void qhs_replay_destroy(qhs_replay* replay);

QHS_API qhs_status qhs_replay_size(const qhs_replay* replay, int64_t* out_n);
QHS_API qhs_status qhs_replay_get_row(const qhs_replay* replay, int64_t t,
                                      qhs_replay_row* out_row);
QHS_API qhs_status qhs_replay_get_summary(const qhs_replay* replay,
                                          qhs_replay_summary* out_summary);

/* Inequality audit over the replay; fails only on bad inputs, violations are
 * reported in the result. */
QHS_API qhs_status qhs_replay_audit(const qhs_replay* replay, qhs_audit_report* out_report);

QHS_API qhs_status qhs_replay_error_decomposition(const qhs_replay* replay,
                                                  qhs_error_decomposition* out_decomposition);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QHS_H */
