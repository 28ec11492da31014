#include "qhs.h"

#include "core/diagnostics.hpp"
#include "core/learner.hpp"

#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

namespace {

thread_local std::string g_last_error;

qhs_status set_error(qhs_status status, const char* message) {
  g_last_error = message;
  return status;
}

qhs_status from_code(qhs::ErrorCode code) {
  switch (code) {
    case qhs::ErrorCode::InvalidArgument: return QHS_ERROR_INVALID_ARGUMENT;
    case qhs::ErrorCode::DimensionMismatch: return QHS_ERROR_DIMENSION_MISMATCH;
    case qhs::ErrorCode::NonFiniteInput: return QHS_ERROR_NONFINITE_INPUT;
    case qhs::ErrorCode::UnknownLabel: return QHS_ERROR_UNKNOWN_LABEL;
    case qhs::ErrorCode::SingularSystem: return QHS_ERROR_SINGULAR_SYSTEM;
    case qhs::ErrorCode::UnsupportedMode: return QHS_ERROR_UNSUPPORTED_MODE;
    case qhs::ErrorCode::BadCheckpoint: return QHS_ERROR_BAD_CHECKPOINT;
    case qhs::ErrorCode::LimitExceeded: return QHS_ERROR_LIMIT_EXCEEDED;
    case qhs::ErrorCode::Internal: return QHS_ERROR_INTERNAL;
  }
  return QHS_ERROR_INTERNAL;
}

template <typename Fn>
qhs_status guarded(Fn&& fn) {
  try {
    fn();
    return QHS_OK;
  } catch (const qhs::Error& e) {
    g_last_error = e.what();
    return from_code(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return QHS_ERROR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QHS_ERROR_INTERNAL;
  }
}

qhs::LearnerConfig to_core(const qhs_config& c) {
  qhs::LearnerConfig config;
  config.capacity = c.capacity;
  config.multiplier = c.multiplier;
  config.gamma_g = c.gamma_g;
  config.sigma = c.sigma;
  config.feature_scaling = c.feature_scaling;
  if (c.epsilon >= 0.0) config.epsilon = c.epsilon;
  config.mode = c.mode == QHS_MODE_SOFT ? qhs::SolveMode::Soft : qhs::SolveMode::Hard;
  config.cost_labeled = c.cost_labeled;
  config.cost_unlabeled = c.cost_unlabeled;
  config.outlier_rejection = c.outlier_rejection != 0;
  config.class_count = c.class_count;
  config.track_lineage = c.track_lineage != 0;
  return config;
}

void to_c(const qhs::StepRecord& rec, qhs_step_record* out) {
  out->step = rec.step;
  out->prediction = rec.prediction;
  out->outlier = rec.outlier ? 1 : 0;
  out->margin = rec.margin;
  out->class0_score = rec.class0_score;
  out->centroid_count = rec.centroid_count;
  out->radius_defined = rec.radius_defined ? 1 : 0;
  out->radius = rec.radius;
  out->repartition_passes = rec.repartition_passes;
  out->solve_residual = rec.solve_residual;
  out->solve_fallback = rec.solve_fallback ? 1 : 0;
  out->wall_time_ms = rec.wall_time_ms;
  out->assigned_centroid = rec.assigned_centroid;
  out->is_new_centroid = rec.is_new_centroid ? 1 : 0;
}

qhs::Matrix to_matrix(const double* data, int64_t count, int32_t dim) {
  qhs::require(data != nullptr && count >= 0 && dim >= 1, qhs::ErrorCode::InvalidArgument,
               "bad point buffer");
  qhs::Matrix m(count, dim);
  for (int64_t i = 0; i < count; ++i)
    for (int32_t j = 0; j < dim; ++j) m(i, j) = data[i * dim + j];
  return m;
}

std::vector<qhs::ClassId> to_labels(const int32_t* labels, int64_t count) {
  std::vector<qhs::ClassId> out(static_cast<std::size_t>(count), qhs::kNoLabel);
  if (labels != nullptr)
    for (int64_t i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = labels[i];
  return out;
}

}  // namespace

struct qhs_learner {
  qhs::Learner impl;
};

struct qhs_replay {
  qhs::ReplayTrace trace;
};

extern "C" {

const char* qhs_version(void) { return "1.0.0"; }

const char* qhs_status_name(qhs_status status) {
  switch (status) {
    case QHS_OK: return "ok";
    case QHS_ERROR_INVALID_ARGUMENT: return "invalid_argument";
    case QHS_ERROR_DIMENSION_MISMATCH: return "dimension_mismatch";
    case QHS_ERROR_NONFINITE_INPUT: return "nonfinite_input";
    case QHS_ERROR_UNKNOWN_LABEL: return "unknown_label";
    case QHS_ERROR_SINGULAR_SYSTEM: return "singular_system";
    case QHS_ERROR_UNSUPPORTED_MODE: return "unsupported_mode";
    case QHS_ERROR_BAD_CHECKPOINT: return "bad_checkpoint";
    case QHS_ERROR_LIMIT_EXCEEDED: return "limit_exceeded";
    case QHS_ERROR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* qhs_last_error(void) { return g_last_error.c_str(); }

void qhs_config_init(qhs_config* config) {
  if (config == nullptr) return;
  config->capacity = 0;
  config->multiplier = 1.5;
  config->gamma_g = 0.0;
  config->sigma = 1.0;
  config->feature_scaling = 1;
  config->epsilon = -1.0; /* default rule: 0.1 * gamma_g */
  config->mode = QHS_MODE_HARD;
  config->cost_labeled = 1.0;
  config->cost_unlabeled = 0.01;
  config->outlier_rejection = 1;
  config->class_count = 2;
  config->track_lineage = 0;
}

qhs_status qhs_learner_create(const qhs_config* config, qhs_learner** out_learner) {
  if (config == nullptr || out_learner == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  *out_learner = nullptr;
  return guarded([&] { *out_learner = new qhs_learner{qhs::Learner(to_core(*config))}; });
}

void qhs_learner_destroy(qhs_learner* learner) { delete learner; }

qhs_status qhs_learner_seed(qhs_learner* learner, const double* points, int64_t count,
                            int32_t dim, const int32_t* labels) {
  if (learner == nullptr || labels == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    learner->impl.seed(to_matrix(points, count, dim), to_labels(labels, count));
  });
}

qhs_status qhs_learner_step(qhs_learner* learner, const double* point, int32_t dim,
                            int32_t label, qhs_step_record* out_record) {
  if (learner == nullptr || point == nullptr || dim < 1)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    Eigen::Map<const qhs::Vector> x(point, dim);
    qhs::StepRecord rec = learner->impl.step(x, label);
    if (out_record != nullptr) to_c(rec, out_record);
  });
}

qhs_status qhs_learner_get_stats(const qhs_learner* learner, qhs_learner_stats* out_stats) {
  if (learner == nullptr || out_stats == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const qhs::CentroidSet& set = learner->impl.centroids();
    out_stats->centroid_count = set.size();
    out_stats->dimension = set.dimension();
    out_stats->radius_defined = set.radius().has_value() ? 1 : 0;
    out_stats->radius = set.radius().value_or(0.0);
    out_stats->distortion_bound = set.distortion_bound();
    out_stats->accepted_points = set.accepted_points();
    out_stats->labels_seen = learner->impl.labels_seen();
    out_stats->outliers_rejected = learner->impl.outliers_rejected();
    out_stats->conflicted_centroids = learner->impl.conflicted_centroids();
  });
}

qhs_status qhs_learner_centroid(const qhs_learner* learner, int32_t index, double* out_location,
                                int32_t dim, qhs_centroid_info* out_info) {
  if (learner == nullptr) return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const qhs::CentroidSet& set = learner->impl.centroids();
    qhs::require(index >= 0 && index < set.size(), qhs::ErrorCode::InvalidArgument,
                 "centroid index out of range");
    const qhs::Centroid& c = set.centroids()[static_cast<std::size_t>(index)];
    if (out_location != nullptr) {
      qhs::require(dim == c.location.size(), qhs::ErrorCode::DimensionMismatch,
                   "location buffer has the wrong dimension");
      for (int32_t j = 0; j < dim; ++j) out_location[j] = c.location[j];
    }
    if (out_info != nullptr) {
      out_info->multiplicity = c.multiplicity;
      out_info->labeled_count = c.labeled_count();
      out_info->majority_class = c.is_labeled() ? c.majority_class() : QHS_NO_LABEL;
      out_info->insertion_index = c.insertion_index;
    }
  });
}

qhs_status qhs_learner_checkpoint(const qhs_learner* learner, uint8_t** out_data,
                                  size_t* out_size) {
  if (learner == nullptr || out_data == nullptr || out_size == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  *out_data = nullptr;
  *out_size = 0;
  return guarded([&] {
    std::vector<std::uint8_t> blob = learner->impl.checkpoint();
    auto* data = static_cast<uint8_t*>(std::malloc(blob.size()));
    qhs::require(data != nullptr, qhs::ErrorCode::Internal, "out of memory");
    std::memcpy(data, blob.data(), blob.size());
    *out_data = data;
    *out_size = blob.size();
  });
}

qhs_status qhs_learner_restore(const uint8_t* data, size_t size, qhs_learner** out_learner) {
  if (data == nullptr || out_learner == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  *out_learner = nullptr;
  return guarded([&] {
    *out_learner = new qhs_learner{qhs::Learner::restore(data, size)};
  });
}

void qhs_buffer_free(void* buffer) { std::free(buffer); }

qhs_status qhs_estimate_sigma(const double* points, int64_t count, int32_t dim,
                              double* out_sigma) {
  if (out_sigma == nullptr) return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out_sigma = qhs::estimate_sigma(to_matrix(points, count, dim)); });
}

void qhs_replay_options_init(qhs_replay_options* options) {
  if (options == nullptr) return;
  options->compute_online = 1;
  options->compute_theory = 1;
  options->gap_stride = 1;
  options->max_points = 5000;
  options->compute_prop3 = 0;
  options->prop3_delta = 0.05;
}

qhs_status qhs_replay_run(const qhs_config* config, const double* points, int64_t count,
                          int32_t dim, const int32_t* train_labels, const int32_t* eval_labels,
                          const qhs_replay_options* options, qhs_replay** out_replay) {
  if (config == nullptr || out_replay == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  *out_replay = nullptr;
  return guarded([&] {
    qhs::ReplayOptions opts;
    if (options != nullptr) {
      opts.compute_online = options->compute_online != 0;
      opts.compute_theory = options->compute_theory != 0;
      opts.gap_stride = options->gap_stride;
      opts.max_points = options->max_points;
      opts.compute_prop3 = options->compute_prop3 != 0;
      opts.prop3_delta = options->prop3_delta;
    }
    qhs::ReplayTrace trace =
        qhs::replay(to_matrix(points, count, dim), to_labels(train_labels, count),
                    to_labels(eval_labels, count), to_core(*config), opts);
    *out_replay = new qhs_replay{std::move(trace)};
  });
}

void qhs_replay_destroy(qhs_replay* replay) { delete replay; }

qhs_status qhs_replay_size(const qhs_replay* replay, int64_t* out_n) {
  if (replay == nullptr || out_n == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  *out_n = replay->trace.n();
  return QHS_OK;
}

qhs_status qhs_replay_get_row(const qhs_replay* replay, int64_t t, qhs_replay_row* out_row) {
  if (replay == nullptr || out_row == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  if (t < 0 || t >= replay->trace.n())
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "row index out of range");
  const qhs::StepDiagnostics& s = replay->trace.steps[static_cast<std::size_t>(t)];
  out_row->t = s.t;
  out_row->truth = s.truth;
  out_row->quantized_prediction = s.quantized_prediction;
  out_row->outlier = s.outlier ? 1 : 0;
  out_row->labels_so_far = s.labels_so_far;
  out_row->quantized_score = s.quantized_score;
  out_row->offline_score = s.offline_score;
  out_row->online_score = s.online_score;
  out_row->theory_quantized_score = s.theory_quantized_score;
  out_row->gap_unnormalized = s.gap_unnormalized;
  out_row->gap_normalized = s.gap_normalized;
  out_row->lemma2_lhs = s.lemma2_lhs;
  out_row->lemma2_rhs = s.lemma2_rhs;
  out_row->acc_quantized = s.acc_quantized;
  out_row->acc_online = s.acc_online;
  out_row->acc_offline = s.acc_offline;
  return QHS_OK;
}

qhs_status qhs_replay_get_summary(const qhs_replay* replay, qhs_replay_summary* out_summary) {
  if (replay == nullptr || out_summary == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  const qhs::ReplayTrace& trace = replay->trace;
  const qhs::StepDiagnostics& last = trace.steps.back();
  out_summary->n = trace.n();
  out_summary->n_l = trace.n_l;
  out_summary->accuracy_quantized = last.acc_quantized;
  out_summary->accuracy_online = last.acc_online;
  out_summary->accuracy_offline = last.acc_offline;
  out_summary->final_gap_normalized = trace.final_gap_normalized;
  out_summary->final_gap_unnormalized = trace.final_gap_unnormalized;
  out_summary->offline_empirical_risk = trace.offline_empirical_risk;
  out_summary->lambda_max_laplacian = trace.lambda_max_laplacian;
  out_summary->conflicts = trace.conflicts;
  int64_t outliers = 0;
  for (const auto& s : trace.steps) outliers += s.outlier ? 1 : 0;
  out_summary->abstention_rate =
      static_cast<double>(outliers) / static_cast<double>(trace.steps.size());
  return QHS_OK;
}

qhs_status qhs_replay_audit(const qhs_replay* replay, qhs_audit_report* out_report) {
  if (replay == nullptr || out_report == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    qhs::BoundReport report = qhs::audit_bounds(replay->trace);
    std::memset(out_report, 0, sizeof(*out_report));
    out_report->all_hold = report.all_hold ? 1 : 0;
    out_report->check_count = 0;
    for (const auto& check : report.checks) {
      if (out_report->check_count == 16) break;
      qhs_bound_check& slot = out_report->checks[out_report->check_count++];
      std::snprintf(slot.name, sizeof(slot.name), "%s", check.name.c_str());
      slot.checked = check.checked;
      slot.violations = check.violations;
      slot.max_lhs = check.max_lhs;
      slot.max_rhs = check.max_rhs;
      slot.min_slack = check.min_slack;
    }
    if (report.prop3.has_value()) {
      out_report->has_prop3 = 1;
      out_report->beta_bound = report.prop3->beta_bound;
      out_report->transductive_bound = report.prop3->transductive_bound;
      out_report->beta_negative = report.prop3->beta_negative ? 1 : 0;
    }
  });
}

qhs_status qhs_replay_error_decomposition(const qhs_replay* replay,
                                          qhs_error_decomposition* out_decomposition) {
  if (replay == nullptr || out_decomposition == nullptr)
    return set_error(QHS_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    qhs::ErrorDecomposition d = qhs::decompose_error(replay->trace);
    out_decomposition->lhs = d.lhs;
    out_decomposition->offline_term = d.offline_term;
    out_decomposition->online_term = d.online_term;
    out_decomposition->quantization_term = d.quantization_term;
    out_decomposition->holds = d.holds ? 1 : 0;
  });
}

} /* extern "C" */
