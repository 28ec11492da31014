#pragma once

#include "core/learner.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qhs {

// Offline replay of a binary stream computing, side by side with the live
// learner, the solution families used by the bound audits:
//   offline  - the solve on the complete point graph (all labels),
//   online   - the solve on the first t raw points at each step,
//   theory   - the solve on the t-point graph with every point moved to its
//              current centroid (the expanded quantized matrix), sharing the
//              online problem's costs and targets.
struct ReplayOptions {
  bool compute_online = true;
  bool compute_theory = true;
  // 0: final step only; s > 0: every s-th step plus the final one.
  int gap_stride = 1;
  std::int64_t max_points = 5000;
  bool compute_prop3 = false;
  double prop3_delta = 0.05;
};

struct StepDiagnostics {
  std::int64_t t = 0;
  ClassId truth = kNoLabel;
  std::int64_t labels_so_far = 0;

  ClassId quantized_prediction = kAbstain;
  double quantized_score = 0.0;  // live learner score at the example's vertex
  bool outlier = false;

  double offline_score = std::numeric_limits<double>::quiet_NaN();
  double online_score = std::numeric_limits<double>::quiet_NaN();
  double theory_quantized_score = std::numeric_limits<double>::quiet_NaN();

  double online_norm = std::numeric_limits<double>::quiet_NaN();
  double theory_norm = std::numeric_limits<double>::quiet_NaN();

  double gap_unnormalized = std::numeric_limits<double>::quiet_NaN();
  double gap_normalized = std::numeric_limits<double>::quiet_NaN();
  double lemma2_lhs = std::numeric_limits<double>::quiet_NaN();
  double lemma2_rhs = std::numeric_limits<double>::quiet_NaN();

  double acc_quantized = std::numeric_limits<double>::quiet_NaN();
  double acc_online = std::numeric_limits<double>::quiet_NaN();
  double acc_offline = std::numeric_limits<double>::quiet_NaN();
};

struct ReplayTrace {
  LearnerConfig config;
  ReplayOptions options;
  Matrix points;
  std::vector<ClassId> train_labels;
  std::vector<ClassId> eval_labels;
  std::vector<StepDiagnostics> steps;
  std::vector<StepRecord> engine_records;

  std::int64_t n_l = 0;
  double offline_norm = std::numeric_limits<double>::quiet_NaN();
  double offline_empirical_risk = std::numeric_limits<double>::quiet_NaN();
  double lambda_max_laplacian = std::numeric_limits<double>::quiet_NaN();
  double final_gap_normalized = std::numeric_limits<double>::quiet_NaN();
  double final_gap_unnormalized = std::numeric_limits<double>::quiet_NaN();
  std::int64_t conflicts = 0;

  int n() const { return static_cast<int>(points.rows()); }
};

ReplayTrace replay(const Matrix& points, const std::vector<ClassId>& train_labels,
                   const std::vector<ClassId>& eval_labels, const LearnerConfig& config,
                   const ReplayOptions& options = {});

// Mean squared prediction error split into the offline-risk, partial-graph
// and quantization terms, each scaled by 9/2; holds whenever all scores and
// labels lie in [-1, 1].
struct ErrorDecomposition {
  double lhs = 0.0;
  double offline_term = 0.0;
  double online_term = 0.0;
  double quantization_term = 0.0;
  bool holds = false;

  double rhs() const { return offline_term + online_term + quantization_term; }
};

ErrorDecomposition decompose_error(const ReplayTrace& trace);

struct BoundCheck {
  std::string name;
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  double max_lhs = 0.0;
  double max_rhs = 0.0;
  double min_slack = std::numeric_limits<double>::infinity();
};

struct BoundReport {
  std::vector<BoundCheck> checks;
  bool all_hold = true;
  std::optional<Prop3Result> prop3;
};

// Evaluates every inequality the replay can check, per step and cumulatively.
// Requires a soft-mode trace with online and theory families computed.
BoundReport audit_bounds(const ReplayTrace& trace);

struct GapCurvePoint {
  int k = 0;
  double gap_normalized = 0.0;
  double accuracy_quantized = 0.0;
  double accuracy_offline = 0.0;
};

// Final-step normalized-Laplacian gap and cumulative accuracies per capacity.
std::vector<GapCurvePoint> gap_curve(const Matrix& points,
                                     const std::vector<ClassId>& train_labels,
                                     const std::vector<ClassId>& eval_labels,
                                     LearnerConfig config, const std::vector<int>& ks);

// Frobenius distance between normalized Laplacians after dropping, from both
// matrices, every vertex isolated in either (repeated until stable).
double normalized_gap(const Matrix& weights_a, const Matrix& weights_b);

// Largest eigenvalue of a symmetric matrix by power iteration (diagnostics
// reporting only).
double largest_eigenvalue(const Matrix& sym);

}  // namespace qhs
