#pragma once

#include "core/kernel_graph.hpp"
#include "core/quantizer.hpp"
#include "core/solver.hpp"
#include "core/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qhs {

struct LearnerConfig {
  int capacity = 0;  // k, required
  double multiplier = 1.5;
  double gamma_g = 0.0;
  double sigma = 1.0;
  int feature_scaling = 1;
  // Weights below epsilon are cut; defaults to 0.1 * gamma_g when unset.
  std::optional<double> epsilon;
  SolveMode mode = SolveMode::Hard;
  double cost_labeled = 1.0;
  double cost_unlabeled = 0.01;
  bool outlier_rejection = true;
  int class_count = 2;
  bool track_lineage = false;

  double resolved_epsilon() const { return epsilon.value_or(0.1 * gamma_g); }
  KernelSpec kernel_spec() const;
  SoftConfig soft_config() const;
  void validate() const;
};

struct StepRecord {
  std::int64_t step = 0;  // session-local index, not part of checkpoints
  ClassId prediction = kAbstain;
  double margin = 0.0;
  double class0_score = 0.0;  // signed score for binary tasks
  bool outlier = false;
  int centroid_count = 0;
  bool radius_defined = false;
  double radius = 0.0;
  int repartition_passes = 0;
  double solve_residual = 0.0;
  bool solve_fallback = false;
  double wall_time_ms = 0.0;
  int assigned_centroid = -1;
  bool is_new_centroid = false;
};

// The online loop: per example, update the quantizer, rebuild the centroid
// graph, solve, and predict at the vertex representing the example. Outliers
// (all kernel weights below epsilon) are rejected without touching any state.
class Learner {
 public:
  explicit Learner(LearnerConfig config);

  // Feeds labeled warm-up examples; only allowed before the first step().
  void seed(const Matrix& points, const std::vector<ClassId>& labels);

  StepRecord step(const Vector& x, ClassId label = kNoLabel);

  const LearnerConfig& config() const { return config_; }
  const CentroidSet& centroids() const { return set_; }
  std::int64_t labels_seen() const { return set_.labeled_points(); }
  std::int64_t accepted_points() const { return set_.accepted_points(); }
  std::int64_t conflicted_centroids() const { return set_.mixed_tally_count(); }
  std::int64_t outliers_rejected() const { return outliers_rejected_; }
  // Solve state of the most recent non-outlier step; null before any.
  const SolveResult* last_solve() const;

  // Versioned binary snapshot of config plus model state. Byte-identical
  // round trips: restore(checkpoint()) checkpoints back to the same bytes.
  std::vector<std::uint8_t> checkpoint() const;
  static Learner restore(const std::uint8_t* data, std::size_t size);
  static Learner restore(const std::vector<std::uint8_t>& blob);

 private:
  Learner(LearnerConfig config, CentroidSetState state);
  bool is_outlier_(const Vector& x) const;

  LearnerConfig config_;
  KernelSpec kernel_;
  CentroidSet set_;
  std::optional<SolveResult> last_solve_;
  std::int64_t steps_emitted_ = 0;
  std::int64_t outliers_rejected_ = 0;
  bool started_ = false;
};

}  // namespace qhs
