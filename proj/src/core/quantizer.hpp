#pragma once

#include "core/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

namespace qhs {

// Per-class count of labeled points absorbed by a centroid. last_seen is the
// acceptance clock of the most recent such point and breaks majority ties.
struct LabelTally {
  std::int64_t count = 0;
  std::int64_t last_seen = -1;
};

struct Centroid {
  Vector location;
  std::int64_t multiplicity = 1;
  std::map<ClassId, LabelTally> label_tally;  // ordered: deterministic iteration
  std::int64_t insertion_index = 0;

  std::int64_t labeled_count() const;
  bool is_labeled() const { return !label_tally.empty(); }
  // Majority class; ties go to the most recently seen label, then the lowest id.
  ClassId majority_class() const;
};

struct AssignmentOutcome {
  int assigned_centroid = -1;  // position in the centroid list after this step
  bool is_new_centroid = false;
  bool repartition_occurred = false;
  int repartition_passes = 0;
};

// Merge lineage, kept only in diagnostic mode. point_assignments[i] is the
// insertion_index (uid) of the centroid that absorbed accepted point i;
// merged_into chains dropped uids to their survivors.
struct ChainLog {
  std::vector<std::int64_t> point_assignments;
  std::unordered_map<std::int64_t, std::int64_t> merged_into;

  std::int64_t resolve(std::int64_t uid) const;
};

// Full state snapshot used by the learner checkpoint.
struct CentroidSetState {
  int capacity = 0;
  double multiplier = 0.0;
  bool track_lineage = false;
  std::vector<Centroid> centroids;
  std::optional<double> radius;
  std::int64_t accepted_points = 0;
  std::int64_t labeled_points = 0;
  std::int64_t next_uid = 0;
  ChainLog chain;
};

// Incremental k-centers summary of a stream: at most `capacity` centroids with
// multiplicities, merged greedily at radius R, R growing by `multiplier` per
// pass whenever the set overflows.
class CentroidSet {
 public:
  CentroidSet(int capacity, double multiplier, bool track_lineage = false);
  explicit CentroidSet(CentroidSetState state);

  // One quantizer step: repartition on entry if the set is over capacity, then
  // absorb `point` into a centroid at distance < R or append it as a centroid.
  AssignmentOutcome observe(const Vector& point);

  // Adds a labeled observation to the tally of the centroid at `position`.
  void record_label(int position, ClassId label);

  const std::vector<Centroid>& centroids() const { return centroids_; }
  int size() const { return static_cast<int>(centroids_.size()); }
  int capacity() const { return capacity_; }
  double multiplier() const { return multiplier_; }
  std::optional<double> radius() const { return radius_; }
  int dimension() const { return dimension_; }  // -1 until the first point
  std::int64_t accepted_points() const { return accepted_points_; }
  std::int64_t labeled_points() const { return labeled_points_; }
  bool lineage_enabled() const { return track_lineage_; }
  const ChainLog& chain() const;

  // Number of centroids whose tally holds more than one class.
  std::int64_t mixed_tally_count() const;

  // Worst-case distance from any absorbed point to its current centroid,
  // R*m/(m-1); 0 while R is undefined.
  double distortion_bound() const;

  // Measured distortion: max distance from each accepted point (rows of
  // raw_points, in acceptance order) to the centroid now representing it.
  // Requires lineage tracking.
  double audit_distortion(const Matrix& raw_points) const;

  CentroidSetState state() const;

 private:
  int repartition_(bool first_trigger);
  int greedy_pass_();
  double min_pairwise_distance_() const;

  int capacity_;
  double multiplier_;
  bool track_lineage_;
  std::vector<Centroid> centroids_;
  std::optional<double> radius_;
  int dimension_ = -1;
  std::int64_t accepted_points_ = 0;
  std::int64_t labeled_points_ = 0;
  std::int64_t next_uid_ = 0;
  ChainLog chain_;
};

}  // namespace qhs
