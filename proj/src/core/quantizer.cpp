#include "core/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qhs {

std::int64_t Centroid::labeled_count() const {
  std::int64_t total = 0;
  for (const auto& [cls, tally] : label_tally) total += tally.count;
  return total;
}

ClassId Centroid::majority_class() const {
  ClassId best = kNoLabel;
  std::int64_t best_count = -1;
  std::int64_t best_seen = -1;
  for (const auto& [cls, tally] : label_tally) {
    if (tally.count > best_count ||
        (tally.count == best_count && tally.last_seen > best_seen)) {
      best = cls;
      best_count = tally.count;
      best_seen = tally.last_seen;
    }
  }
  return best;
}

std::int64_t ChainLog::resolve(std::int64_t uid) const {
  auto it = merged_into.find(uid);
  while (it != merged_into.end()) {
    uid = it->second;
    it = merged_into.find(uid);
  }
  return uid;
}

CentroidSet::CentroidSet(int capacity, double multiplier, bool track_lineage)
    : capacity_(capacity), multiplier_(multiplier), track_lineage_(track_lineage) {
  require(capacity >= 1, ErrorCode::InvalidArgument, "capacity must be >= 1");
  require(multiplier > 1.0, ErrorCode::InvalidArgument, "multiplier must be > 1");
}

CentroidSet::CentroidSet(CentroidSetState state)
    : capacity_(state.capacity),
      multiplier_(state.multiplier),
      track_lineage_(state.track_lineage),
      centroids_(std::move(state.centroids)),
      radius_(state.radius),
      accepted_points_(state.accepted_points),
      labeled_points_(state.labeled_points),
      next_uid_(state.next_uid),
      chain_(std::move(state.chain)) {
  require(capacity_ >= 1, ErrorCode::InvalidArgument, "capacity must be >= 1");
  require(multiplier_ > 1.0, ErrorCode::InvalidArgument, "multiplier must be > 1");
  if (!centroids_.empty()) dimension_ = static_cast<int>(centroids_.front().location.size());
}

CentroidSetState CentroidSet::state() const {
  CentroidSetState s;
  s.capacity = capacity_;
  s.multiplier = multiplier_;
  s.track_lineage = track_lineage_;
  s.centroids = centroids_;
  s.radius = radius_;
  s.accepted_points = accepted_points_;
  s.labeled_points = labeled_points_;
  s.next_uid = next_uid_;
  s.chain = chain_;
  return s;
}

const ChainLog& CentroidSet::chain() const {
  require(track_lineage_, ErrorCode::UnsupportedMode,
          "merge lineage is only recorded in diagnostic mode");
  return chain_;
}

std::int64_t CentroidSet::mixed_tally_count() const {
  std::int64_t n = 0;
  for (const auto& c : centroids_)
    if (c.label_tally.size() > 1) ++n;
  return n;
}

double CentroidSet::min_pairwise_distance_() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids_.size(); ++i)
    for (std::size_t j = i + 1; j < centroids_.size(); ++j)
      best = std::min(best, (centroids_[i].location - centroids_[j].location).norm());
  return best;
}

// One greedy pass in insertion order: keep a centroid when it is >= R from
// every survivor so far, otherwise fold it into the nearest survivor.
int CentroidSet::greedy_pass_() {
  std::vector<Centroid> kept;
  kept.reserve(centroids_.size());
  for (auto& c : centroids_) {
    int nearest = -1;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kept.size(); ++k) {
      double d = (c.location - kept[k].location).norm();
      if (d < nearest_dist) {
        nearest_dist = d;
        nearest = static_cast<int>(k);
      }
    }
    if (nearest >= 0 && nearest_dist < *radius_) {
      Centroid& survivor = kept[static_cast<std::size_t>(nearest)];
      survivor.multiplicity += c.multiplicity;
      for (const auto& [cls, tally] : c.label_tally) {
        LabelTally& into = survivor.label_tally[cls];
        into.count += tally.count;
        into.last_seen = std::max(into.last_seen, tally.last_seen);
      }
      if (track_lineage_) chain_.merged_into[c.insertion_index] = survivor.insertion_index;
    } else {
      kept.push_back(std::move(c));
    }
  }
  int merged = static_cast<int>(centroids_.size() - kept.size());
  centroids_ = std::move(kept);
  return merged;
}

int CentroidSet::repartition_(bool first_trigger) {
  if (first_trigger) {
    radius_ = min_pairwise_distance_();
  } else {
    radius_ = *radius_ * multiplier_;
  }
  int passes = 1;
  greedy_pass_();
  while (static_cast<int>(centroids_.size()) > capacity_) {
    radius_ = *radius_ * multiplier_;
    greedy_pass_();
    ++passes;
  }
  return passes;
}

AssignmentOutcome CentroidSet::observe(const Vector& point) {
  require(point.allFinite(), ErrorCode::NonFiniteInput,
          "observation has non-finite coordinates");
  if (dimension_ < 0) {
    require(point.size() > 0, ErrorCode::InvalidArgument, "observation is empty");
    dimension_ = static_cast<int>(point.size());
  } else {
    if (static_cast<int>(point.size()) != dimension_) {
      std::ostringstream msg;
      msg << "observation has dimension " << point.size() << ", stream has "
          << dimension_;
      fail(ErrorCode::DimensionMismatch, msg.str());
    }
  }

  AssignmentOutcome out;
  if (static_cast<int>(centroids_.size()) == capacity_ + 1) {
    out.repartition_occurred = true;
    out.repartition_passes = repartition_(!radius_.has_value());
  }

  int nearest = -1;
  double nearest_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids_.size(); ++i) {
    double d = (point - centroids_[i].location).norm();
    if (d < nearest_dist) {
      nearest_dist = d;
      nearest = static_cast<int>(i);
    }
  }

  // Before the first trigger only exact duplicates merge; afterwards any
  // point strictly inside R of its nearest centroid does.
  bool absorb = nearest >= 0 &&
                (radius_.has_value() ? nearest_dist < *radius_ : nearest_dist == 0.0);
  if (absorb) {
    centroids_[static_cast<std::size_t>(nearest)].multiplicity += 1;
    out.assigned_centroid = nearest;
    if (track_lineage_)
      chain_.point_assignments.push_back(
          centroids_[static_cast<std::size_t>(nearest)].insertion_index);
  } else {
    Centroid c;
    c.location = point;
    c.multiplicity = 1;
    c.insertion_index = next_uid_++;
    centroids_.push_back(std::move(c));
    out.assigned_centroid = static_cast<int>(centroids_.size()) - 1;
    out.is_new_centroid = true;
    if (track_lineage_)
      chain_.point_assignments.push_back(centroids_.back().insertion_index);
  }
  ++accepted_points_;
  return out;
}

void CentroidSet::record_label(int position, ClassId label) {
  require(position >= 0 && position < size(), ErrorCode::InvalidArgument,
          "centroid position out of range");
  require(label >= 0, ErrorCode::UnknownLabel, "negative class id");
  LabelTally& tally = centroids_[static_cast<std::size_t>(position)].label_tally[label];
  tally.count += 1;
  tally.last_seen = accepted_points_;
  ++labeled_points_;
}

double CentroidSet::distortion_bound() const {
  if (!radius_.has_value()) return 0.0;
  return *radius_ * multiplier_ / (multiplier_ - 1.0);
}

double CentroidSet::audit_distortion(const Matrix& raw_points) const {
  require(track_lineage_, ErrorCode::UnsupportedMode,
          "audit_distortion requires lineage tracking");
  require(raw_points.rows() == static_cast<Eigen::Index>(chain_.point_assignments.size()),
          ErrorCode::InvalidArgument,
          "raw_points must hold every accepted point in order");

  std::unordered_map<std::int64_t, int> position_of;
  position_of.reserve(centroids_.size());
  for (std::size_t i = 0; i < centroids_.size(); ++i)
    position_of.emplace(centroids_[i].insertion_index, static_cast<int>(i));

  std::unordered_map<std::int64_t, int> resolved;  // uid -> surviving position
  double worst = 0.0;
  for (Eigen::Index p = 0; p < raw_points.rows(); ++p) {
    std::int64_t uid = chain_.point_assignments[static_cast<std::size_t>(p)];
    auto memo = resolved.find(uid);
    int pos;
    if (memo != resolved.end()) {
      pos = memo->second;
    } else {
      std::int64_t survivor = chain_.resolve(uid);
      auto it = position_of.find(survivor);
      require(it != position_of.end(), ErrorCode::Internal,
              "merge lineage points at a missing centroid");
      pos = it->second;
      resolved.emplace(uid, pos);
    }
    double d = (raw_points.row(p).transpose() - centroids_[static_cast<std::size_t>(pos)].location).norm();
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace qhs
