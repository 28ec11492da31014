#include "core/learner.hpp"

#include "core/serialize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace qhs {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x314B4851;  // "QHK1"
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

KernelSpec LearnerConfig::kernel_spec() const {
  KernelSpec spec;
  spec.sigma = sigma;
  spec.feature_scaling = feature_scaling;
  spec.epsilon = resolved_epsilon();
  return spec;
}

SoftConfig LearnerConfig::soft_config() const {
  SoftConfig cfg;
  cfg.cost_labeled = cost_labeled;
  cfg.cost_unlabeled = cost_unlabeled;
  cfg.gamma_g = gamma_g;
  return cfg;
}

void LearnerConfig::validate() const {
  require(capacity >= 1, ErrorCode::InvalidArgument, "capacity must be >= 1");
  require(multiplier > 1.0 && std::isfinite(multiplier), ErrorCode::InvalidArgument,
          "multiplier must be > 1");
  require(gamma_g >= 0.0 && std::isfinite(gamma_g), ErrorCode::InvalidArgument,
          "gamma_g must be nonnegative and finite");
  require(class_count >= 2, ErrorCode::InvalidArgument, "class_count must be >= 2");
  kernel_spec().validate();
  if (mode == SolveMode::Soft) soft_config().validate();
}

Learner::Learner(LearnerConfig config)
    : config_(std::move(config)),
      kernel_(config_.kernel_spec()),
      set_(config_.capacity, config_.multiplier, config_.track_lineage) {
  config_.validate();
}

Learner::Learner(LearnerConfig config, CentroidSetState state)
    : config_(std::move(config)), kernel_(config_.kernel_spec()), set_(std::move(state)) {
  config_.validate();
}

bool Learner::is_outlier_(const Vector& x) const {
  for (const auto& c : set_.centroids()) {
    if (kernel_weight(x, c.location, kernel_) >= kernel_.epsilon) return false;
  }
  return true;
}

const SolveResult* Learner::last_solve() const {
  return last_solve_.has_value() ? &*last_solve_ : nullptr;
}

void Learner::seed(const Matrix& points, const std::vector<ClassId>& labels) {
  require(!started_, ErrorCode::InvalidArgument,
          "seeding is only allowed before the stream starts");
  require(points.rows() == static_cast<Eigen::Index>(labels.size()),
          ErrorCode::InvalidArgument, "one label per seed point required");
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    require(labels[static_cast<std::size_t>(i)] != kNoLabel, ErrorCode::UnknownLabel,
            "seed examples must be labeled");
    step(points.row(i).transpose(), labels[static_cast<std::size_t>(i)]);
  }
  started_ = false;
}

StepRecord Learner::step(const Vector& x, ClassId label) {
  auto t0 = std::chrono::steady_clock::now();
  require(label == kNoLabel || (label >= 0 && label < config_.class_count),
          ErrorCode::UnknownLabel, "class label out of range");
  require(x.allFinite(), ErrorCode::NonFiniteInput, "observation has non-finite coordinates");
  if (set_.dimension() >= 0 && static_cast<int>(x.size()) != set_.dimension()) {
    std::ostringstream msg;
    msg << "observation has dimension " << x.size() << ", stream has " << set_.dimension();
    fail(ErrorCode::DimensionMismatch, msg.str());
  }
  started_ = true;

  StepRecord rec;
  rec.step = steps_emitted_;

  // Disconnected unlabeled examples are neither predicted nor ingested;
  // labeled examples always enter the model.
  if (config_.outlier_rejection && label == kNoLabel && set_.size() > 0 && is_outlier_(x)) {
    rec.outlier = true;
    rec.centroid_count = set_.size();
    rec.radius_defined = set_.radius().has_value();
    rec.radius = set_.radius().value_or(0.0);
    ++outliers_rejected_;
    ++steps_emitted_;
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  }

  AssignmentOutcome out = set_.observe(x);
  if (label != kNoLabel) set_.record_label(out.assigned_centroid, label);

  QuantizedGraph graph = build_graph(set_, kernel_);
  LabelAssignment assignment = LabelAssignment::from_centroids(set_, config_.class_count);
  SolveResult solve = config_.mode == SolveMode::Hard
                          ? solve_hard(graph, assignment, config_.gamma_g)
                          : solve_soft(graph, assignment, config_.soft_config());

  Prediction pred = predict(solve, out.assigned_centroid);
  rec.prediction = pred.label;
  rec.margin = pred.margin;
  rec.class0_score = solve.scores(out.assigned_centroid, 0);
  rec.centroid_count = set_.size();
  rec.radius_defined = set_.radius().has_value();
  rec.radius = set_.radius().value_or(0.0);
  rec.repartition_passes = out.repartition_passes;
  rec.solve_residual = solve.residual;
  rec.solve_fallback = solve.used_fallback;
  rec.assigned_centroid = out.assigned_centroid;
  rec.is_new_centroid = out.is_new_centroid;
  last_solve_ = std::move(solve);

  ++steps_emitted_;
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::vector<std::uint8_t> Learner::checkpoint() const {
  require(!kernel_.distance, ErrorCode::UnsupportedMode,
          "checkpoints do not support custom distance hooks");
  detail::ByteWriter w;
  w.u32(kCheckpointMagic);
  w.u32(kCheckpointVersion);

  w.i32(config_.capacity);
  w.f64(config_.multiplier);
  w.f64(config_.gamma_g);
  w.f64(config_.sigma);
  w.i32(config_.feature_scaling);
  w.u8(config_.epsilon.has_value() ? 1 : 0);
  w.f64(config_.epsilon.value_or(0.0));
  w.u8(config_.mode == SolveMode::Hard ? 0 : 1);
  w.f64(config_.cost_labeled);
  w.f64(config_.cost_unlabeled);
  w.u8(config_.outlier_rejection ? 1 : 0);
  w.i32(config_.class_count);
  w.u8(config_.track_lineage ? 1 : 0);

  CentroidSetState s = set_.state();
  w.i64(s.accepted_points);
  w.i64(s.labeled_points);
  w.i64(s.next_uid);
  w.u8(s.radius.has_value() ? 1 : 0);
  w.f64(s.radius.value_or(0.0));
  w.i32(static_cast<std::int32_t>(s.centroids.size()));
  for (const auto& c : s.centroids) {
    w.i64(c.insertion_index);
    w.i64(c.multiplicity);
    w.vector(c.location);
    w.i32(static_cast<std::int32_t>(c.label_tally.size()));
    for (const auto& [cls, tally] : c.label_tally) {  // std::map: sorted, stable
      w.i32(cls);
      w.i64(tally.count);
      w.i64(tally.last_seen);
    }
  }
  if (config_.track_lineage) {
    w.i64(static_cast<std::int64_t>(s.chain.point_assignments.size()));
    for (std::int64_t uid : s.chain.point_assignments) w.i64(uid);
    std::vector<std::pair<std::int64_t, std::int64_t>> merges(s.chain.merged_into.begin(),
                                                              s.chain.merged_into.end());
    std::sort(merges.begin(), merges.end());
    w.i64(static_cast<std::int64_t>(merges.size()));
    for (const auto& [from, into] : merges) {
      w.i64(from);
      w.i64(into);
    }
  }
  return w.take();
}

Learner Learner::restore(const std::uint8_t* data, std::size_t size) {
  detail::ByteReader r(data, size);
  require(r.u32() == kCheckpointMagic, ErrorCode::BadCheckpoint,
          "not a learner checkpoint");
  std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    std::ostringstream msg;
    msg << "checkpoint version " << version << " unsupported (expected " << kCheckpointVersion
        << ")";
    fail(ErrorCode::BadCheckpoint, msg.str());
  }

  LearnerConfig config;
  config.capacity = r.i32();
  config.multiplier = r.f64();
  config.gamma_g = r.f64();
  config.sigma = r.f64();
  config.feature_scaling = r.i32();
  bool has_eps = r.u8() != 0;
  double eps = r.f64();
  if (has_eps) config.epsilon = eps;
  config.mode = r.u8() == 0 ? SolveMode::Hard : SolveMode::Soft;
  config.cost_labeled = r.f64();
  config.cost_unlabeled = r.f64();
  config.outlier_rejection = r.u8() != 0;
  config.class_count = r.i32();
  config.track_lineage = r.u8() != 0;

  CentroidSetState s;
  s.capacity = config.capacity;
  s.multiplier = config.multiplier;
  s.track_lineage = config.track_lineage;
  s.accepted_points = r.i64();
  s.labeled_points = r.i64();
  s.next_uid = r.i64();
  bool has_radius = r.u8() != 0;
  double radius = r.f64();
  if (has_radius) s.radius = radius;
  std::int32_t count = r.i32();
  require(count >= 0, ErrorCode::BadCheckpoint, "corrupt checkpoint: bad centroid count");
  s.centroids.resize(static_cast<std::size_t>(count));
  for (auto& c : s.centroids) {
    c.insertion_index = r.i64();
    c.multiplicity = r.i64();
    c.location = r.vector();
    std::int32_t tallies = r.i32();
    require(tallies >= 0, ErrorCode::BadCheckpoint, "corrupt checkpoint: bad tally count");
    for (std::int32_t i = 0; i < tallies; ++i) {
      ClassId cls = r.i32();
      LabelTally t;
      t.count = r.i64();
      t.last_seen = r.i64();
      c.label_tally.emplace(cls, t);
    }
  }
  if (config.track_lineage) {
    std::int64_t points = r.i64();
    require(points >= 0, ErrorCode::BadCheckpoint, "corrupt checkpoint: bad lineage length");
    s.chain.point_assignments.resize(static_cast<std::size_t>(points));
    for (auto& uid : s.chain.point_assignments) uid = r.i64();
    std::int64_t merges = r.i64();
    require(merges >= 0, ErrorCode::BadCheckpoint, "corrupt checkpoint: bad merge count");
    for (std::int64_t i = 0; i < merges; ++i) {
      std::int64_t from = r.i64();
      std::int64_t into = r.i64();
      s.chain.merged_into.emplace(from, into);
    }
  }
  require(r.done(), ErrorCode::BadCheckpoint, "corrupt checkpoint: trailing bytes");

  Learner learner(std::move(config), std::move(s));
  learner.started_ = learner.set_.accepted_points() > 0;
  return learner;
}

Learner Learner::restore(const std::vector<std::uint8_t>& blob) {
  return restore(blob.data(), blob.size());
}

}  // namespace qhs
