#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "core/learner.hpp"
#include "support/test_support.hpp"

#include <cmath>
#include <string>

using namespace qhs;
using qhs::testing::Rng;

namespace {

LearnerConfig small_config() {
  LearnerConfig config;
  config.capacity = 8;
  config.multiplier = 1.5;
  config.gamma_g = 0.1;
  config.sigma = 1.0;
  config.mode = SolveMode::Hard;
  config.class_count = 2;
  return config;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

bool same_record(const StepRecord& a, const StepRecord& b) {
  return a.prediction == b.prediction && a.margin == b.margin &&
         a.class0_score == b.class0_score && a.outlier == b.outlier &&
         a.centroid_count == b.centroid_count && a.radius == b.radius &&
         a.radius_defined == b.radius_defined &&
         a.repartition_passes == b.repartition_passes &&
         a.assigned_centroid == b.assigned_centroid && a.is_new_centroid == b.is_new_centroid;
}

}  // namespace

TEST_CASE("first labeled example predicts its own class") {
  Learner learner(small_config());
  StepRecord rec = learner.step(vec2(0, 0), 1);
  CHECK(rec.prediction == 1);
  CHECK(rec.is_new_centroid);
  CHECK(rec.centroid_count == 1);
  CHECK(learner.labels_seen() == 1);
}

TEST_CASE("unlabeled stream abstains until the first label arrives") {
  Learner learner(small_config());
  StepRecord rec = learner.step(vec2(0, 0));
  CHECK(rec.prediction == kAbstain);
  CHECK_FALSE(rec.outlier);  // ingested, merely unpredictable
  CHECK(learner.accepted_points() == 1);
  rec = learner.step(vec2(0.1, 0.1), 0);
  CHECK(rec.prediction == 0);
}

TEST_CASE("outliers are rejected without touching state") {
  LearnerConfig config = small_config();
  config.gamma_g = 1.0;  // default epsilon = 0.1
  Learner learner(config);
  learner.step(vec2(0, 0), 0);
  learner.step(vec2(0.2, 0.1));

  auto before = learner.checkpoint();
  StepRecord rec = learner.step(vec2(50, 50));  // weight ~ exp(-2500)
  CHECK(rec.outlier);
  CHECK(rec.prediction == kAbstain);
  auto after = learner.checkpoint();
  CHECK(before == after);
  CHECK(learner.outliers_rejected() == 1);

  SUBCASE("a labeled outlier is always ingested") {
    StepRecord labeled = learner.step(vec2(50, 50), 1);
    CHECK_FALSE(labeled.outlier);
    CHECK(learner.accepted_points() == 3);
    CHECK(learner.checkpoint() != after);
  }
  SUBCASE("epsilon zero disables rejection") {
    LearnerConfig open = small_config();
    open.gamma_g = 0.0;
    Learner free_learner(open);
    free_learner.step(vec2(0, 0), 0);
    StepRecord far = free_learner.step(vec2(3, 4));  // weight exp(-12.5), tiny but nonzero
    CHECK_FALSE(far.outlier);
    CHECK(far.prediction == 0);
  }
}

TEST_CASE("two well-separated clusters are classified like the full-graph solution") {
  LearnerConfig config = small_config();  // k=8, gamma 0.1, hard
  Learner learner(config);

  Rng rng(424242);
  testing::BlobData data = testing::two_blobs(rng, 60, 2, 4.0, 0.35);
  Matrix seeds(2, 2);
  seeds << 0, 0, 4, 4;
  learner.seed(seeds, {0, 1});

  KernelSpec kernel = config.kernel_spec();
  // Brute-force oracle graph over everything seen so far (seeds + stream).
  int total = 62;
  Matrix all_points(total, 2);
  all_points.row(0) = seeds.row(0);
  all_points.row(1) = seeds.row(1);
  std::vector<ClassId> all_labels{0, 1};

  for (int t = 0; t < 60; ++t) {
    Vector x = data.points.row(t).transpose();
    StepRecord rec = learner.step(x);
    CHECK(rec.prediction == data.labels[static_cast<std::size_t>(t)]);

    all_points.row(2 + t) = x.transpose();
    all_labels.push_back(kNoLabel);
    int m = 3 + t;
    Matrix weights = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        double w = kernel_weight(all_points.row(i).transpose(), all_points.row(j).transpose(),
                                 kernel);
        weights(i, j) = w;
        weights(j, i) = w;
      }
    Matrix oracle = testing::hard_solve_full(
        weights, std::vector<std::int32_t>(all_labels.begin(), all_labels.end()), 2,
        config.gamma_g);
    ClassId oracle_prediction = oracle(m - 1, 0) >= oracle(m - 1, 1) ? 0 : 1;
    CHECK(rec.prediction == oracle_prediction);
  }
}

TEST_CASE("seed handles the warm-up protocol") {
  Learner learner(small_config());
  SUBCASE("empty seed is a no-op") {
    learner.seed(Matrix(0, 2), {});
    CHECK(learner.accepted_points() == 0);
  }
  SUBCASE("four labeled faces per identity") {
    Matrix pts(4, 2);
    pts << 0, 0, 0.1, 0, 0, 0.1, 0.1, 0.1;
    learner.seed(pts, {0, 0, 0, 0});
    CHECK(learner.labels_seen() == 4);
    CHECK(learner.accepted_points() == 4);
  }
  SUBCASE("seeding after the stream starts is rejected") {
    learner.step(vec2(0, 0));
    Matrix pts(1, 2);
    pts << 1, 1;
    CHECK_THROWS_AS(learner.seed(pts, {0}), Error);
  }
  SUBCASE("seeds must carry labels") {
    Matrix pts(1, 2);
    pts << 1, 1;
    CHECK_THROWS_AS(learner.seed(pts, {kNoLabel}), Error);
  }
}

TEST_CASE("input validation") {
  Learner learner(small_config());
  learner.step(vec2(0, 0), 0);
  Vector wrong(3);
  wrong << 1, 2, 3;
  CHECK_THROWS_AS(learner.step(wrong), Error);
  CHECK_THROWS_AS(learner.step(vec2(std::nan(""), 0)), Error);
  CHECK_THROWS_AS(learner.step(vec2(1, 1), 7), Error);
  CHECK(learner.accepted_points() == 1);
}

TEST_CASE("checkpoints round trip byte for byte") {
  SUBCASE("empty learner") {
    Learner learner(small_config());
    auto blob = learner.checkpoint();
    Learner restored = Learner::restore(blob);
    CHECK(restored.checkpoint() == blob);
    CHECK(restored.accepted_points() == 0);
  }
  SUBCASE("after a random stream, with lineage") {
    LearnerConfig config = small_config();
    config.mode = SolveMode::Soft;
    config.gamma_g = 0.5;
    config.track_lineage = true;
    Learner learner(config);
    Rng rng(99);
    Matrix pts = testing::random_points(rng, 80, 3);
    for (int t = 0; t < 80; ++t)
      learner.step(pts.row(t).transpose(), t % 7 == 0 ? t % 2 : kNoLabel);
    auto blob = learner.checkpoint();
    Learner restored = Learner::restore(blob);
    CHECK(restored.checkpoint() == blob);
    CHECK(restored.labels_seen() == learner.labels_seen());
  }
  SUBCASE("version mismatch is rejected with the embedded tag") {
    Learner learner(small_config());
    auto blob = learner.checkpoint();
    blob[4] = 9;  // bump the version field
    try {
      Learner::restore(blob);
      FAIL("expected a checkpoint error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadCheckpoint);
      CHECK(std::string(e.what()).find("version 9") != std::string::npos);
    }
  }
  SUBCASE("garbage is rejected") {
    std::vector<std::uint8_t> junk{1, 2, 3};
    CHECK_THROWS_AS(Learner::restore(junk), Error);
  }
}

TEST_CASE("mid-run snapshot reproduces the unbroken run") {
  LearnerConfig config = small_config();
  config.capacity = 12;
  config.mode = SolveMode::Soft;
  config.gamma_g = 1.0;
  Rng rng(31337);
  testing::BlobData data = testing::two_blobs(rng, 200, 2, 3.0, 0.6);

  Learner unbroken(config);
  std::vector<StepRecord> first_half, second_half;
  std::vector<std::uint8_t> snapshot;
  for (int t = 0; t < 200; ++t) {
    ClassId label = t < 6 ? data.labels[static_cast<std::size_t>(t)] : kNoLabel;
    StepRecord rec = unbroken.step(data.points.row(t).transpose(), label);
    if (t < 100)
      first_half.push_back(rec);
    else
      second_half.push_back(rec);
    if (t == 99) snapshot = unbroken.checkpoint();
  }

  Learner resumed = Learner::restore(snapshot);
  for (int t = 100; t < 200; ++t) {
    StepRecord rec = resumed.step(data.points.row(t).transpose(), kNoLabel);
    CHECK(same_record(rec, second_half[static_cast<std::size_t>(t - 100)]));
  }
  CHECK(resumed.checkpoint() == unbroken.checkpoint());
}

TEST_CASE("identical streams produce identical records") {
  LearnerConfig config = small_config();
  config.mode = SolveMode::Soft;
  config.gamma_g = 0.5;
  Rng rng(8);
  Matrix pts = testing::random_points(rng, 120, 2);
  Learner a(config), b(config);
  for (int t = 0; t < 120; ++t) {
    ClassId label = t % 11 == 0 ? t % 2 : kNoLabel;
    StepRecord ra = a.step(pts.row(t).transpose(), label);
    StepRecord rb = b.step(pts.row(t).transpose(), label);
    CHECK(same_record(ra, rb));
  }
}

TEST_CASE("conflicting labels inside one centroid are counted") {
  LearnerConfig config = small_config();
  config.capacity = 4;
  Learner learner(config);
  learner.step(vec2(0, 0), 0);
  CHECK(learner.conflicted_centroids() == 0);
  learner.step(vec2(0, 0), 1);  // exact duplicate merges into the same centroid
  CHECK(learner.conflicted_centroids() == 1);
}
