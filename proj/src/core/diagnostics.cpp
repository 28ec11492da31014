#include "core/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qhs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Raw point graphs are quantized graphs with unit multiplicities.
QuantizedGraph raw_graph(Matrix weights) {
  QuantizedGraph g;
  g.multiplicities = Vector::Ones(weights.rows());
  g.degrees = weights.rowwise().sum() - weights.diagonal();
  g.base_weights = std::move(weights);
  g.scaled_weights = g.base_weights;
  return g;
}

LabelAssignment assignment_from(const std::vector<ClassId>& labels, int class_count) {
  LabelAssignment a;
  a.class_count = class_count;
  a.centroid_class = labels;
  a.validate();
  return a;
}

// Binary sign rule shared by every family: class 0 wins at and above zero,
// matching the argmax tie convention.
ClassId sign_prediction(double score) { return score >= 0.0 ? 0 : 1; }

struct AccuracyTracker {
  std::int64_t evaluated = 0;
  std::int64_t correct = 0;

  void add(ClassId predicted, ClassId truth) {
    if (truth == kNoLabel) return;
    ++evaluated;
    if (predicted == truth) ++correct;
  }
  double value() const {
    return evaluated == 0 ? kNaN : static_cast<double>(correct) / static_cast<double>(evaluated);
  }
};

SolveResult family_solve(const QuantizedGraph& graph, const LabelAssignment& labels,
                         const LearnerConfig& config) {
  return config.mode == SolveMode::Hard ? solve_hard(graph, labels, config.gamma_g)
                                        : solve_soft(graph, labels, config.soft_config());
}

double slack_tolerance(double rhs) { return std::abs(rhs) * 1e-9 + 1e-12; }

void record_check(BoundCheck& check, double lhs, double rhs) {
  ++check.checked;
  check.max_lhs = std::max(check.max_lhs, lhs);
  check.max_rhs = std::max(check.max_rhs, rhs);
  check.min_slack = std::min(check.min_slack, rhs - lhs);
  if (lhs > rhs + slack_tolerance(rhs)) ++check.violations;
}

}  // namespace

double largest_eigenvalue(const Matrix& sym) {
  require(sym.rows() == sym.cols(), ErrorCode::DimensionMismatch, "matrix must be square");
  const int n = static_cast<int>(sym.rows());
  if (n == 0) return 0.0;
  // Deterministic non-degenerate start vector.
  Vector v(n);
  std::uint64_t s = 0x2545f4914f6cdd1dULL;
  for (int i = 0; i < n; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v[i] = 0.5 + static_cast<double>(s % 1000) / 1000.0;
  }
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vector w = sym * v;
    double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    double next = w.dot(sym * w);
    bool settled = std::abs(next - lambda) <= 1e-12 * std::max(1.0, std::abs(next));
    lambda = next;
    v = std::move(w);
    if (settled && it > 10) break;
  }
  return lambda;
}

double normalized_gap(const Matrix& weights_a, const Matrix& weights_b) {
  require(weights_a.rows() == weights_b.rows() && weights_a.cols() == weights_b.cols(),
          ErrorCode::DimensionMismatch, "gap requires equal shapes");
  const int n = static_cast<int>(weights_a.rows());
  std::vector<int> kept(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) kept[static_cast<std::size_t>(i)] = i;

  // Drop vertices isolated in either matrix; restriction can isolate more,
  // so iterate to a fixed point.
  Matrix a = weights_a, b = weights_b;
  for (;;) {
    std::vector<int> still;
    for (int i = 0; i < static_cast<int>(kept.size()); ++i) {
      double da = a.row(i).sum() - a(i, i);
      double db = b.row(i).sum() - b(i, i);
      if (da > 0.0 && db > 0.0) still.push_back(i);
    }
    if (still.size() == kept.size()) break;
    Matrix a2(still.size(), still.size()), b2(still.size(), still.size());
    for (std::size_t r = 0; r < still.size(); ++r)
      for (std::size_t c = 0; c < still.size(); ++c) {
        a2(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            a(still[r], still[c]);
        b2(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            b(still[r], still[c]);
      }
    std::vector<int> kept2(still.size());
    for (std::size_t r = 0; r < still.size(); ++r) kept2[r] = kept[static_cast<std::size_t>(still[r])];
    kept = std::move(kept2);
    a = std::move(a2);
    b = std::move(b2);
    if (kept.empty()) return 0.0;
  }
  if (kept.empty()) return 0.0;
  return frobenius_gap(normalized_laplacian(a), normalized_laplacian(b));
}

ReplayTrace replay(const Matrix& points, const std::vector<ClassId>& train_labels,
                   const std::vector<ClassId>& eval_labels, const LearnerConfig& config,
                   const ReplayOptions& options) {
  const int n = static_cast<int>(points.rows());
  require(n >= 1, ErrorCode::InvalidArgument, "replay needs at least one point");
  require(n <= options.max_points, ErrorCode::LimitExceeded,
          "stream exceeds the replay memory guard");
  require(static_cast<int>(train_labels.size()) == n &&
              static_cast<int>(eval_labels.size()) == n,
          ErrorCode::InvalidArgument, "one train and eval label slot per point required");
  require(config.class_count == 2, ErrorCode::UnsupportedMode,
          "replay diagnostics cover binary tasks only");
  config.validate();

  ReplayTrace trace;
  trace.config = config;
  trace.config.track_lineage = true;  // the expanded quantized matrix needs lineage
  trace.options = options;
  trace.points = points;
  trace.train_labels = train_labels;
  trace.eval_labels = eval_labels;
  trace.steps.resize(static_cast<std::size_t>(n));

  const KernelSpec kernel = config.kernel_spec();

  // Full-graph weights; the observed graph at time t is its leading block.
  Matrix full_weights = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double w = kernel_weight(points.row(i).transpose(), points.row(j).transpose(), kernel);
      full_weights(i, j) = w;
      full_weights(j, i) = w;
    }

  for (ClassId c : train_labels)
    if (c != kNoLabel) ++trace.n_l;

  // Offline family: one solve on the complete graph with every train label.
  SolveResult offline =
      family_solve(raw_graph(full_weights), assignment_from(train_labels, 2), config);
  trace.offline_norm = offline.scores.col(0).norm();
  if (trace.n_l > 0) {
    double risk = 0.0;
    for (int i = 0; i < n; ++i) {
      if (train_labels[static_cast<std::size_t>(i)] == kNoLabel) continue;
      double y = train_labels[static_cast<std::size_t>(i)] == 0 ? 1.0 : -1.0;
      double d = offline.scores(i, 0) - y;
      risk += d * d;
    }
    trace.offline_empirical_risk = risk / static_cast<double>(trace.n_l);
  }
  if (options.compute_prop3)
    trace.lambda_max_laplacian = largest_eigenvalue(laplacian_of(full_weights));

  Learner learner(trace.config);
  AccuracyTracker acc_quantized, acc_online, acc_offline;
  std::int64_t labels_seen = 0;
  // Stream position of every accepted point, for the lineage lookup.
  std::vector<int> accepted_stream_pos;

  for (int t = 0; t < n; ++t) {
    StepDiagnostics& step = trace.steps[static_cast<std::size_t>(t)];
    step.t = t;
    step.truth = eval_labels[static_cast<std::size_t>(t)];

    ClassId train = train_labels[static_cast<std::size_t>(t)];
    if (train != kNoLabel) ++labels_seen;
    step.labels_so_far = labels_seen;

    StepRecord rec = learner.step(points.row(t).transpose(), train);
    trace.engine_records.push_back(rec);
    if (!rec.outlier) accepted_stream_pos.push_back(t);
    step.outlier = rec.outlier;
    step.quantized_prediction = rec.prediction;
    step.quantized_score = rec.outlier ? 0.0 : rec.class0_score;
    acc_quantized.add(rec.prediction, step.truth);

    step.offline_score = offline.scores(t, 0);
    acc_offline.add(sign_prediction(step.offline_score), step.truth);
    step.acc_offline = acc_offline.value();

    const int m = t + 1;
    std::vector<ClassId> seen_labels(train_labels.begin(), train_labels.begin() + m);

    Vector online_column;
    if (options.compute_online) {
      SolveResult online = family_solve(raw_graph(full_weights.topLeftCorner(m, m)),
                                        assignment_from(seen_labels, 2), config);
      online_column = online.scores.col(0);
      step.online_score = online_column[t];
      step.online_norm = online_column.norm();
      acc_online.add(sign_prediction(step.online_score), step.truth);
      step.acc_online = acc_online.value();
    }

    bool want_gap = options.gap_stride > 0 ? (t % options.gap_stride == 0 || t == n - 1)
                                           : t == n - 1;
    if (options.compute_theory || want_gap) {
      // Expanded quantized weights: every accepted point sits at its current
      // centroid; rejected outliers keep their raw location.
      const auto& chain = learner.centroids().chain();
      std::unordered_map<std::int64_t, int> position_of;
      for (int i = 0; i < learner.centroids().size(); ++i)
        position_of.emplace(
            learner.centroids().centroids()[static_cast<std::size_t>(i)].insertion_index, i);
      Matrix reps = points.topRows(m);
      for (std::size_t a = 0; a < accepted_stream_pos.size(); ++a) {
        std::int64_t uid = chain.point_assignments[a];
        int pos = position_of.at(chain.resolve(uid));
        reps.row(accepted_stream_pos[a]) =
            learner.centroids().centroids()[static_cast<std::size_t>(pos)].location.transpose();
      }

      Matrix quant_weights = Matrix::Zero(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
          double w = kernel_weight(reps.row(i).transpose(), reps.row(j).transpose(), kernel);
          quant_weights(i, j) = w;
          quant_weights(j, i) = w;
        }

      Matrix observed = full_weights.topLeftCorner(m, m);
      step.gap_unnormalized =
          frobenius_gap(laplacian_of(quant_weights), laplacian_of(observed));
      if (want_gap) step.gap_normalized = normalized_gap(quant_weights, observed);

      if (options.compute_theory) {
        SolveResult theory =
            family_solve(raw_graph(quant_weights), assignment_from(seen_labels, 2), config);
        step.theory_quantized_score = theory.scores(t, 0);
        step.theory_norm = theory.scores.col(0).norm();
        if (online_column.size() == m && config.mode == SolveMode::Soft &&
            config.gamma_g > 0.0) {
          // Perturbation bound on the two t-dimensional solutions.
          step.lemma2_lhs = (theory.scores.col(0) - online_column).norm();
          step.lemma2_rhs = lemma2_bound(labels_seen, config.cost_unlabeled, config.gamma_g,
                                         step.gap_unnormalized);
        }
      }
    }

    step.acc_quantized = acc_quantized.value();
  }

  trace.final_gap_normalized = trace.steps.back().gap_normalized;
  trace.final_gap_unnormalized = trace.steps.back().gap_unnormalized;
  trace.conflicts = learner.conflicted_centroids();
  return trace;
}

ErrorDecomposition decompose_error(const ReplayTrace& trace) {
  ErrorDecomposition out;
  std::int64_t counted = 0;
  for (const auto& step : trace.steps) {
    if (step.truth == kNoLabel) continue;
    require(std::isfinite(step.online_score) && std::isfinite(step.offline_score),
            ErrorCode::UnsupportedMode,
            "error decomposition needs the online family; rerun with compute_online");
    double y = step.truth == 0 ? 1.0 : -1.0;
    double q = step.quantized_score;
    double o = step.offline_score;
    double w = step.online_score;
    for (double v : {q, o, w})
      require(std::abs(v) <= 1.0 + 1e-9, ErrorCode::InvalidArgument,
              "error decomposition requires values in [-1, 1]");
    out.lhs += (q - y) * (q - y);
    out.offline_term += (o - y) * (o - y);
    out.online_term += (w - o) * (w - o);
    out.quantization_term += (q - w) * (q - w);
    ++counted;
  }
  require(counted > 0, ErrorCode::InvalidArgument,
          "error decomposition needs at least one step with a true label");
  double scale = 1.0 / static_cast<double>(counted);
  out.lhs *= scale;
  double factor = 4.5 * scale;
  out.offline_term *= factor;
  out.online_term *= factor;
  out.quantization_term *= factor;
  out.holds = out.lhs <= out.rhs() + slack_tolerance(out.rhs());
  return out;
}

BoundReport audit_bounds(const ReplayTrace& trace) {
  require(trace.config.mode == SolveMode::Soft, ErrorCode::UnsupportedMode,
          "bound audits use the soft-constrained form");
  require(trace.options.compute_online && trace.options.compute_theory,
          ErrorCode::UnsupportedMode,
          "bound audits need the online and theory families; rerun with both enabled");

  const double gamma = trace.config.gamma_g;
  const double c_u = trace.config.cost_unlabeled;
  const std::int64_t n_l = trace.n_l;

  BoundReport report;
  BoundCheck lemma1_offline{.name = "lemma1_offline"};
  BoundCheck lemma1_online{.name = "lemma1_online"};
  BoundCheck lemma1_quantized{.name = "lemma1_quantized"};
  BoundCheck lemma2{.name = "lemma2"};
  BoundCheck prop2{.name = "prop2"};
  BoundCheck prop4_step{.name = "prop4_step"};
  BoundCheck prop4_cumulative{.name = "prop4_cumulative"};
  BoundCheck prop5_step{.name = "prop5_step"};
  BoundCheck prop5_cumulative{.name = "prop5_cumulative"};

  record_check(lemma1_offline, trace.offline_norm, lemma1_bound(n_l, gamma));

  double prop4_sum = 0.0;
  double prop5_sum = 0.0;
  double max_gap = 0.0;
  for (const auto& step : trace.steps) {
    record_check(lemma1_online, step.online_norm, lemma1_bound(step.labels_so_far, gamma));
    record_check(lemma1_quantized, step.theory_norm, lemma1_bound(step.labels_so_far, gamma));

    double d_online = step.online_score - step.offline_score;
    double prop4_rhs = 4.0 * static_cast<double>(n_l) / ((gamma + 1.0) * (gamma + 1.0));
    record_check(prop4_step, d_online * d_online, prop4_rhs);
    prop4_sum += d_online * d_online;

    if (gamma > 0.0) {
      record_check(lemma2, step.lemma2_lhs, step.lemma2_rhs);
      double d_quant = step.theory_quantized_score - step.online_score;
      double gap2 = step.gap_unnormalized * step.gap_unnormalized;
      double prop5_rhs = static_cast<double>(step.labels_so_far) * gap2 /
                         (c_u * c_u * gamma * gamma * gamma * gamma);
      record_check(prop5_step, d_quant * d_quant, prop5_rhs);
      prop5_sum += d_quant * d_quant;
      max_gap = std::max(max_gap, step.gap_unnormalized);
    }
  }

  const double n = static_cast<double>(trace.steps.size());
  record_check(prop4_cumulative, prop4_sum / n,
               4.0 * static_cast<double>(n_l) / ((gamma + 1.0) * (gamma + 1.0)));
  if (gamma > 0.0)
    record_check(prop5_cumulative, prop5_sum / n,
                 static_cast<double>(n_l) * max_gap * max_gap /
                     (c_u * c_u * gamma * gamma * gamma * gamma));

  bool have_truth = false;
  for (const auto& step : trace.steps)
    if (step.truth != kNoLabel) have_truth = true;
  if (have_truth) {
    ErrorDecomposition decomposition = decompose_error(trace);
    record_check(prop2, decomposition.lhs, decomposition.rhs());
  }

  if (std::isfinite(trace.lambda_max_laplacian) && n_l >= 1)
    report.prop3 = prop3_quantities(n_l, gamma, c_u, trace.options.prop3_delta,
                                    trace.lambda_max_laplacian, trace.offline_empirical_risk);

  report.checks = {lemma1_offline, lemma1_online, lemma1_quantized, lemma2,
                   prop2,          prop4_step,    prop4_cumulative, prop5_step,
                   prop5_cumulative};
  for (const auto& check : report.checks)
    if (check.violations > 0) report.all_hold = false;
  return report;
}

std::vector<GapCurvePoint> gap_curve(const Matrix& points,
                                     const std::vector<ClassId>& train_labels,
                                     const std::vector<ClassId>& eval_labels,
                                     LearnerConfig config, const std::vector<int>& ks) {
  require(!ks.empty(), ErrorCode::InvalidArgument, "gap_curve needs at least one capacity");
  ReplayOptions options;
  options.compute_online = false;
  options.compute_theory = false;
  options.gap_stride = 0;
  std::vector<GapCurvePoint> curve;
  curve.reserve(ks.size());
  for (int k : ks) {
    config.capacity = k;
    ReplayTrace trace = replay(points, train_labels, eval_labels, config, options);
    GapCurvePoint point;
    point.k = k;
    point.gap_normalized = trace.final_gap_normalized;
    point.accuracy_quantized = trace.steps.back().acc_quantized;
    point.accuracy_offline = trace.steps.back().acc_offline;
    curve.push_back(point);
  }
  return curve;
}

}  // namespace qhs
