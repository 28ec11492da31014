#include "core/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace qhs {

namespace {

constexpr double kResidualLimit = 1e-8;
constexpr double kScoreSlack = 1e-8;

// Residual-checked SPD solve with a least-squares fallback.
Matrix checked_solve(const Matrix& a, const Matrix& rhs, double* residual, bool* used_fallback) {
  Eigen::LDLT<Matrix> ldlt(a);
  Matrix x;
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    x = ldlt.solve(rhs);
    ok = x.allFinite();
  }
  double res = ok ? (a * x - rhs).cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
  if (!ok || res > kResidualLimit) {
    x = a.completeOrthogonalDecomposition().solve(rhs);
    res = (a * x - rhs).cwiseAbs().maxCoeff();
    *used_fallback = true;
  }
  *residual = res;
  return x;
}

// Scores are targets or shrunk averages of targets; anything beyond [-1, 1]
// past roundoff means the solve went wrong.
void enforce_score_range(Matrix& scores) {
  double worst = scores.size() == 0 ? 0.0 : scores.cwiseAbs().maxCoeff();
  require(worst <= 1.0 + kScoreSlack, ErrorCode::Internal,
          "solution violates the maximum principle");
  scores = scores.cwiseMax(-1.0).cwiseMin(1.0);
}

// Connected components of the unlabeled subgraph that never touch a labeled
// centroid; nonempty result means L_uu is singular at gamma_g = 0.
std::vector<std::vector<int>> floating_components(const QuantizedGraph& g,
                                                  const std::vector<char>& is_labeled) {
  const int k = g.size();
  std::vector<int> state(static_cast<std::size_t>(k), 0);  // 0 unseen, 1 visited
  std::vector<std::vector<int>> floating;
  for (int s = 0; s < k; ++s) {
    if (is_labeled[static_cast<std::size_t>(s)] || state[static_cast<std::size_t>(s)]) continue;
    std::vector<int> component;
    bool grounded = false;
    std::deque<int> queue{s};
    state[static_cast<std::size_t>(s)] = 1;
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      component.push_back(v);
      for (int w = 0; w < k; ++w) {
        if (w == v || g.scaled_weights(v, w) <= 0.0) continue;
        if (is_labeled[static_cast<std::size_t>(w)]) {
          grounded = true;
        } else if (!state[static_cast<std::size_t>(w)]) {
          state[static_cast<std::size_t>(w)] = 1;
          queue.push_back(w);
        }
      }
    }
    if (!grounded) floating.push_back(std::move(component));
  }
  return floating;
}

}  // namespace

LabelAssignment LabelAssignment::from_centroids(const CentroidSet& set, int class_count) {
  LabelAssignment out;
  out.class_count = class_count;
  out.centroid_class.reserve(static_cast<std::size_t>(set.size()));
  for (const auto& c : set.centroids())
    out.centroid_class.push_back(c.is_labeled() ? c.majority_class() : kNoLabel);
  out.validate();
  return out;
}

void LabelAssignment::validate() const {
  require(class_count >= 2, ErrorCode::InvalidArgument, "class_count must be >= 2");
  for (ClassId c : centroid_class)
    require(c == kNoLabel || (c >= 0 && c < class_count), ErrorCode::UnknownLabel,
            "centroid class out of range");
}

Matrix LabelAssignment::pseudo_targets() const {
  Matrix y = Matrix::Zero(size(), class_count);
  for (int i = 0; i < size(); ++i) {
    ClassId cls = centroid_class[static_cast<std::size_t>(i)];
    if (cls == kNoLabel) continue;
    y.row(i).setConstant(-1.0);
    y(i, cls) = 1.0;
  }
  return y;
}

std::vector<int> LabelAssignment::labeled_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < size(); ++i)
    if (centroid_class[static_cast<std::size_t>(i)] != kNoLabel) idx.push_back(i);
  return idx;
}

std::vector<int> LabelAssignment::unlabeled_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < size(); ++i)
    if (centroid_class[static_cast<std::size_t>(i)] == kNoLabel) idx.push_back(i);
  return idx;
}

void SoftConfig::validate() const {
  require(std::isfinite(cost_labeled) && std::isfinite(cost_unlabeled) && std::isfinite(gamma_g),
          ErrorCode::NonFiniteInput, "soft config must be finite");
  require(cost_unlabeled > 0.0 && cost_labeled >= cost_unlabeled, ErrorCode::InvalidArgument,
          "soft config requires c_l >= c_u > 0");
  require(gamma_g >= 0.0, ErrorCode::InvalidArgument, "gamma_g must be nonnegative");
}

SolveResult solve_hard(const QuantizedGraph& graph, const LabelAssignment& labels,
                       double gamma_g) {
  labels.validate();
  require(labels.size() == graph.size(), ErrorCode::DimensionMismatch,
          "one label entry per centroid required");
  require(gamma_g >= 0.0 && std::isfinite(gamma_g), ErrorCode::InvalidArgument,
          "gamma_g must be nonnegative and finite");

  SolveResult result;
  result.mode = SolveMode::Hard;
  result.gamma_g = gamma_g;
  result.labeled_indices = labels.labeled_indices();

  const int k = graph.size();
  Matrix y = labels.pseudo_targets();
  if (result.labeled_indices.empty()) {
    result.scores = Matrix::Zero(k, labels.class_count);
    return result;
  }
  std::vector<int> unlabeled = labels.unlabeled_indices();
  result.scores = y;
  if (unlabeled.empty()) return result;

  if (gamma_g == 0.0) {
    std::vector<char> is_labeled(static_cast<std::size_t>(k), 0);
    for (int i : result.labeled_indices) is_labeled[static_cast<std::size_t>(i)] = 1;
    auto floating = floating_components(graph, is_labeled);
    if (!floating.empty()) {
      std::ostringstream msg;
      msg << "singular system: unlabeled component {";
      for (std::size_t i = 0; i < floating.front().size(); ++i)
        msg << (i ? ", " : "") << floating.front()[i];
      msg << "} has no labeled connection and gamma_g = 0";
      fail(ErrorCode::SingularSystem, msg.str());
    }
  }

  const int nu = static_cast<int>(unlabeled.size());
  const int nl = static_cast<int>(result.labeled_indices.size());
  Matrix lap = laplacian(graph);
  Matrix a(nu, nu);
  for (int r = 0; r < nu; ++r)
    for (int c = 0; c < nu; ++c)
      a(r, c) = lap(unlabeled[static_cast<std::size_t>(r)], unlabeled[static_cast<std::size_t>(c)]);
  for (int r = 0; r < nu; ++r)
    a(r, r) += gamma_g * graph.multiplicities[unlabeled[static_cast<std::size_t>(r)]];

  Matrix rhs(nu, labels.class_count);
  {
    Matrix wul(nu, nl);
    for (int r = 0; r < nu; ++r)
      for (int c = 0; c < nl; ++c)
        wul(r, c) = graph.scaled_weights(unlabeled[static_cast<std::size_t>(r)],
                                         result.labeled_indices[static_cast<std::size_t>(c)]);
    Matrix yl(nl, labels.class_count);
    for (int c = 0; c < nl; ++c)
      yl.row(c) = y.row(result.labeled_indices[static_cast<std::size_t>(c)]);
    rhs = wul * yl;
  }

  Matrix lu = checked_solve(a, rhs, &result.residual, &result.used_fallback);
  for (int r = 0; r < nu; ++r) result.scores.row(unlabeled[static_cast<std::size_t>(r)]) = lu.row(r);
  enforce_score_range(result.scores);
  return result;
}

SolveResult solve_soft(const QuantizedGraph& graph, const LabelAssignment& labels,
                       const SoftConfig& cfg) {
  labels.validate();
  cfg.validate();
  require(labels.size() == graph.size(), ErrorCode::DimensionMismatch,
          "one label entry per centroid required");

  SolveResult result;
  result.mode = SolveMode::Soft;
  result.gamma_g = cfg.gamma_g;
  result.labeled_indices = labels.labeled_indices();

  const int k = graph.size();
  Matrix y = labels.pseudo_targets();

  // Collapsed costs: per-centroid cost times multiplicity, matching how the
  // expansion sums per-copy penalties.
  Vector cost(k);
  for (int i = 0; i < k; ++i) {
    bool lab = labels.centroid_class[static_cast<std::size_t>(i)] != kNoLabel;
    cost[i] = (lab ? cfg.cost_labeled : cfg.cost_unlabeled) * graph.multiplicities[i];
  }

  Matrix a = laplacian(graph);
  a.diagonal() += cfg.gamma_g * graph.multiplicities + cost;
  Matrix rhs = cost.asDiagonal() * y;

  result.scores = checked_solve(a, rhs, &result.residual, &result.used_fallback);
  enforce_score_range(result.scores);

  // Norm sanity check from ||(K + C)^{-1}|| <= 1 / (gamma_g + c_u): the
  // expansion-weighted norm of every class column is bounded by
  // c_l sqrt(n_l) / (gamma_g + c_u). Anything above means the solve broke.
  {
    double labeled_mass = 0.0;
    for (int i : result.labeled_indices) labeled_mass += graph.multiplicities[i];
    double bound =
        cfg.cost_labeled * std::sqrt(labeled_mass) / (cfg.gamma_g + cfg.cost_unlabeled);
    for (int c = 0; c < labels.class_count; ++c) {
      double weighted = std::sqrt(
          (result.scores.col(c).array().square() * graph.multiplicities.array()).sum());
      require(weighted <= bound * (1.0 + 1e-9) + 1e-12, ErrorCode::Internal,
              "solution norm exceeds the regularized-solution bound");
    }
  }
  return result;
}

Prediction predict(const SolveResult& result, int centroid_index) {
  require(centroid_index >= 0 && centroid_index < result.scores.rows(),
          ErrorCode::InvalidArgument, "centroid index out of range");
  Prediction p;
  if (!result.has_labels()) return p;  // abstain: nothing to propagate yet
  const auto row = result.scores.row(centroid_index);
  int best = 0;
  for (int c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  double runner_up = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < row.size(); ++c)
    if (c != best) runner_up = std::max(runner_up, row[c]);
  p.label = best;
  p.margin = row[best] - runner_up;
  return p;
}

double lemma1_bound(std::int64_t n_l, double gamma_g) {
  require(n_l >= 0, ErrorCode::InvalidArgument, "n_l must be nonnegative");
  require(gamma_g >= 0.0, ErrorCode::InvalidArgument, "gamma_g must be nonnegative");
  return std::sqrt(static_cast<double>(n_l)) / (gamma_g + 1.0);
}

double lemma2_bound(std::int64_t n_l, double c_u, double gamma_g, double fro_gap) {
  require(n_l >= 0, ErrorCode::InvalidArgument, "n_l must be nonnegative");
  require(c_u > 0.0, ErrorCode::InvalidArgument, "c_u must be positive");
  require(fro_gap >= 0.0, ErrorCode::InvalidArgument, "fro_gap must be nonnegative");
  require(gamma_g > 0.0, ErrorCode::InvalidArgument,
          "the perturbation bound is undefined at gamma_g = 0");
  return std::sqrt(static_cast<double>(n_l)) * fro_gap / (c_u * gamma_g * gamma_g);
}

double transductive_bound(double beta, double empirical_risk, std::int64_t n_l, double delta) {
  require(n_l >= 1, ErrorCode::InvalidArgument, "transductive bound needs n_l >= 1");
  require(delta > 0.0 && delta < 1.0, ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  double nl = static_cast<double>(n_l);
  return empirical_risk + beta + std::sqrt(2.0 * std::log(2.0 / delta) / nl) * (nl * beta + 4.0);
}

Prop3Result prop3_quantities(std::int64_t n_l, double gamma_g, double c_u, double delta,
                             double lambda_max_laplacian, double empirical_risk) {
  require(n_l >= 1, ErrorCode::InvalidArgument, "prop3 quantities need n_l >= 1");
  require(c_u > 0.0, ErrorCode::InvalidArgument, "c_u must be positive");
  double nl = static_cast<double>(n_l);
  double root_cu = std::sqrt(c_u);
  // Grouping is exactly as printed; negative values are flagged, not fixed.
  double beta = 2.0 * (std::sqrt(2.0) / (gamma_g + 1.0) +
                       std::sqrt(2.0 * nl) * (1.0 - root_cu * lambda_max_laplacian + gamma_g) /
                           (root_cu * gamma_g * gamma_g + 1.0));
  Prop3Result out;
  out.beta_bound = beta;
  out.beta_negative = beta < 0.0;
  out.transductive_bound = transductive_bound(beta, empirical_risk, n_l, delta);
  return out;
}

}  // namespace qhs
