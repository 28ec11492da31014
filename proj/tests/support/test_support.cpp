#include "test_support.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qhs::testing {

std::uint64_t Rng::next() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform(double lo, double hi) {
  double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

int Rng::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform(std::numeric_limits<double>::min(), 1.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return r * std::cos(2.0 * M_PI * u2);
}

MatrixXd random_points(Rng& rng, int n, int dim, double lo, double hi) {
  MatrixXd pts(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) pts(i, j) = rng.uniform(lo, hi);
  return pts;
}

BlobData two_blobs(Rng& rng, int n, int dim, double separation, double spread) {
  BlobData data;
  data.points.resize(n, dim);
  data.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    int blob = i % 2;
    data.labels[i] = blob;
    for (int j = 0; j < dim; ++j)
      data.points(i, j) = (blob == 0 ? 0.0 : separation) + spread * rng.normal();
  }
  return data;
}

void RefQuantizer::greedy_pass() {
  std::vector<RefCentroid> kept;
  for (const auto& c : centroids) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kept.size(); ++i) {
      double d = (c.location - kept[i].location).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0 && best_d < radius) {
      kept[static_cast<std::size_t>(best)].multiplicity += c.multiplicity;
    } else {
      kept.push_back(c);
    }
  }
  centroids = kept;
}

void RefQuantizer::observe(const VectorXd& x) {
  if (static_cast<int>(centroids.size()) == capacity + 1) {
    if (!radius_defined) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < centroids.size(); ++i)
        for (std::size_t j = i + 1; j < centroids.size(); ++j)
          best = std::min(best, (centroids[i].location - centroids[j].location).norm());
      radius = best;
      radius_defined = true;
    } else {
      radius *= multiplier;
    }
    greedy_pass();
    while (static_cast<int>(centroids.size()) > capacity) {
      radius *= multiplier;
      greedy_pass();
    }
  }

  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    double d = (x - centroids[i].location).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  bool absorb = best >= 0 && (radius_defined ? best_d < radius : best_d == 0.0);
  if (absorb) {
    centroids[static_cast<std::size_t>(best)].multiplicity += 1;
  } else {
    centroids.push_back(RefCentroid{x, 1});
  }
}

ExpandedInstance expand_instance(const MatrixXd& base_weights, const VectorXi& multiplicities,
                                 const std::vector<std::int32_t>& centroid_labels) {
  int k = static_cast<int>(multiplicities.size());
  int n = multiplicities.sum();
  ExpandedInstance inst;
  inst.weights = MatrixXd::Zero(n, n);
  inst.owner.resize(static_cast<std::size_t>(n));
  inst.labels.resize(static_cast<std::size_t>(n));
  int at = 0;
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < multiplicities[c]; ++r) {
      inst.owner[static_cast<std::size_t>(at)] = c;
      inst.labels[static_cast<std::size_t>(at)] = centroid_labels[static_cast<std::size_t>(c)];
      ++at;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      int ci = inst.owner[static_cast<std::size_t>(i)];
      int cj = inst.owner[static_cast<std::size_t>(j)];
      inst.weights(i, j) = (ci == cj) ? 1.0 : base_weights(ci, cj);
    }
  return inst;
}

MatrixXd target_matrix(const std::vector<std::int32_t>& labels, int class_count) {
  int n = static_cast<int>(labels.size());
  MatrixXd y = MatrixXd::Zero(n, class_count);
  for (int i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] < 0) continue;
    for (int c = 0; c < class_count; ++c)
      y(i, c) = (labels[static_cast<std::size_t>(i)] == c) ? 1.0 : -1.0;
  }
  return y;
}

RandomInstance random_instance(Rng& rng, int min_k, int max_k, int max_mult, int class_count) {
  RandomInstance inst;
  inst.class_count = class_count;
  int k = rng.uniform_int(std::max(2, min_k), max_k);
  inst.base_weights = MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (rng.uniform() < 0.55) {
        double w = rng.uniform(0.05, 1.0);
        inst.base_weights(i, j) = w;
        inst.base_weights(j, i) = w;
      }
  // Keep the graph connected so hard solves at gamma = 0 stay grounded.
  for (int i = 1; i < k; ++i)
    if (inst.base_weights(i - 1, i) == 0.0) {
      double w = rng.uniform(0.2, 1.0);
      inst.base_weights(i - 1, i) = w;
      inst.base_weights(i, i - 1) = w;
    }
  inst.multiplicities.resize(k);
  for (int i = 0; i < k; ++i) inst.multiplicities[i] = rng.uniform_int(1, max_mult);
  inst.labels.assign(static_cast<std::size_t>(k), -1);
  for (int i = 0; i < k; ++i)
    if (rng.uniform() < 0.4) inst.labels[static_cast<std::size_t>(i)] =
        rng.uniform_int(0, class_count - 1);
  inst.labels[0] = rng.uniform_int(0, class_count - 1);
  inst.labels[static_cast<std::size_t>(k - 1)] = -1;
  return inst;
}

MatrixXd laplacian_ref(const MatrixXd& weights) {
  int n = static_cast<int>(weights.rows());
  MatrixXd lap = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      deg += weights(i, j);
      lap(i, j) = -weights(i, j);
    }
    lap(i, i) = deg;
  }
  return lap;
}

MatrixXd hard_solve_full(const MatrixXd& weights, const std::vector<std::int32_t>& labels,
                         int class_count, double gamma) {
  int n = static_cast<int>(weights.rows());
  std::vector<int> lab, unl;
  for (int i = 0; i < n; ++i)
    (labels[static_cast<std::size_t>(i)] >= 0 ? lab : unl).push_back(i);
  MatrixXd y = target_matrix(labels, class_count);
  MatrixXd scores = MatrixXd::Zero(n, class_count);
  for (int i : lab) scores.row(i) = y.row(i);
  if (unl.empty() || lab.empty()) return scores;

  MatrixXd lap = laplacian_ref(weights);
  int nu = static_cast<int>(unl.size());
  int nl = static_cast<int>(lab.size());
  MatrixXd a(nu, nu);
  for (int r = 0; r < nu; ++r)
    for (int c = 0; c < nu; ++c) a(r, c) = lap(unl[static_cast<std::size_t>(r)], unl[static_cast<std::size_t>(c)]);
  a.diagonal().array() += gamma;
  MatrixXd wul(nu, nl);
  for (int r = 0; r < nu; ++r)
    for (int c = 0; c < nl; ++c) wul(r, c) = weights(unl[static_cast<std::size_t>(r)], lab[static_cast<std::size_t>(c)]);
  MatrixXd yl(nl, class_count);
  for (int c = 0; c < nl; ++c) yl.row(c) = y.row(lab[static_cast<std::size_t>(c)]);
  MatrixXd lu = a.fullPivLu().solve(wul * yl);
  for (int r = 0; r < nu; ++r) scores.row(unl[static_cast<std::size_t>(r)]) = lu.row(r);
  return scores;
}

MatrixXd soft_solve_full(const MatrixXd& weights, const std::vector<std::int32_t>& labels,
                         int class_count, double gamma, double c_l, double c_u) {
  int n = static_cast<int>(weights.rows());
  MatrixXd y = target_matrix(labels, class_count);
  MatrixXd k_mat = laplacian_ref(weights);
  k_mat.diagonal().array() += gamma;
  VectorXd cost(n);
  for (int i = 0; i < n; ++i)
    cost[i] = labels[static_cast<std::size_t>(i)] >= 0 ? c_l : c_u;
  MatrixXd a = k_mat;
  a.diagonal() += cost;
  return a.fullPivLu().solve(cost.asDiagonal() * y);
}

VectorXd qp_minimize(const MatrixXd& cost_diag_times, const MatrixXd& quad, const VectorXd& y,
                     int max_iter, double tol) {
  // Objective f(l) = (l-y)^T C (l-y) + l^T K l, gradient 2[(C+K)l - Cy].
  const MatrixXd& c = cost_diag_times;
  const MatrixXd& k = quad;
  int n = static_cast<int>(y.size());
  VectorXd l = VectorXd::Zero(n);
  VectorXd grad = 2.0 * (c * l + k * l - c * y);
  VectorXd dir = -grad;
  double g2 = grad.squaredNorm();
  for (int it = 0; it < max_iter && g2 > tol * tol; ++it) {
    VectorXd hd = 2.0 * (c * dir + k * dir);
    double denom = dir.dot(hd);
    if (denom <= 0) break;
    double alpha = -grad.dot(dir) / denom;
    l += alpha * dir;
    grad = 2.0 * (c * l + k * l - c * y);
    double g2_new = grad.squaredNorm();
    double beta = g2_new / g2;
    dir = -grad + beta * dir;
    g2 = g2_new;
  }
  return l;
}

}  // namespace qhs::testing
