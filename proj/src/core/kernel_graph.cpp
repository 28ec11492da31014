#include "core/kernel_graph.hpp"

#include <cmath>
#include <sstream>

namespace qhs {

void KernelSpec::validate() const {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument,
          "kernel sigma must be positive and finite");
  require(feature_scaling >= 1, ErrorCode::InvalidArgument,
          "kernel feature_scaling must be >= 1");
  require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorCode::InvalidArgument,
          "kernel epsilon must be nonnegative and finite");
}

double kernel_weight(const Vector& a, const Vector& b, const KernelSpec& spec) {
  spec.validate();
  require(a.size() == b.size(), ErrorCode::DimensionMismatch,
          "kernel arguments differ in dimension");
  require(a.allFinite() && b.allFinite(), ErrorCode::NonFiniteInput,
          "kernel arguments must be finite");
  double d = spec.distance ? spec.distance(a, b) : (a - b).norm();
  double w = std::exp(-(d * d) / (2.0 * spec.feature_scaling * spec.sigma * spec.sigma));
  return w < spec.epsilon ? 0.0 : w;
}

QuantizedGraph build_graph(const Matrix& locations, const Vector& multiplicities,
                           const KernelSpec& spec) {
  spec.validate();
  const int k = static_cast<int>(locations.rows());
  require(k >= 1, ErrorCode::InvalidArgument, "graph needs at least one centroid");
  require(multiplicities.size() == k, ErrorCode::DimensionMismatch,
          "one multiplicity per centroid required");

  QuantizedGraph g;
  g.base_weights = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      double w = kernel_weight(locations.row(i).transpose(), locations.row(j).transpose(), spec);
      g.base_weights(i, j) = w;
      g.base_weights(j, i) = w;
    }
  g.multiplicities = multiplicities;
  g.scaled_weights = multiplicities.asDiagonal() * g.base_weights * multiplicities.asDiagonal();
  g.degrees = g.scaled_weights.rowwise().sum();
  return g;
}

QuantizedGraph build_graph(const CentroidSet& set, const KernelSpec& spec) {
  const int k = set.size();
  require(k >= 1, ErrorCode::InvalidArgument, "graph needs at least one centroid");
  Matrix locations(k, set.dimension());
  Vector mult(k);
  for (int i = 0; i < k; ++i) {
    const Centroid& c = set.centroids()[static_cast<std::size_t>(i)];
    locations.row(i) = c.location.transpose();
    mult[i] = static_cast<double>(c.multiplicity);
  }
  return build_graph(locations, mult, spec);
}

Matrix laplacian_of(const Matrix& weights) {
  require(weights.rows() == weights.cols(), ErrorCode::DimensionMismatch,
          "weight matrix must be square");
  const int n = static_cast<int>(weights.rows());
  Matrix lap = -weights;
  lap.diagonal().setZero();
  for (int i = 0; i < n; ++i) lap(i, i) = -lap.row(i).sum();
  return lap;
}

Matrix laplacian(const QuantizedGraph& graph) { return laplacian_of(graph.scaled_weights); }

Matrix normalized_laplacian(const Matrix& weights) {
  require(weights.rows() == weights.cols(), ErrorCode::DimensionMismatch,
          "weight matrix must be square");
  const int n = static_cast<int>(weights.rows());
  Vector degrees(n);
  for (int i = 0; i < n; ++i) {
    double deg = weights.row(i).sum() - weights(i, i);
    if (!(deg > 0.0)) {
      std::ostringstream msg;
      msg << "vertex " << i << " has zero degree; drop isolated vertices first";
      fail(ErrorCode::InvalidArgument, msg.str());
    }
    degrees[i] = deg;
  }
  Matrix norm(n, n);
  for (int i = 0; i < n; ++i) {
    norm(i, i) = 1.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      norm(i, j) = -weights(i, j) / std::sqrt(degrees[i] * degrees[j]);
    }
  }
  return norm;
}

double frobenius_gap(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::DimensionMismatch,
          "frobenius_gap requires equal shapes");
  return (a - b).norm();
}

double estimate_sigma(const Matrix& points) {
  require(points.rows() >= 2, ErrorCode::InvalidArgument,
          "sigma estimation needs at least two points");
  const double n = static_cast<double>(points.rows());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    double mean = points.col(j).mean();
    double ss = (points.col(j).array() - mean).square().sum();
    acc += std::sqrt(ss / (n - 1.0));
  }
  double sigma = acc / static_cast<double>(points.cols());
  require(sigma > 0.0, ErrorCode::InvalidArgument,
          "sigma estimate is zero: all warm-up points identical");
  return sigma;
}

}  // namespace qhs
