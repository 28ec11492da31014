#pragma once

#include "core/quantizer.hpp"
#include "core/types.hpp"

#include <functional>

namespace qhs {

// Gaussian similarity kernel w(a,b) = exp(-d(a,b)^2 / (2 p sigma^2)), with
// weights below epsilon zeroed (epsilon-neighborhood convention). p = 1 is the
// plain heat kernel; p = feature count reproduces the per-feature scaling.
// `distance` may override the Euclidean metric.
struct KernelSpec {
  double sigma = 1.0;
  int feature_scaling = 1;
  double epsilon = 0.0;
  std::function<double(const Vector&, const Vector&)> distance;

  void validate() const;
};

double kernel_weight(const Vector& a, const Vector& b, const KernelSpec& spec);

// Centroid-level similarity graph. base_weights is the plain kernel matrix
// over centroid locations (zero diagonal); scaled_weights folds in the
// multiplicities, W^q = V W~ V, so the collapsed graph carries the same
// conductances as the duplicated point graph.
struct QuantizedGraph {
  Matrix base_weights;
  Vector multiplicities;
  Matrix scaled_weights;
  Vector degrees;

  int size() const { return static_cast<int>(base_weights.rows()); }
};

QuantizedGraph build_graph(const Matrix& locations, const Vector& multiplicities,
                           const KernelSpec& spec);
QuantizedGraph build_graph(const CentroidSet& set, const KernelSpec& spec);

// L = D - W with the diagonal of W ignored, so self-loops never change L.
Matrix laplacian_of(const Matrix& weights);
Matrix laplacian(const QuantizedGraph& graph);

// Normalized Laplacian (D - W)_ij / sqrt(d_i d_j): unit diagonal by
// construction. Throws naming the first zero-degree vertex.
Matrix normalized_laplacian(const Matrix& weights);

double frobenius_gap(const Matrix& a, const Matrix& b);

// Warm-up helper: mean of the per-feature standard deviations (rows = points).
double estimate_sigma(const Matrix& points);

}  // namespace qhs
