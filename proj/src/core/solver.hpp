#pragma once

#include "core/kernel_graph.hpp"
#include "core/types.hpp"

#include <cstdint>
#include <vector>

namespace qhs {

enum class SolveMode { Hard, Soft };

// One-vs-rest label layout over centroids. A centroid is labeled exactly when
// its tally is nonempty; its class is the tally majority (ties to the most
// recent label). pseudo_targets() rows are +1/-1 for labeled centroids and 0
// for unlabeled ones.
struct LabelAssignment {
  std::vector<ClassId> centroid_class;  // kNoLabel marks unlabeled
  int class_count = 2;

  static LabelAssignment from_centroids(const CentroidSet& set, int class_count);

  void validate() const;
  Matrix pseudo_targets() const;
  std::vector<int> labeled_indices() const;
  std::vector<int> unlabeled_indices() const;
  int size() const { return static_cast<int>(centroid_class.size()); }
};

// Soft-constraint costs: c_l on labeled centroids, c_u elsewhere, both scaled
// by centroid multiplicity inside the solve.
struct SoftConfig {
  double cost_labeled = 1.0;
  double cost_unlabeled = 0.01;
  double gamma_g = 0.0;

  void validate() const;
};

struct SolveResult {
  Matrix scores;  // k x class_count, entries in [-1, 1]
  SolveMode mode = SolveMode::Hard;
  double gamma_g = 0.0;
  std::vector<int> labeled_indices;
  double residual = 0.0;
  bool used_fallback = false;

  bool has_labels() const { return !labeled_indices.empty(); }
};

// Hard-constrained collapsed solve: labeled rows clamped to their targets,
// unlabeled block solved from (L_uu + gamma V_uu) l_u = W_ul l_l. With
// gamma = 0 every unlabeled component must reach a labeled centroid.
SolveResult solve_hard(const QuantizedGraph& graph, const LabelAssignment& labels,
                       double gamma_g);

// Soft-constrained collapsed solve: minimizer of
// (l-y)^T C (l-y) + l^T (L + gamma V) l with C = cost * multiplicity.
SolveResult solve_soft(const QuantizedGraph& graph, const LabelAssignment& labels,
                       const SoftConfig& cfg);

struct Prediction {
  ClassId label = kAbstain;
  double margin = 0.0;  // best minus runner-up score
};

// Argmax over class columns, ties to the lowest class index; abstains when
// the solve had no labeled centroid.
Prediction predict(const SolveResult& result, int centroid_index);

// ||l||_2 <= sqrt(n_l) / (gamma_g + 1) for any regularized solution.
double lemma1_bound(std::int64_t n_l, double gamma_g);

// ||l_q - l_o||_2 <= sqrt(n_l) * ||K_q - K_o||_F / (c_u gamma_g^2).
double lemma2_bound(std::int64_t n_l, double c_u, double gamma_g, double fro_gap);

struct Prop3Result {
  double beta_bound = 0.0;
  double transductive_bound = 0.0;
  bool beta_negative = false;  // printed formula can go negative; flagged, never asserted
};

// Stability coefficient bound and the transductive error bound, evaluated
// exactly as printed; diagnostic output only.
Prop3Result prop3_quantities(std::int64_t n_l, double gamma_g, double c_u, double delta,
                             double lambda_max_laplacian, double empirical_risk);

double transductive_bound(double beta, double empirical_risk, std::int64_t n_l, double delta);

}  // namespace qhs
