#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rgm/bdmcmc.hpp"
#include "rgm/graph.hpp"
#include "rgm/random_graph.hpp"

namespace rgm {

// Running sums over the retained tail. Graph states are weighted by their
// waiting times; Theta draws count once per iteration.
struct PosteriorAccumulator {
  std::size_t p = 0;
  Vector weight;                    // per environment, sum of waiting times
  Matrix edge_sums;                 // environments x pairs
  std::vector<Matrix> pcor_sums;    // per environment, weighted partial correlations
  std::vector<std::uint64_t> states;

  std::uint64_t theta_draws = 0;
  Vector alpha_sum;
  Vector beta_sum;
  Matrix c_sum;
  Matrix c_aligned_sum;
  Matrix gram_sum;
  // Procrustes target for the aligned sums: the first Theta draw added.
  Matrix c_reference;

  PosteriorAccumulator() = default;
  PosteriorAccumulator(std::size_t environments, std::size_t p, std::size_t covariates);

  std::size_t environments() const { return static_cast<std::size_t>(weight.size()); }

  void add_state(std::size_t k, const Graph& graph, const Matrix& omega, double waiting_time);
  void add_theta(const RandomGraphParams& theta);
  // Sums are added entrywise; both sides must share c_reference (or one
  // side has none yet).
  void merge(const PosteriorAccumulator& other);
};

// Orthogonal Q minimising |c Q - reference|_F.
Eigen::Matrix2d procrustes_rotation(const Matrix& c, const Matrix& reference);

struct PosteriorSummary {
  std::vector<Matrix> edge_probability;     // p x p, zero diagonal
  std::vector<Matrix> partial_correlation;  // p x p, unit diagonal
  Vector sparsity;                          // mean edge probability per environment
  // Mean over pairs of p(1 - p): the across-sample variance of the edge
  // indicators.
  Vector edge_variance;
  std::uint64_t theta_draws = 0;
  Vector alpha_mean;
  Vector beta_mean;
  Matrix c_mean;
  Matrix c_aligned_mean;
  Matrix gram_mean;
};

PosteriorSummary summarize(const PosteriorAccumulator& acc);

// Bitwise equality of every field (shapes included).
bool identical(const PosteriorSummary& a, const PosteriorSummary& b);

// Edge probabilities from per-environment histories (graph held, its waiting
// time). Throws empty_history when any environment has no states.
std::vector<Matrix> accumulate_posterior(const std::vector<std::vector<BdState>>& history);

struct NetworkStatistics {
  // Jaccard overlap of the edge sets {P(edge) > threshold}; 1 when both
  // sets are empty.
  Matrix sharing;
  // Pearson correlation across pairs of mean partial correlations; NaN when
  // either environment has constant partial correlations.
  Matrix pcor_correlation;
};

NetworkStatistics network_statistics(const PosteriorSummary& summary, double edge_threshold = 0.5);

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

// Thresholds sweep the distinct probabilities from high to low; tied scores
// move together, giving a diagonal segment. Throws degenerate_truth when the
// true graph is empty or complete.
RocCurve roc_curve(const Matrix& edge_probability, const Graph& truth);

}  // namespace rgm
