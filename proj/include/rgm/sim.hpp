#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rgm/dw_marginals.hpp"
#include "rgm/graph.hpp"
#include "rgm/random_graph.hpp"

namespace rgm {

struct SimConfig {
  std::size_t n = 346;
  std::size_t p = 87;
  std::size_t environments = 13;
  double alpha_mean = -2.0;
  double alpha_sd = 1.0;
  double w_low = -0.5;
  double w_high = 0.5;
  double beta = 2.5;
  // Standard deviation of each latent coordinate.
  double c_sd = 0.3;
  int ensemble_sweeps = 100;
  double gwishart_df = 3.0;
  std::uint64_t seed = 1;
  // Fixed latent locations (environments x 2) in place of the N(0, c_sd^2) draw.
  std::optional<Matrix> c;

  void validate() const;
};

struct SimTruth {
  RandomGraphParams theta;
  EdgeCovariates w;
  GraphEnsemble graphs;
  std::vector<Matrix> precisions;
};

struct SimResult {
  std::vector<Matrix> observations;  // n x p per environment
  SimTruth truth;
};

// Theta, a scalar U(w_low, w_high) edge covariate, the graph ensemble after
// `ensemble_sweeps` sweeps, W_G(df, I) precisions and Gaussian rows.
SimResult simulate(const SimConfig& cfg);

struct CountSimResult {
  std::vector<Matrix> counts;    // integer-valued, n x p per environment
  std::vector<Matrix> latent;    // the standardised scores behind each count
  SimResult gaussian;
};

// Pushes each standardised Gaussian score through Phi and then through the
// discrete Weibull quantile of its node (intercept-only regressions, one per
// node).
CountSimResult simulate_counts(const SimConfig& cfg, const std::vector<DwRegression>& marginals);

}  // namespace rgm
