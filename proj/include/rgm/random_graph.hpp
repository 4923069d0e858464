#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgm/graph.hpp"
#include "rgm/stats.hpp"

namespace rgm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr int kLatentDim = 2;

// Theta = (alpha, beta, c) of the latent probit network model.
struct RandomGraphParams {
  Vector alpha;  // one sparsity intercept per environment
  Vector beta;   // edge-covariate coefficients
  Matrix c;      // environments x 2 latent locations

  std::size_t environments() const { return static_cast<std::size_t>(alpha.size()); }
  std::size_t covariates() const { return static_cast<std::size_t>(beta.size()); }
  void validate() const;
};

// alpha = probit(initial_sparsity), beta = 0, c = 0.
RandomGraphParams initial_params(std::size_t environments, std::size_t covariates, double initial_sparsity = 0.05);

// Edge-level covariates, one row per unordered pair in pair_index order.
struct EdgeCovariates {
  std::size_t p = 0;
  Matrix values;  // num_pairs(p) x d
  std::vector<std::string> names;

  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
  double dot(std::size_t pair, const Vector& beta) const;

  static EdgeCovariates none(std::size_t p);
};

// Sum over k' != k of c_{k'} 1{(i,j) in G^(k')}.
Eigen::Vector2d cross_environment_sum(std::size_t k, std::size_t i, std::size_t j, const GraphEnsemble& ensemble,
                                      const RandomGraphParams& theta);

double edge_linear_predictor(std::size_t k, std::size_t i, std::size_t j, const GraphEnsemble& ensemble,
                             const RandomGraphParams& theta, const EdgeCovariates& w);

double edge_probability(std::size_t k, std::size_t i, std::size_t j, const GraphEnsemble& ensemble,
                        const RandomGraphParams& theta, const EdgeCovariates& w);

struct ThetaPrior {
  double variance = 10.0;
};

// Albert-Chib latent utilities, one per (environment, pair), for the current
// ensemble and Theta.
Matrix augment_edge_utilities(const GraphEnsemble& ensemble, const RandomGraphParams& theta, const EdgeCovariates& w,
                              Rng& rng);

// Conjugate blocks of the Theta sweep given latent utilities. Each updates
// its block of `theta` in place. c_k enters its own environment's rows and,
// through the cross sums, every other environment's rows; draw_location uses
// both.
void draw_alpha(const Matrix& utilities, const GraphEnsemble& ensemble, RandomGraphParams& theta,
                const EdgeCovariates& w, const ThetaPrior& prior, Rng& rng);
void draw_beta(const Matrix& utilities, const GraphEnsemble& ensemble, RandomGraphParams& theta,
               const EdgeCovariates& w, const ThetaPrior& prior, Rng& rng);
void draw_location(std::size_t k, const Matrix& utilities, const GraphEnsemble& ensemble, RandomGraphParams& theta,
                   const EdgeCovariates& w, const ThetaPrior& prior, Rng& rng);

// One full sweep: augmentation, then alpha, beta, c_1..c_B.
RandomGraphParams gibbs_update_theta(const GraphEnsemble& ensemble, const RandomGraphParams& theta,
                                     const EdgeCovariates& w, Rng& rng, const ThetaPrior& prior = {});

// Starts from empty graphs and redraws every indicator `sweeps` times from
// its conditional under the latent probit model.
GraphEnsemble sample_graph_ensemble(const RandomGraphParams& theta, const EdgeCovariates& w, int sweeps, Rng& rng);

// Erdos-Renyi baseline: a constant edge probability for every pair.
struct ErdosRenyiPrior {
  double sparsity;

  double probability(std::size_t /*k*/, std::size_t /*i*/, std::size_t /*j*/) const { return sparsity; }
  double log_odds() const;
};

ErdosRenyiPrior er_prior_probability(double sparsity);

}  // namespace rgm
