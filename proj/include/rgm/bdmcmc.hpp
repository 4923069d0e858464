#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "rgm/graph.hpp"
#include "rgm/gwishart.hpp"
#include "rgm/random_graph.hpp"
#include "rgm/stats.hpp"

namespace rgm {

// Prior odds of each edge inside the birth-death sampler: either the latent
// probit model conditioned on the other environments' graphs, or a constant
// Erdos-Renyi probability. Holds references; the referenced objects must
// outlive it.
class GraphPrior {
 public:
  static GraphPrior erdos_renyi(double sparsity);
  static GraphPrior latent_probit(const GraphEnsemble& ensemble, const RandomGraphParams& theta,
                                  const EdgeCovariates& w);

  double log_odds(std::size_t k, std::size_t i, std::size_t j) const;
  double probability(std::size_t k, std::size_t i, std::size_t j) const;

 private:
  GraphPrior() = default;

  bool erdos_renyi_ = true;
  double er_log_odds_ = 0.0;
  double er_probability_ = 0.5;
  const GraphEnsemble* ensemble_ = nullptr;
  const RandomGraphParams* theta_ = nullptr;
  const EdgeCovariates* w_ = nullptr;
};

// p_e / (1 - p_e) for the pair (i, j) in environment k.
double edge_prior_odds(std::size_t k, std::size_t i, std::size_t j, const GraphPrior& prior);

struct BdState {
  Graph graph;
  Matrix omega;
  double waiting_time = 1.0;
  std::size_t environment = 0;
};

struct RateOptions {
  double min_rate = 1e-12;
  double max_rate = 1e12;
  // Rate of full omega refreshes competing with the toggles. 0 restores the
  // plain scheme: full redraw after every toggle, holding time 1 / sum(rates).
  double refresh_rate = 1.0;
};

struct ToggleRates {
  // Indexed by pair_index. log_ratio is the log posterior ratio of the
  // toggled graph against the current one; rate = min(1, exp(log_ratio))
  // clamped to [min_rate, max_rate]. The min keeps the jump process in
  // detailed balance.
  std::vector<double> log_ratio;
  std::vector<double> rate;
  std::size_t clamped = 0;

  double total() const;
};

// Log ratio of the posterior of graph-without-(i,j) to graph-with-(i,j),
// conditional on K_{-j,-j} (j the larger index) with column j integrated
// out. The G-Wishart prior normalising-constant ratio uses the closed form
// that is exact for an identity scale when the edge lies in no cycle and
// otherwise counts the triangles through the edge. `sigma` is omega^{-1},
// `posterior_scale` is scale + z^T z, `prior_df` the prior shape.
double log_edge_removal_ratio(const Graph& graph, const Matrix& sigma, const Matrix& posterior_scale, double prior_df,
                              std::size_t i, std::size_t j);

ToggleRates birth_death_rates(const BdState& state, const Matrix& posterior_scale, double prior_df,
                              const GraphPrior& prior, const RateOptions& options = {});
ToggleRates birth_death_rates(const BdState& state, const Matrix& z, const GWishartParams& gw_prior,
                              const GraphPrior& prior, const RateOptions& options = {});

struct BdStepInfo {
  std::size_t toggled_pair = 0;
  bool birth = false;
  std::size_t clamped = 0;
  // The event was an omega refresh; the graph is unchanged.
  bool refreshed = false;
};

// One event of the jump process on (graph, omega). Toggles compete with a
// full omega refresh at options.refresh_rate; the expected holding time is
// 1 / (sum(rates) + refresh_rate). A toggle of (i, j) redraws only column j
// of omega given the rest, the same conditional the rates integrate over, so
// the process keeps the joint posterior. With refresh_rate = 0 omega is
// instead redrawn in full after each toggle.
BdState bd_step(const BdState& state, const Matrix& z, const GWishartParams& gw_prior, const GraphPrior& prior,
                Rng& rng, const RateOptions& options = {}, const GWishartOptions& gw_options = {},
                BdStepInfo* info = nullptr);

// Redraws column j of omega (the larger index of a toggled pair) from its
// G-Wishart conditional given the other rows and columns. `posterior_df` is
// prior shape + n.
void redraw_column(Matrix& omega, const Graph& graph, std::size_t j, const Matrix& posterior_scale,
                   double posterior_df, Rng& rng);

// Picks an index from unnormalised rates.
std::size_t select_toggle(const std::vector<double>& rates, Rng& rng);

}  // namespace rgm
