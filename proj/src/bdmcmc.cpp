#include "rgm/bdmcmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rgm/error.hpp"

namespace rgm {

GraphPrior GraphPrior::erdos_renyi(double sparsity) {
  const auto er = er_prior_probability(sparsity);
  GraphPrior prior;
  prior.erdos_renyi_ = true;
  prior.er_probability_ = er.sparsity;
  prior.er_log_odds_ = er.log_odds();
  return prior;
}

GraphPrior GraphPrior::latent_probit(const GraphEnsemble& ensemble, const RandomGraphParams& theta,
                                     const EdgeCovariates& w) {
  GraphPrior prior;
  prior.erdos_renyi_ = false;
  prior.ensemble_ = &ensemble;
  prior.theta_ = &theta;
  prior.w_ = &w;
  return prior;
}

double GraphPrior::log_odds(std::size_t k, std::size_t i, std::size_t j) const {
  if (erdos_renyi_) return er_log_odds_;
  const double eta = edge_linear_predictor(k, i, j, *ensemble_, *theta_, *w_);
  return log_normal_cdf(eta) - log_normal_cdf(-eta);
}

double GraphPrior::probability(std::size_t k, std::size_t i, std::size_t j) const {
  if (erdos_renyi_) return er_probability_;
  return edge_probability(k, i, j, *ensemble_, *theta_, *w_);
}

double edge_prior_odds(std::size_t k, std::size_t i, std::size_t j, const GraphPrior& prior) {
  return std::exp(prior.log_odds(k, i, j));
}

double ToggleRates::total() const { return std::accumulate(rate.begin(), rate.end(), 0.0); }

double log_edge_removal_ratio(const Graph& graph, const Matrix& sigma, const Matrix& posterior_scale, double prior_df,
                              std::size_t i, std::size_t j) {
  // Column j (the larger index) is integrated out given K_{-j,-j}; its free
  // entries sit on the neighbours of j. With the edge present they are
  // N = M + {i}, without it M.
  if (i > j) std::swap(i, j);
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);

  std::vector<Eigen::Index> rest;
  std::size_t common = 0;
  for (std::size_t v = 0; v < graph.size(); ++v) {
    if (v == i || v == j || !graph.has_edge(v, j)) continue;
    rest.push_back(static_cast<Eigen::Index>(v));
    if (graph.has_edge(v, i)) ++common;
  }

  // A = (K_{-j,-j})^{-1} restricted to rest + {i}, from sigma.
  auto a = [&](Eigen::Index r, Eigen::Index c) { return sigma(r, c) - sigma(r, jj) * sigma(jj, c) / sigma(jj, jj); };
  const double d_jj = posterior_scale(jj, jj);
  double s = a(ii, ii);
  double t = posterior_scale(ii, jj);
  const auto m = static_cast<Eigen::Index>(rest.size());
  if (m > 0) {
    Matrix a_mm(m, m);
    Matrix rhs(m, 2);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) a_mm(r, c) = a(rest[r], rest[c]);
      rhs(r, 0) = a(rest[r], ii);
      rhs(r, 1) = posterior_scale(rest[r], jj);
    }
    const Matrix sol = a_mm.llt().solve(rhs);
    s -= rhs.col(0).dot(sol.col(0));
    t -= rhs.col(0).dot(sol.col(1));
  }

  // I_G / I_{G-e} for an identity-like prior scale, with `common` triangles
  // through the edge, combined with the (2 pi)^{-1/2} of the Gaussian integral.
  const double df_local = prior_df + static_cast<double>(common);
  const double log_constant_ratio = 0.5 * std::log(2.0) + std::lgamma(0.5 * (df_local + 1.0)) - std::lgamma(0.5 * df_local);
  return log_constant_ratio + 0.5 * std::log(d_jj * s) - t * t / (2.0 * d_jj * s);
}

ToggleRates birth_death_rates(const BdState& state, const Matrix& posterior_scale, double prior_df,
                              const GraphPrior& prior, const RateOptions& options) {
  const std::size_t p = state.graph.size();
  if (static_cast<std::size_t>(state.omega.rows()) != p || static_cast<std::size_t>(posterior_scale.rows()) != p)
    throw Error(ErrorCategory::domain, "state dimensions are inconsistent");
  const Eigen::LLT<Matrix> llt(state.omega);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCategory::non_positive_definite, "precision matrix is not positive definite");
  const Matrix sigma = llt.solve(Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));

  ToggleRates out;
  out.log_ratio.resize(num_pairs(p));
  out.rate.resize(num_pairs(p));
  std::size_t e = 0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j, ++e) {
      const double log_removal = log_edge_removal_ratio(state.graph, sigma, posterior_scale, prior_df, i, j);
      const double log_odds = prior.log_odds(state.environment, i, j);
      const double log_ratio = state.graph.has_edge(i, j) ? log_removal - log_odds : log_odds - log_removal;
      double rate = log_ratio < 0.0 ? std::exp(log_ratio) : 1.0;
      if (!(rate >= options.min_rate) || rate > options.max_rate) {
        rate = std::isnan(rate) ? options.min_rate : std::clamp(rate, options.min_rate, options.max_rate);
        ++out.clamped;
      }
      out.log_ratio[e] = log_ratio;
      out.rate[e] = rate;
    }
  }
  return out;
}

ToggleRates birth_death_rates(const BdState& state, const Matrix& z, const GWishartParams& gw_prior,
                              const GraphPrior& prior, const RateOptions& options) {
  Matrix scale = gw_prior.scale;
  if (z.rows() > 0) scale.noalias() += z.transpose() * z;
  return birth_death_rates(state, scale, gw_prior.df, prior, options);
}

std::size_t select_toggle(const std::vector<double>& rates, Rng& rng) {
  const double total = std::accumulate(rates.begin(), rates.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorCategory::domain, "birth-death rates must have a positive total");
  const double target = total * draw_uniform(rng);
  double running = 0.0;
  for (std::size_t e = 0; e < rates.size(); ++e) {
    running += rates[e];
    if (target < running) return e;
  }
  // Rounding in the running sum: fall back to the last positive rate.
  for (std::size_t e = rates.size(); e-- > 0;)
    if (rates[e] > 0.0) return e;
  return rates.size() - 1;
}

void redraw_column(Matrix& omega, const Graph& graph, std::size_t j, const Matrix& posterior_scale,
                   double posterior_df, Rng& rng) {
  const auto p = omega.rows();
  const auto jj = static_cast<Eigen::Index>(j);
  const Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCategory::non_positive_definite, "precision matrix is not positive definite");
  const Matrix sigma = llt.solve(Matrix::Identity(p, p));

  std::vector<Eigen::Index> nb;
  for (auto v : graph.neighbors(j)) nb.push_back(static_cast<Eigen::Index>(v));
  const auto m = static_cast<Eigen::Index>(nb.size());
  const double d_jj = posterior_scale(jj, jj);

  // K_jj = c + x' A x with A = (K_{-j,-j})^{-1} on the neighbours,
  // c ~ chi2(df) / D_jj and x ~ N(-A^{-1} D_{N,j} / D_jj, (D_jj A)^{-1}).
  Vector x = Vector::Zero(m);
  double quad = 0.0;
  if (m > 0) {
    Matrix a(m, m);
    Vector d(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      d[r] = posterior_scale(nb[r], jj);
      for (Eigen::Index c = 0; c < m; ++c)
        a(r, c) = sigma(nb[r], nb[c]) - sigma(nb[r], jj) * sigma(jj, nb[c]) / sigma(jj, jj);
    }
    const Eigen::LLT<Matrix> a_llt(a);
    Vector e(m);
    for (Eigen::Index r = 0; r < m; ++r) e[r] = draw_normal(rng);
    // a = L L', so L^{-T} e / sqrt(D_jj) has covariance (D_jj a)^{-1}.
    x = -a_llt.solve(d) / d_jj + a_llt.matrixU().solve(e) / std::sqrt(d_jj);
    quad = x.dot(a * x);
  }
  omega.col(jj).setZero();
  omega.row(jj).setZero();
  for (Eigen::Index r = 0; r < m; ++r) {
    omega(nb[r], jj) = x[r];
    omega(jj, nb[r]) = x[r];
  }
  omega(jj, jj) = draw_chi_squared(rng, posterior_df) / d_jj + quad;
}

BdState bd_step(const BdState& state, const Matrix& z, const GWishartParams& gw_prior, const GraphPrior& prior,
                Rng& rng, const RateOptions& options, const GWishartOptions& gw_options, BdStepInfo* info) {
  Matrix scale = gw_prior.scale;
  if (z.rows() > 0) scale.noalias() += z.transpose() * z;
  const ToggleRates rates = birth_death_rates(state, scale, gw_prior.df, prior, options);

  BdState next = state;
  const double refresh = options.refresh_rate;
  next.waiting_time = 1.0 / (rates.total() + refresh);
  if (refresh > 0.0 && draw_uniform(rng) * (rates.total() + refresh) < refresh) {
    next.omega = sample_gwishart_posterior(next.graph, z, gw_prior, rng, gw_options);
    if (info) *info = {0, false, rates.clamped, true};
    return next;
  }
  const std::size_t e = select_toggle(rates.rate, rng);
  const auto [i, j] = pair_nodes(state.graph.size(), e);
  next.graph.toggle(i, j);
  if (refresh > 0.0) {
    redraw_column(next.omega, next.graph, std::max(i, j), scale, gw_prior.df + static_cast<double>(z.rows()), rng);
  } else {
    next.omega = sample_gwishart_posterior(next.graph, z, gw_prior, rng, gw_options);
  }
  if (info) *info = {e, next.graph.has_edge(i, j), rates.clamped, false};
  return next;
}

}  // namespace rgm
