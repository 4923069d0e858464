#include "rgm/sim.hpp"

#include <algorithm>
#include <cmath>

#include <boost/random/uniform_real_distribution.hpp>

#include "rgm/error.hpp"
#include "rgm/gwishart.hpp"
#include "rgm/parallel.hpp"

namespace rgm {

void SimConfig::validate() const {
  if (n < 1 || p < 2 || environments < 1) throw Error(ErrorCategory::config, "simulation needs n >= 1, p >= 2, B >= 1");
  if (!(alpha_sd >= 0.0) || !(c_sd >= 0.0)) throw Error(ErrorCategory::config, "standard deviations must be non-negative");
  if (!(w_low <= w_high)) throw Error(ErrorCategory::config, "w_low must not exceed w_high");
  if (ensemble_sweeps < 1) throw Error(ErrorCategory::config, "ensemble_sweeps must be at least 1");
  if (!(gwishart_df >= 3.0)) throw Error(ErrorCategory::config, "gwishart_df must be at least 3");
  if (c && (c->rows() != static_cast<Eigen::Index>(environments) || c->cols() != kLatentDim))
    throw Error(ErrorCategory::config, "fixed latent locations must be environments x 2");
}

SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  const auto b = static_cast<Eigen::Index>(cfg.environments);
  const auto pp = static_cast<Eigen::Index>(cfg.p);

  SimResult out;
  SimTruth& truth = out.truth;
  {
    Rng rng = make_stream(cfg.seed, {stream::simulation, 0});
    truth.theta.alpha.resize(b);
    for (Eigen::Index k = 0; k < b; ++k) truth.theta.alpha[k] = cfg.alpha_mean + cfg.alpha_sd * draw_normal(rng);
    truth.theta.beta = Vector::Constant(1, cfg.beta);
    truth.theta.c.resize(b, kLatentDim);
    for (Eigen::Index k = 0; k < b; ++k)
      for (Eigen::Index d = 0; d < kLatentDim; ++d) truth.theta.c(k, d) = cfg.c_sd * draw_normal(rng);
    if (cfg.c) truth.theta.c = *cfg.c;
  }
  {
    Rng rng = make_stream(cfg.seed, {stream::simulation, 1});
    boost::random::uniform_real_distribution<double> unif(cfg.w_low, cfg.w_high);
    truth.w.p = cfg.p;
    truth.w.names = {"w"};
    truth.w.values.resize(static_cast<Eigen::Index>(num_pairs(cfg.p)), 1);
    for (Eigen::Index e = 0; e < truth.w.values.rows(); ++e) truth.w.values(e, 0) = cfg.w_low == cfg.w_high ? cfg.w_low : unif(rng);
  }
  {
    Rng rng = make_stream(cfg.seed, {stream::simulation, 2});
    truth.graphs = sample_graph_ensemble(truth.theta, truth.w, cfg.ensemble_sweeps, rng);
  }

  const GWishartParams prior = GWishartParams::standard(cfg.p, cfg.gwishart_df);
  truth.precisions.resize(cfg.environments);
  out.observations.resize(cfg.environments);
  parallel_for(cfg.environments, 1, [&](std::size_t k) {
    Rng rng = make_stream(cfg.seed, {stream::simulation, 3, k});
    truth.precisions[k] = sample_gwishart(truth.graphs[k], prior, rng);
    // Rows are L^{-T} e with L L^T = Omega, so their covariance is Omega^{-1}.
    const Eigen::LLT<Matrix> llt(truth.precisions[k]);
    Matrix e(pp, static_cast<Eigen::Index>(cfg.n));
    for (Eigen::Index c = 0; c < e.cols(); ++c)
      for (Eigen::Index r = 0; r < pp; ++r) e(r, c) = draw_normal(rng);
    out.observations[k] = llt.matrixU().solve(e).transpose();
  });
  return out;
}

CountSimResult simulate_counts(const SimConfig& cfg, const std::vector<DwRegression>& marginals) {
  if (marginals.size() != cfg.p) throw Error(ErrorCategory::config, "one marginal regression per node is required");
  CountSimResult out;
  out.gaussian = simulate(cfg);
  const RowVector x = RowVector::Ones(1);
  for (std::size_t k = 0; k < cfg.environments; ++k) {
    const Matrix& g = out.gaussian.observations[k];
    const Vector sd = out.gaussian.truth.precisions[k].inverse().diagonal().cwiseSqrt();
    Matrix latent(g.rows(), g.cols());
    Matrix counts(g.rows(), g.cols());
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      const DwParams par = link_params(marginals[static_cast<std::size_t>(j)], x);
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        latent(i, j) = g(i, j) / sd[j];
        const double u = std::min(normal_cdf(latent(i, j)), std::nextafter(1.0, 0.0));
        counts(i, j) = static_cast<double>(dw_quantile(u, par.q, par.b));
      }
    }
    out.latent.push_back(std::move(latent));
    out.counts.push_back(std::move(counts));
  }
  return out;
}

}  // namespace rgm
