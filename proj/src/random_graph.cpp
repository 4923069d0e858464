#include "rgm/random_graph.hpp"

#include <cmath>

#include "rgm/error.hpp"

namespace rgm {

void RandomGraphParams::validate() const {
  if (c.rows() != alpha.size() || c.cols() != kLatentDim)
    throw Error(ErrorCategory::domain, "latent locations must be environments x 2");
  if (!alpha.allFinite() || !beta.allFinite() || !c.allFinite())
    throw Error(ErrorCategory::domain, "random graph parameters must be finite");
}

RandomGraphParams initial_params(std::size_t environments, std::size_t covariates, double initial_sparsity) {
  if (!(initial_sparsity > 0.0 && initial_sparsity < 1.0))
    throw Error(ErrorCategory::domain, "initial sparsity must lie in (0,1)");
  const auto b = static_cast<Eigen::Index>(environments);
  return {Vector::Constant(b, normal_quantile(initial_sparsity)), Vector::Zero(static_cast<Eigen::Index>(covariates)),
          Matrix::Zero(b, kLatentDim)};
}

double EdgeCovariates::dot(std::size_t pair, const Vector& beta) const {
  if (values.cols() == 0) return 0.0;
  return values.row(static_cast<Eigen::Index>(pair)).dot(beta);
}

EdgeCovariates EdgeCovariates::none(std::size_t p) {
  return {p, Matrix(static_cast<Eigen::Index>(num_pairs(p)), 0), {}};
}

Eigen::Vector2d cross_environment_sum(std::size_t k, std::size_t i, std::size_t j, const GraphEnsemble& ensemble,
                                      const RandomGraphParams& theta) {
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  for (std::size_t other = 0; other < ensemble.size(); ++other) {
    if (other != k && ensemble[other].has_edge(i, j)) s += theta.c.row(static_cast<Eigen::Index>(other)).transpose();
  }
  return s;
}

double edge_linear_predictor(std::size_t k, std::size_t i, std::size_t j, const GraphEnsemble& ensemble,
                             const RandomGraphParams& theta, const EdgeCovariates& w) {
  if (k >= ensemble.size() || k >= theta.environments())
    throw Error(ErrorCategory::domain, "environment index out of range");
  const std::size_t p = ensemble[k].size();
  const std::size_t e = pair_index(p, i, j);
  const Eigen::Vector2d s = cross_environment_sum(k, i, j, ensemble, theta);
  return theta.alpha[static_cast<Eigen::Index>(k)] + w.dot(e, theta.beta) +
         theta.c.row(static_cast<Eigen::Index>(k)).dot(s);
}

double edge_probability(std::size_t k, std::size_t i, std::size_t j, const GraphEnsemble& ensemble,
                        const RandomGraphParams& theta, const EdgeCovariates& w) {
  return normal_cdf(edge_linear_predictor(k, i, j, ensemble, theta, w));
}

namespace {

// Edge indicators as an environments x pairs matrix plus the per-pair sum of
// latent locations over every environment containing that pair.
struct Indicators {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic> y;  // B x P, 0/1
  Matrix total;                                            // P x 2

  Indicators(const GraphEnsemble& ensemble, const Matrix& c) {
    const std::size_t b = ensemble.size();
    const std::size_t p = ensemble.front().size();
    const std::size_t pairs = num_pairs(p);
    y.setZero(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(pairs));
    for (std::size_t k = 0; k < b; ++k) {
      std::size_t e = 0;
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j, ++e)
          if (ensemble[k].has_edge(i, j)) y(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(e)) = 1.0;
    }
    total = y.transpose() * c;
  }

  // s_{k,e}: the cross-environment sum excluding k itself.
  Eigen::RowVector2d others(Eigen::Index k, Eigen::Index e, const Matrix& c) const {
    return total.row(e) - y(k, e) * c.row(k);
  }
};

void check_dimensions(const GraphEnsemble& ensemble, const RandomGraphParams& theta, const EdgeCovariates& w) {
  if (ensemble.empty() || ensemble.size() != theta.environments())
    throw Error(ErrorCategory::domain, "ensemble size does not match Theta");
  const std::size_t p = ensemble.front().size();
  for (const auto& g : ensemble)
    if (g.size() != p) throw Error(ErrorCategory::domain, "graphs in an ensemble must share the node set");
  if (w.dim() != theta.covariates()) throw Error(ErrorCategory::domain, "edge covariate width does not match beta");
  if (w.dim() > 0 && static_cast<std::size_t>(w.values.rows()) != num_pairs(p))
    throw Error(ErrorCategory::domain, "edge covariates need one row per node pair");
  theta.validate();
}

Vector draw_gaussian(const Matrix& precision, const Vector& linear, Rng& rng) {
  // N(precision^{-1} linear, precision^{-1})
  const Eigen::LLT<Matrix> llt(precision);
  const Vector mean = llt.solve(linear);
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = draw_normal(rng);
  // L L^T = precision, so L^{-T} z has covariance precision^{-1}.
  return mean + llt.matrixU().solve(z);
}

}  // namespace

Matrix augment_edge_utilities(const GraphEnsemble& ensemble, const RandomGraphParams& theta, const EdgeCovariates& w,
                              Rng& rng) {
  check_dimensions(ensemble, theta, w);
  const Indicators ind(ensemble, theta.c);
  const Eigen::Index b = ind.y.rows();
  const Eigen::Index pairs = ind.y.cols();
  Matrix u(b, pairs);
  for (Eigen::Index k = 0; k < b; ++k) {
    for (Eigen::Index e = 0; e < pairs; ++e) {
      const double eta = theta.alpha[k] + w.dot(static_cast<std::size_t>(e), theta.beta) +
                         theta.c.row(k).dot(ind.others(k, e, theta.c));
      u(k, e) = ind.y(k, e) > 0 ? draw_truncated_normal(rng, eta, 1.0, 0.0, kInf)
                                : draw_truncated_normal(rng, eta, 1.0, -kInf, 0.0);
    }
  }
  return u;
}

void draw_alpha(const Matrix& utilities, const GraphEnsemble& ensemble, RandomGraphParams& theta,
                const EdgeCovariates& w, const ThetaPrior& prior, Rng& rng) {
  check_dimensions(ensemble, theta, w);
  const Indicators ind(ensemble, theta.c);
  const Eigen::Index pairs = ind.y.cols();
  for (Eigen::Index k = 0; k < ind.y.rows(); ++k) {
    double resid = 0.0;
    for (Eigen::Index e = 0; e < pairs; ++e) {
      resid += utilities(k, e) - w.dot(static_cast<std::size_t>(e), theta.beta) -
               theta.c.row(k).dot(ind.others(k, e, theta.c));
    }
    const double var = 1.0 / (static_cast<double>(pairs) + 1.0 / prior.variance);
    theta.alpha[k] = var * resid + std::sqrt(var) * draw_normal(rng);
  }
}

void draw_beta(const Matrix& utilities, const GraphEnsemble& ensemble, RandomGraphParams& theta,
               const EdgeCovariates& w, const ThetaPrior& prior, Rng& rng) {
  check_dimensions(ensemble, theta, w);
  const Eigen::Index d = static_cast<Eigen::Index>(w.dim());
  if (d == 0) return;
  const Indicators ind(ensemble, theta.c);
  const Eigen::Index b = ind.y.rows();
  const Eigen::Index pairs = ind.y.cols();
  Matrix precision = static_cast<double>(b) * (w.values.transpose() * w.values);
  precision.diagonal().array() += 1.0 / prior.variance;
  Vector linear = Vector::Zero(d);
  for (Eigen::Index k = 0; k < b; ++k) {
    for (Eigen::Index e = 0; e < pairs; ++e) {
      const double r = utilities(k, e) - theta.alpha[k] - theta.c.row(k).dot(ind.others(k, e, theta.c));
      linear += r * w.values.row(e).transpose();
    }
  }
  theta.beta = draw_gaussian(precision, linear, rng);
}

void draw_location(std::size_t k, const Matrix& utilities, const GraphEnsemble& ensemble, RandomGraphParams& theta,
                   const EdgeCovariates& w, const ThetaPrior& prior, Rng& rng) {
  check_dimensions(ensemble, theta, w);
  const Indicators ind(ensemble, theta.c);
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::Matrix2d precision = Eigen::Matrix2d::Identity() / prior.variance;
  Eigen::Vector2d linear = Eigen::Vector2d::Zero();
  for (Eigen::Index e = 0; e < ind.y.cols(); ++e) {
    const double wb = w.dot(static_cast<std::size_t>(e), theta.beta);
    // Own row: c_k . s_{k,e}.
    const Eigen::Vector2d s = ind.others(kk, e, theta.c).transpose();
    if (!s.isZero(0.0)) {
      const double r = utilities(kk, e) - theta.alpha[kk] - wb;
      precision += s * s.transpose();
      linear += r * s;
    }
    // Rows of the other environments: c_k enters through c_{k'} . c_k when
    // the edge is in G^(k).
    if (ind.y(kk, e) == 0.0) continue;
    for (Eigen::Index o = 0; o < ind.y.rows(); ++o) {
      if (o == kk) continue;
      const Eigen::Vector2d x = theta.c.row(o).transpose();
      if (x.isZero(0.0)) continue;
      const Eigen::RowVector2d rest = ind.others(o, e, theta.c) - theta.c.row(kk);
      const double r = utilities(o, e) - theta.alpha[o] - wb - theta.c.row(o).dot(rest);
      precision += x * x.transpose();
      linear += r * x;
    }
  }
  // With no informative rows this is exactly the prior draw.
  theta.c.row(kk) = draw_gaussian(precision, linear, rng).transpose();
}

RandomGraphParams gibbs_update_theta(const GraphEnsemble& ensemble, const RandomGraphParams& theta,
                                     const EdgeCovariates& w, Rng& rng, const ThetaPrior& prior) {
  RandomGraphParams next = theta;
  const Matrix u = augment_edge_utilities(ensemble, next, w, rng);
  draw_alpha(u, ensemble, next, w, prior, rng);
  draw_beta(u, ensemble, next, w, prior, rng);
  for (std::size_t k = 0; k < next.environments(); ++k) draw_location(k, u, ensemble, next, w, prior, rng);
  return next;
}

GraphEnsemble sample_graph_ensemble(const RandomGraphParams& theta, const EdgeCovariates& w, int sweeps, Rng& rng) {
  if (sweeps < 1) throw Error(ErrorCategory::domain, "ensemble sampling needs at least one sweep");
  const std::size_t p = w.p;
  GraphEnsemble ensemble = empty_ensemble(theta.environments(), p);
  check_dimensions(ensemble, theta, w);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t k = 0; k < ensemble.size(); ++k) {
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
          const double prob = edge_probability(k, i, j, ensemble, theta, w);
          ensemble[k].set_edge(i, j, draw_uniform(rng) < prob);
        }
      }
    }
  }
  return ensemble;
}

double ErdosRenyiPrior::log_odds() const { return std::log(sparsity) - std::log1p(-sparsity); }

ErdosRenyiPrior er_prior_probability(double sparsity) {
  if (!(sparsity > 0.0 && sparsity < 1.0)) throw Error(ErrorCategory::domain, "sparsity must lie in (0,1)");
  return {sparsity};
}

}  // namespace rgm
