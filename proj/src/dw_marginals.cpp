#include "rgm/dw_marginals.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rgm/error.hpp"
#include "rgm/stats.hpp"

namespace rgm {

namespace {

void check_params(double q, double b) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCategory::domain, "discrete Weibull q must lie in (0,1)");
  if (!(b > 0.0) || !std::isfinite(b)) throw Error(ErrorCategory::domain, "discrete Weibull b must be positive");
}

// q^{(y+1)^b} on the log scale: (y+1)^b * log q.
double log_survival(std::int64_t y, double log_q, double b) {
  return std::pow(static_cast<double>(y + 1), b) * log_q;
}

const double kMaxLinearQ = std::log((1.0 - kCdfEpsilon) / kCdfEpsilon);

}  // namespace

void NodeCovariates::validate() const {
  if (design.cols() == 0) throw Error(ErrorCategory::validation, "node covariates need an intercept column");
  if (!names.empty() && names.size() != width())
    throw Error(ErrorCategory::validation, "covariate names do not match design width");
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    if (design(i, 0) != 1.0) throw Error(ErrorCategory::validation, "first covariate column must be all ones");
  }
  if (design.hasNaN()) throw Error(ErrorCategory::validation, "node covariates contain missing values");
}

NodeCovariates intercept_only(std::size_t samples) {
  return {Matrix::Ones(static_cast<Eigen::Index>(samples), 1), {"intercept"}};
}

double dw_cdf(std::int64_t y, double q, double b) {
  check_params(q, b);
  if (y < 0) return 0.0;
  return -std::expm1(log_survival(y, std::log(q), b));
}

double dw_pmf(std::int64_t y, double q, double b) {
  if (y < 0) throw Error(ErrorCategory::domain, "count must be non-negative");
  return dw_cdf(y, q, b) - dw_cdf(y - 1, q, b);
}

double dw_log_pmf(std::int64_t y, double q, double b) {
  check_params(q, b);
  if (y < 0) throw Error(ErrorCategory::domain, "count must be non-negative");
  const double log_q = std::log(q);
  const double upper = log_survival(y, log_q, b);  // log q^{(y+1)^b}
  if (y == 0) return std::log(-std::expm1(upper));
  const double lower = log_survival(y - 1, log_q, b);  // log q^{y^b}
  return lower + std::log(-std::expm1(upper - lower));
}

std::int64_t dw_quantile(double u, double q, double b) {
  check_params(q, b);
  if (!(u >= 0.0 && u < 1.0)) throw Error(ErrorCategory::domain, "quantile level must lie in [0,1)");
  const double ratio = std::log1p(-u) / std::log(q);
  double guess = std::ceil(std::pow(ratio, 1.0 / b) - 1.0);
  if (!(guess >= 0.0)) guess = 0.0;
  if (guess > 9e15) throw Error(ErrorCategory::domain, "discrete Weibull quantile overflows");
  auto y = static_cast<std::int64_t>(guess);
  while (y > 0 && dw_cdf(y - 1, q, b) >= u) --y;
  while (dw_cdf(y, q, b) < u) ++y;
  return y;
}

DwParams link_params(const DwRegression& reg, const Eigen::Ref<const RowVector>& x_row) {
  if (x_row.size() != reg.eta.size() || reg.eta.size() != reg.gamma.size())
    throw Error(ErrorCategory::domain, "covariate row length does not match coefficients");
  const double lin_q = std::clamp(x_row.dot(reg.eta), -kMaxLinearQ, kMaxLinearQ);
  const double lin_b = std::clamp(x_row.dot(reg.gamma), -kMaxLogShape, kMaxLogShape);
  return {logistic(lin_q), std::exp(lin_b)};
}

double dw_log_posterior(const Vector& eta, const Vector& gamma, std::span<const std::int64_t> counts,
                        const NodeCovariates& x) {
  if (counts.size() != x.samples()) throw Error(ErrorCategory::domain, "counts and covariates disagree in length");
  const Vector lin_q = x.design * eta;
  const Vector lin_b = x.design * gamma;
  double lp = -0.5 * (eta.squaredNorm() + gamma.squaredNorm());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double q = logistic(std::clamp(lin_q[r], -kMaxLinearQ, kMaxLinearQ));
    const double b = std::exp(std::clamp(lin_b[r], -kMaxLogShape, kMaxLogShape));
    lp += dw_log_pmf(counts[i], q, b);
  }
  return lp;
}

namespace {

// Log likelihood given cached linear predictors.
double log_likelihood(std::span<const std::int64_t> counts, const Vector& lin_q, const Vector& lin_b) {
  double ll = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double q = logistic(std::clamp(lin_q[r], -kMaxLinearQ, kMaxLinearQ));
    const double b = std::exp(std::clamp(lin_b[r], -kMaxLogShape, kMaxLogShape));
    ll += dw_log_pmf(counts[i], q, b);
  }
  return ll;
}

constexpr int kAdaptBatch = 50;
constexpr double kTargetLow = 0.23;
constexpr double kTargetHigh = 0.44;

}  // namespace

MarginalFit fit_marginal_mh(std::span<const std::int64_t> counts, const NodeCovariates& x, const MhConfig& cfg,
                            std::size_t otu_index) {
  if (counts.size() != x.samples()) throw Error(ErrorCategory::domain, "counts and covariates disagree in length");
  if (cfg.iterations < 1 || !(cfg.proposal_sd > 0.0) || !(cfg.burn_in_fraction > 0.0 && cfg.burn_in_fraction < 1.0))
    throw Error(ErrorCategory::config, "invalid Metropolis-Hastings configuration");
  x.validate();
  for (auto y : counts)
    if (y < 0) throw Error(ErrorCategory::domain, "counts must be non-negative");
  const std::set<std::int64_t> distinct(counts.begin(), counts.end());
  if (distinct.size() < 3)
    throw Error(ErrorCategory::degenerate_data,
                "OTU " + std::to_string(otu_index) + " has fewer than three distinct count values");

  const auto width = static_cast<Eigen::Index>(x.width());
  const Eigen::Index dim = 2 * width;

  // Start from the intercept-only geometric fit: F(0) = 1 - q, b = 1.
  const double zero_fraction =
      static_cast<double>(std::count(counts.begin(), counts.end(), std::int64_t{0})) / static_cast<double>(counts.size());
  Vector theta = Vector::Zero(dim);
  theta[0] = logit(std::clamp(1.0 - zero_fraction, 0.02, 0.98));

  auto eta_of = [&](const Vector& t) { return t.head(width); };
  auto gamma_of = [&](const Vector& t) { return t.tail(width); };

  Vector lin_q = x.design * eta_of(theta);
  Vector lin_b = x.design * gamma_of(theta);
  double ll = log_likelihood(counts, lin_q, lin_b);

  Rng rng = make_stream(cfg.seed, {stream::marginal, otu_index});
  const int burn_in = std::min(cfg.iterations - 1, static_cast<int>(std::floor(cfg.burn_in_fraction * cfg.iterations)));
  double sd = cfg.proposal_sd;

  MarginalFit fit;
  if (cfg.keep_trace) fit.trace.resize(cfg.iterations, dim);
  Vector sum = Vector::Zero(dim);
  Vector sum_sq = Vector::Zero(dim);
  long batch_accepted = 0, batch_proposed = 0;
  long kept_accepted = 0, kept_proposed = 0;
  int kept = 0;

  for (int it = 0; it < cfg.iterations; ++it) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      const double step = sd * draw_normal(rng);
      const bool is_eta = c < width;
      const Eigen::Index col = is_eta ? c : c - width;
      Vector& lin = is_eta ? lin_q : lin_b;
      const Vector previous = lin;
      lin.noalias() += step * x.design.col(col);
      const double ll_new = log_likelihood(counts, lin_q, lin_b);
      const double old_value = theta[c];
      const double new_value = old_value + step;
      const double log_ratio = ll_new - ll - 0.5 * (new_value * new_value - old_value * old_value);
      const bool accept = std::log(draw_uniform(rng)) < log_ratio;
      if (accept) {
        theta[c] = new_value;
        ll = ll_new;
      } else {
        lin = previous;
      }
      if (it < burn_in) {
        ++batch_proposed;
        batch_accepted += accept;
      } else {
        ++kept_proposed;
        kept_accepted += accept;
      }
    }
    if (it < burn_in && (it + 1) % kAdaptBatch == 0) {
      const double rate = static_cast<double>(batch_accepted) / static_cast<double>(batch_proposed);
      if (rate < kTargetLow) sd *= 0.8;
      else if (rate > kTargetHigh) sd *= 1.25;
      batch_accepted = batch_proposed = 0;
    }
    if (cfg.keep_trace) fit.trace.row(it) = theta.transpose();
    if (it >= burn_in) {
      sum += theta;
      sum_sq += theta.cwiseAbs2();
      ++kept;
    }
  }

  const Vector mean = sum / kept;
  const Vector var = (sum_sq / kept - mean.cwiseAbs2()).cwiseMax(0.0);
  fit.posterior_mean = {otu_index, mean.head(width), mean.tail(width)};
  fit.eta_sd = var.head(width).cwiseSqrt();
  fit.gamma_sd = var.tail(width).cwiseSqrt();
  fit.acceptance_rate = kept_proposed > 0 ? static_cast<double>(kept_accepted) / static_cast<double>(kept_proposed) : 0.0;
  fit.proposal_sd = sd;
  if (fit.acceptance_rate < 0.1 || fit.acceptance_rate > 0.6) {
    fit.warnings.push_back("OTU " + std::to_string(otu_index) + ": acceptance rate " +
                           std::to_string(fit.acceptance_rate) + " outside [0.1, 0.6]; chain may not have converged");
  }
  return fit;
}

LatentInterval latent_interval(std::int64_t y, DwParams params) {
  if (y < 0) throw Error(ErrorCategory::domain, "count must be non-negative");
  check_params(params.q, params.b);
  const double q = std::clamp(params.q, kCdfEpsilon, 1.0 - kCdfEpsilon);
  auto endpoint = [](double f) {
    if (f <= 0.0) return -kInf;
    if (f >= 1.0 - kCdfEpsilon) return kInf;
    return normal_quantile(std::max(f, kCdfEpsilon));
  };
  LatentInterval out{endpoint(dw_cdf(y - 1, q, params.b)), endpoint(dw_cdf(y, q, params.b))};
  if (out.lower == kInf) out.lower = normal_quantile(1.0 - kCdfEpsilon);
  return out;
}

LatentInterval latent_interval(std::int64_t y, const DwRegression& reg, const Eigen::Ref<const RowVector>& x_row) {
  return latent_interval(y, link_params(reg, x_row));
}

Vector gmpr_size_factors(const Matrix& counts) {
  const Eigen::Index n = counts.rows();
  Vector log_factor(n);
  std::vector<double> ratios;
  for (Eigen::Index i = 0; i < n; ++i) {
    double log_sum = 0.0;
    int partners = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      ratios.clear();
      for (Eigen::Index t = 0; t < counts.cols(); ++t) {
        if (counts(i, t) > 0 && counts(j, t) > 0) ratios.push_back(counts(i, t) / counts(j, t));
      }
      if (ratios.empty()) continue;
      std::sort(ratios.begin(), ratios.end());
      const std::size_t m = ratios.size();
      const double median = m % 2 ? ratios[m / 2] : 0.5 * (ratios[m / 2 - 1] + ratios[m / 2]);
      log_sum += std::log(median);
      ++partners;
    }
    if (partners == 0)
      throw Error(ErrorCategory::isolation,
                  "sample " + std::to_string(i) + " shares no positive OTU with any other sample");
    // The self ratio (1) counts as one of the factors.
    log_factor[i] = log_sum / (partners + 1);
  }
  return log_factor.array().exp();
}

}  // namespace rgm
