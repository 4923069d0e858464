#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rgm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// CDF values are kept inside [kCdfEpsilon, 1 - kCdfEpsilon] before the probit
// map, and the logit link is clamped so q stays in the same band.
inline constexpr double kCdfEpsilon = 1e-12;
// log(b) is clamped to this magnitude.
inline constexpr double kMaxLogShape = 30.0;

// Design matrix for the marginal regressions. Column 0 is the intercept.
struct NodeCovariates {
  Matrix design;
  std::vector<std::string> names;

  std::size_t samples() const { return static_cast<std::size_t>(design.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(design.cols()); }
  // Throws a validation error unless column 0 is all ones and nothing is NaN.
  void validate() const;
};

NodeCovariates intercept_only(std::size_t samples);

// Regression coefficients of one OTU: logit(q) = x.eta, log(b) = x.gamma.
struct DwRegression {
  std::size_t otu_index = 0;
  Vector eta;
  Vector gamma;
};

struct DwParams {
  double q;
  double b;
};

struct LatentInterval {
  double lower;
  double upper;
};

struct MhConfig {
  int iterations = 50000;
  double proposal_sd = 0.1;
  double burn_in_fraction = 0.75;
  std::uint64_t seed = 1;
  bool keep_trace = true;
};

struct MarginalFit {
  DwRegression posterior_mean;
  Vector eta_sd;
  Vector gamma_sd;
  // One row per iteration, columns (eta..., gamma...). Empty unless requested.
  Matrix trace;
  double acceptance_rate = 0.0;
  double proposal_sd = 0.0;
  std::vector<std::string> warnings;
};

double dw_cdf(std::int64_t y, double q, double b);
double dw_pmf(std::int64_t y, double q, double b);
// log pmf evaluated without cancellation; used by the likelihood.
double dw_log_pmf(std::int64_t y, double q, double b);
// Smallest y with dw_cdf(y) >= u.
std::int64_t dw_quantile(double u, double q, double b);

DwParams link_params(const DwRegression& reg, const Eigen::Ref<const RowVector>& x_row);

// Log posterior of (eta, gamma) under independent N(0,1) priors.
double dw_log_posterior(const Vector& eta, const Vector& gamma, std::span<const std::int64_t> counts,
                        const NodeCovariates& x);

MarginalFit fit_marginal_mh(std::span<const std::int64_t> counts, const NodeCovariates& x, const MhConfig& cfg,
                            std::size_t otu_index = 0);

LatentInterval latent_interval(std::int64_t y, DwParams params);
LatentInterval latent_interval(std::int64_t y, const DwRegression& reg, const Eigen::Ref<const RowVector>& x_row);

// GMPR library-size factors, one per sample (row of `counts`).
Vector gmpr_size_factors(const Matrix& counts);

}  // namespace rgm
