#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "rgm/dw_marginals.hpp"
#include "rgm/error.hpp"
#include "rgm/stats.hpp"

using namespace rgm;

namespace {

// Inverse-CDF draw written out directly rather than through dw_quantile.
std::int64_t draw_dw(Rng& rng, double q, double b) {
  const double u = draw_uniform(rng);
  const double t = std::pow(std::log1p(-u) / std::log(q), 1.0 / b) - 1.0;
  return static_cast<std::int64_t>(std::max(0.0, std::ceil(t - 1e-12)));
}

ErrorCategory category_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("no error thrown");
  return ErrorCategory::io;
}

}  // namespace

TEST_CASE("dw_cdf reference values") {
  CHECK(dw_cdf(0, 0.5, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(dw_cdf(-1, 0.3, 2.0) == 0.0);
  CHECK(dw_cdf(2, 0.8, 0.5) == doctest::Approx(oracle::dw_cdf(2, 0.8, 0.5)).epsilon(1e-14));
  CHECK(dw_cdf(2, 0.8, 0.5) == doctest::Approx(0.3206).epsilon(1e-4));
  for (double q : {0.05, 0.5, 0.95})
    for (double b : {0.3, 1.0, 3.0})
      for (long y : {0L, 1L, 7L, 40L}) CHECK(dw_cdf(y, q, b) == doctest::Approx(oracle::dw_cdf(y, q, b)).epsilon(1e-12));
}

TEST_CASE("dw_cdf rejects parameters outside the domain") {
  CHECK(category_of([] { dw_cdf(1, 0.0, 1.0); }) == ErrorCategory::domain);
  CHECK(category_of([] { dw_cdf(1, 1.0, 1.0); }) == ErrorCategory::domain);
  CHECK(category_of([] { dw_cdf(1, 0.5, 0.0); }) == ErrorCategory::domain);
  CHECK(category_of([] { dw_pmf(-1, 0.5, 1.0); }) == ErrorCategory::domain);
}

TEST_CASE("dw_cdf is nondecreasing on a parameter grid") {
  for (int qi = 1; qi <= 9; ++qi)
    for (double b : {0.3, 1.0, 3.0}) {
      const double q = qi / 10.0;
      double prev = 0.0;
      for (long y = 0; y < 200; ++y) {
        const double f = dw_cdf(y, q, b);
        CHECK(f >= prev);
        prev = f;
      }
    }
}

TEST_CASE("dw_pmf reference values and normalisation") {
  CHECK(dw_pmf(0, 0.5, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(dw_pmf(3, 0.8, 0.5) == doctest::Approx(oracle::dw_pmf(3, 0.8, 0.5)).epsilon(1e-12));
  CHECK(dw_pmf(3, 0.8, 0.5) == doctest::Approx(0.8 * 0.8 * (std::pow(0.8, std::sqrt(3.0) - 2.0) - 1.0)));

  // Tail beyond 10000 is q^{10001^b}, far below the tolerance.
  double total = 0.0;
  for (long y = 0; y <= 10000; ++y) total += dw_pmf(y, 0.9, 0.7);
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("dw_pmf is the exact CDF difference") {
  for (double q : {0.2, 0.7})
    for (double b : {0.5, 2.0})
      for (long y = 0; y < 30; ++y) CHECK(dw_pmf(y, q, b) == dw_cdf(y, q, b) - dw_cdf(y - 1, q, b));
}

TEST_CASE("dw_log_pmf agrees with the pmf and survives deep tails") {
  for (long y : {0L, 1L, 5L, 25L}) CHECK(dw_log_pmf(y, 0.6, 0.8) == doctest::Approx(std::log(oracle::dw_pmf(y, 0.6, 0.8))));
  const double deep = dw_log_pmf(500, 0.5, 1.0);
  CHECK(std::isfinite(deep));
  CHECK(deep == doctest::Approx(500 * std::log(0.5) + std::log(0.5)));
}

TEST_CASE("dw_quantile inverts the CDF") {
  for (double u : {0.0, 0.1, 0.5, 0.75, 0.999}) {
    const auto y = dw_quantile(u, 0.7, 0.6);
    CHECK(dw_cdf(y, 0.7, 0.6) >= u);
    if (u > 0.0) CHECK(dw_cdf(y - 1, 0.7, 0.6) < u);
  }
}

TEST_CASE("link_params") {
  DwRegression reg{0, Vector::Zero(3), Vector::Zero(3)};
  RowVector x(3);
  x << 1.0, 4.2, -1.0;
  auto par = link_params(reg, x);
  CHECK(par.q == 0.5);
  CHECK(par.b == 1.0);

  RowVector unit = RowVector::Zero(3);
  unit[0] = 1.0;
  reg.eta[0] = 0.847;
  par = link_params(reg, unit);
  CHECK(par.q == doctest::Approx(oracle::logistic(0.847)).epsilon(1e-14));
  CHECK(par.q == doctest::Approx(0.7).epsilon(1e-3));

  reg.eta.setZero();
  reg.gamma[0] = std::log(2.0);
  par = link_params(reg, unit);
  CHECK(par.q == 0.5);
  CHECK(par.b == doctest::Approx(2.0).epsilon(1e-15));

  // Extreme predictors are clamped so q stays inside (eps, 1 - eps).
  reg.eta[0] = 1e6;
  par = link_params(reg, unit);
  CHECK(par.q < 1.0);
  CHECK(par.q >= 1.0 - 2 * kCdfEpsilon);
  reg.eta[0] = -1e6;
  CHECK(link_params(reg, unit).q >= kCdfEpsilon * 0.5);

  CHECK(category_of([&] { link_params(reg, RowVector::Ones(2)); }) == ErrorCategory::domain);
}

TEST_CASE("latent_interval reference values") {
  auto a = latent_interval(0, DwParams{0.5, 1.0});
  CHECK(a.lower == -kInf);
  CHECK(std::abs(a.upper) < 1e-15);
  auto b = latent_interval(1, DwParams{0.5, 1.0});
  CHECK(std::abs(b.lower) < 1e-15);
  CHECK(b.upper == doctest::Approx(oracle::normal_quantile(0.75)).epsilon(1e-12));
  CHECK(b.upper == doctest::Approx(0.6745).epsilon(1e-4));
}

TEST_CASE("latent intervals tile the line") {
  for (DwParams par : {DwParams{0.5, 1.0}, DwParams{0.9, 0.7}, DwParams{0.2, 2.5}}) {
    double prev_upper = -kInf;
    for (long y = 0; y <= 50; ++y) {
      const auto iv = latent_interval(y, par);
      CHECK(iv.lower == prev_upper);
      CHECK(iv.lower < iv.upper);
      prev_upper = iv.upper;
      if (iv.upper == kInf) break;
    }
  }
}

TEST_CASE("log posterior is invariant to sample order") {
  Rng rng(11);
  const std::size_t n = 60;
  NodeCovariates x = intercept_only(n);
  x.design.conservativeResize(Eigen::NoChange, 2);
  x.names.push_back("x1");
  std::vector<std::int64_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x.design(static_cast<Eigen::Index>(i), 1) = draw_normal(rng);
    y[i] = draw_dw(rng, 0.6, 0.9);
  }
  Vector eta(2), gamma(2);
  eta << 0.3, -0.2;
  gamma << -0.1, 0.4;
  const double base = dw_log_posterior(eta, gamma, y, x);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[3], perm[17]);
  NodeCovariates xp = x;
  std::vector<std::int64_t> yp(n);
  for (std::size_t i = 0; i < n; ++i) {
    xp.design.row(static_cast<Eigen::Index>(i)) = x.design.row(static_cast<Eigen::Index>(perm[i]));
    yp[i] = y[perm[i]];
  }
  CHECK(dw_log_posterior(eta, gamma, yp, xp) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("fit_marginal_mh recovers an intercept-only geometric law") {
  Rng rng(2024);
  const std::size_t n = 2000;
  std::vector<std::int64_t> y(n);
  for (auto& v : y) v = draw_dw(rng, 0.5, 1.0);
  MhConfig cfg;
  cfg.iterations = 6000;
  cfg.seed = 3;
  const auto fit = fit_marginal_mh(y, intercept_only(n), cfg);
  const double q = logistic(fit.posterior_mean.eta[0]);
  CHECK(std::abs(q - 0.5) < 0.05);
  CHECK(std::abs(std::exp(fit.posterior_mean.gamma[0]) - 1.0) < 0.15);
  CHECK(fit.trace.rows() == cfg.iterations);
  CHECK(fit.eta_sd[0] > 0.0);
}

TEST_CASE("fit_marginal_mh recovers a binary covariate effect") {
  Rng rng(77);
  const std::size_t n = 2000;
  NodeCovariates x = intercept_only(n);
  x.design.conservativeResize(Eigen::NoChange, 2);
  x.names.push_back("group");
  std::vector<std::int64_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = i % 2 == 0 ? 1.0 : 0.0;
    x.design(static_cast<Eigen::Index>(i), 1) = g;
    y[i] = draw_dw(rng, oracle::logistic(0.2 + 1.0 * g), 1.0);
  }
  MhConfig cfg;
  cfg.iterations = 8000;
  cfg.seed = 5;
  cfg.keep_trace = false;
  const auto fit = fit_marginal_mh(y, x, cfg);
  CHECK(std::abs(fit.posterior_mean.eta[1] - 1.0) < 0.25);
  CHECK(fit.trace.size() == 0);
}

TEST_CASE("fit_marginal_mh is seeded") {
  Rng rng(1);
  std::vector<std::int64_t> y(200);
  for (auto& v : y) v = draw_dw(rng, 0.6, 1.2);
  MhConfig cfg;
  cfg.iterations = 500;
  const auto a = fit_marginal_mh(y, intercept_only(y.size()), cfg);
  const auto b = fit_marginal_mh(y, intercept_only(y.size()), cfg);
  CHECK(a.posterior_mean.eta == b.posterior_mean.eta);
  CHECK(a.posterior_mean.gamma == b.posterior_mean.gamma);
}

TEST_CASE("fit_marginal_mh rejects degenerate counts") {
  const std::vector<std::int64_t> flat(50, 4);
  CHECK(category_of([&] { fit_marginal_mh(flat, intercept_only(50), MhConfig{}); }) == ErrorCategory::degenerate_data);
  std::vector<std::int64_t> two(50, 0);
  two[3] = 1;
  CHECK(category_of([&] { fit_marginal_mh(two, intercept_only(50), MhConfig{}); }) == ErrorCategory::degenerate_data);
}

TEST_CASE("NodeCovariates validation") {
  NodeCovariates x = intercept_only(4);
  CHECK_NOTHROW(x.validate());
  x.design(2, 0) = 0.5;
  CHECK(category_of([&] { x.validate(); }) == ErrorCategory::validation);
  x = intercept_only(4);
  x.design.conservativeResize(Eigen::NoChange, 2);
  x.names.push_back("v");
  x.design.col(1).setConstant(std::nan(""));
  CHECK(category_of([&] { x.validate(); }) == ErrorCategory::validation);
}

namespace {

// Direct GMPR: geometric mean over all samples (self ratio 1 included) of
// the median ratio over co-observed OTUs.
Vector gmpr_oracle(const Matrix& c) {
  const auto n = c.rows();
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double log_sum = 0.0;
    int count = 1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      std::vector<double> r;
      for (Eigen::Index t = 0; t < c.cols(); ++t)
        if (c(i, t) > 0 && c(j, t) > 0) r.push_back(c(i, t) / c(j, t));
      if (r.empty()) continue;
      std::sort(r.begin(), r.end());
      const double med = r.size() % 2 ? r[r.size() / 2] : 0.5 * (r[r.size() / 2 - 1] + r[r.size() / 2]);
      log_sum += std::log(med);
      ++count;
    }
    out[i] = std::exp(log_sum / count);
  }
  return out;
}

}  // namespace

TEST_CASE("gmpr size factors") {
  Matrix same(2, 4);
  same << 3, 0, 5, 9, 3, 0, 5, 9;
  const Vector f1 = gmpr_size_factors(same);
  CHECK(f1[0] == doctest::Approx(1.0));
  CHECK(f1[1] == doctest::Approx(1.0));

  Matrix doubled(2, 4);
  doubled << 3, 1, 5, 9, 6, 2, 10, 18;
  const Vector f2 = gmpr_size_factors(doubled);
  CHECK(f2[1] / f2[0] == doctest::Approx(2.0));

  Matrix three(3, 5);
  three << 1, 4, 0, 2, 7, 2, 8, 0, 4, 14, 4, 16, 0, 8, 28;
  const Vector f3 = gmpr_size_factors(three);
  CHECK(f3[1] / f3[0] == doctest::Approx(2.0));
  CHECK(f3[2] / f3[0] == doctest::Approx(4.0));

  Rng rng(8);
  Matrix sparse(7, 12);
  for (Eigen::Index i = 0; i < sparse.rows(); ++i)
    for (Eigen::Index t = 0; t < sparse.cols(); ++t)
      sparse(i, t) = draw_uniform(rng) < 0.3 ? 0.0 : std::floor(1 + 50 * draw_uniform(rng));
  const Vector got = gmpr_size_factors(sparse);
  const Vector want = gmpr_oracle(sparse);
  for (Eigen::Index i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

  // Scaling one sample scales its factor relative to every other.
  Matrix scaled = sparse;
  scaled.row(2) *= 3.0;
  const Vector g = gmpr_size_factors(scaled);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (i != 2) CHECK((g[2] / g[i]) / (got[2] / got[i]) == doctest::Approx(3.0));
}

TEST_CASE("gmpr flags isolated samples") {
  Matrix iso(3, 4);
  iso << 1, 2, 0, 0, 3, 1, 0, 0, 0, 0, 5, 6;
  CHECK(category_of([&] { gmpr_size_factors(iso); }) == ErrorCategory::isolation);
}
