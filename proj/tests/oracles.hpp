#pragma once

// Independent reference computations for the unit tests. Nothing here calls
// into the library except plain data types.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

namespace oracle {

// Extended precision is enough for the tolerances used in the tests.
using Real = long double;

inline double normal_cdf(double x) {
  return static_cast<double>(boost::math::cdf(boost::math::normal_distribution<Real>(), Real(x)));
}

inline double normal_quantile(double p) {
  return static_cast<double>(boost::math::quantile(boost::math::normal_distribution<Real>(), Real(p)));
}

inline double logistic(double x) { return static_cast<double>(1 / (1 + std::exp(-Real(x)))); }

// 1 - q^{(y+1)^b} in extended precision.
inline double dw_cdf(long y, double q, double b) {
  if (y < 0) return 0.0;
  const Real yy = Real(y) + 1;
  return static_cast<double>(1 - std::pow(Real(q), std::pow(yy, Real(b))));
}

inline double dw_pmf(long y, double q, double b) {
  const Real hi = std::pow(Real(q), std::pow(Real(y) + 1, Real(b)));
  const Real lo = y == 0 ? Real(1) : std::pow(Real(q), std::pow(Real(y), Real(b)));
  return static_cast<double>(lo - hi);
}

// log of the multivariate gamma function Gamma_d(a).
inline double log_mvgamma(int d, double a) {
  double r = d * (d - 1) / 4.0 * std::log(M_PI);
  for (int i = 0; i < d; ++i) r += std::lgamma(a - i / 2.0);
  return r;
}

// Normalising constant of the Wishart density |K|^{(b-2)/2} exp(-tr(K D)/2)
// on the clique `idx`.
inline double log_clique_constant(const std::vector<int>& idx, double b, const Eigen::MatrixXd& d) {
  const int m = static_cast<int>(idx.size());
  if (m == 0) return 0.0;
  Eigen::MatrixXd s(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) s(r, c) = d(idx[r], idx[c]);
  const double h = (b + m - 1) / 2.0;
  return -h * std::log(s.determinant()) + log_mvgamma(m, h) + h * m * std::log(2.0);
}

// Every graph on three nodes is decomposable; the G-Wishart normalising
// constant factorises over cliques and separators. `code` has bit 0 for
// (0,1), bit 1 for (0,2) and bit 2 for (1,2).
inline double log_gwishart_constant_p3(int code, double b, const Eigen::MatrixXd& d) {
  const bool e01 = code & 1, e02 = code & 2, e12 = code & 4;
  const int edges = e01 + e02 + e12;
  if (edges == 0) return log_clique_constant({0}, b, d) + log_clique_constant({1}, b, d) + log_clique_constant({2}, b, d);
  if (edges == 3) return log_clique_constant({0, 1, 2}, b, d);
  if (edges == 1) {
    const int i = e12 ? 1 : 0;
    const int j = e01 ? 1 : 2;
    return log_clique_constant({i, j}, b, d) + log_clique_constant({3 - i - j}, b, d);
  }
  const int centre = !e12 ? 0 : (!e02 ? 1 : 2);
  std::vector<int> others;
  for (int v = 0; v < 3; ++v)
    if (v != centre) others.push_back(v);
  return log_clique_constant({others[0], centre}, b, d) + log_clique_constant({centre, others[1]}, b, d) -
         log_clique_constant({centre}, b, d);
}

// Exact posterior over the 8 graphs on three nodes under a W_G(b, D) prior,
// data scatter S and an Erdos-Renyi prior with edge probability `sparsity`.
inline std::vector<double> exact_graph_posterior_p3(const Eigen::MatrixXd& scatter, std::size_t n, double b,
                                                    const Eigen::MatrixXd& d, double sparsity) {
  const Eigen::MatrixXd post = d + scatter;
  std::vector<double> lp(8);
  double top = -INFINITY;
  for (int code = 0; code < 8; ++code) {
    const int edges = (code & 1) + ((code >> 1) & 1) + ((code >> 2) & 1);
    lp[code] = log_gwishart_constant_p3(code, b + static_cast<double>(n), post) - log_gwishart_constant_p3(code, b, d) +
               edges * std::log(sparsity) + (3 - edges) * std::log1p(-sparsity);
    top = std::max(top, lp[code]);
  }
  double total = 0.0;
  for (double& v : lp) total += (v = std::exp(v - top));
  for (double& v : lp) v /= total;
  return lp;
}

}  // namespace oracle
