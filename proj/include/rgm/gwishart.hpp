#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "rgm/graph.hpp"
#include "rgm/stats.hpp"

namespace rgm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// W_G(df, scale): density proportional to |K|^{(df-2)/2} exp(-tr(K scale)/2)
// on precision matrices with zeros at the graph's non-edges.
struct GWishartParams {
  double df = 3.0;
  Matrix scale;

  static GWishartParams standard(std::size_t p, double df = 3.0);
  void validate() const;
};

struct GWishartOptions {
  // Non-edge entries of every returned draw satisfy |omega| < zero_band.
  double zero_band = 1e-10;
  // Max-abs change of the covariance completion between passes.
  double tolerance = 1e-8;
  int max_iterations = 1000;
};

// Unconstrained Wishart draw in the same parametrisation (complete graph);
// its mean is (df + p - 1) scale^{-1}.
Matrix sample_wishart(double df, const Matrix& scale, Rng& rng);

Matrix sample_gwishart(const Graph& graph, const GWishartParams& params, Rng& rng, const GWishartOptions& options = {});

// Conjugate update: W_G(df + n, scale + z^T z).
Matrix sample_gwishart_posterior(const Graph& graph, const Matrix& z, const GWishartParams& prior, Rng& rng,
                                 const GWishartOptions& options = {});

// -omega_ij / sqrt(omega_ii omega_jj), unit diagonal.
Matrix partial_correlations(const Matrix& omega);

bool is_positive_definite(const Matrix& m);

}  // namespace rgm
