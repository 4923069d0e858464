#include "rgm/gwishart.hpp"

#include <cmath>
#include <vector>

#include "rgm/error.hpp"

namespace rgm {

GWishartParams GWishartParams::standard(std::size_t p, double df) {
  return {df, Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p))};
}

void GWishartParams::validate() const {
  if (!(df >= 3.0)) throw Error(ErrorCategory::domain, "G-Wishart shape must be at least 3");
  if (scale.rows() != scale.cols() || !scale.isApprox(scale.transpose()) || !is_positive_definite(scale))
    throw Error(ErrorCategory::domain, "G-Wishart scale must be symmetric positive definite");
}

bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  const Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

Matrix sample_wishart(double df, const Matrix& scale, Rng& rng) {
  const Eigen::Index p = scale.rows();
  // Bartlett decomposition with nu = df + p - 1 and Sigma = scale^{-1}.
  const double nu = df + static_cast<double>(p) - 1.0;
  const Eigen::LLT<Matrix> scale_llt(scale);
  if (scale_llt.info() != Eigen::Success)
    throw Error(ErrorCategory::non_positive_definite, "Wishart scale is not positive definite");
  const Matrix sigma = scale_llt.solve(Matrix::Identity(p, p));
  const Matrix l = Eigen::LLT<Matrix>(sigma).matrixL();

  Matrix a = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(draw_chi_squared(rng, nu - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = draw_normal(rng);
  }
  const Matrix la = l * a;
  Matrix k = la * la.transpose();
  return 0.5 * (k + k.transpose());
}

namespace {

// Completes the covariance `sigma` so that its inverse has zeros at every
// non-edge while edge and diagonal entries are kept (iterative proportional
// scaling over neighbourhoods).
Matrix complete_covariance(const Graph& graph, const Matrix& sigma, const GWishartOptions& options) {
  const std::size_t p = graph.size();
  std::vector<std::vector<Eigen::Index>> nbrs(p);
  for (std::size_t j = 0; j < p; ++j)
    for (auto v : graph.neighbors(j)) nbrs[j].push_back(static_cast<Eigen::Index>(v));

  Matrix w = sigma;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Matrix previous = w;
    for (std::size_t jn = 0; jn < p; ++jn) {
      const auto j = static_cast<Eigen::Index>(jn);
      const auto& nb = nbrs[jn];
      const auto m = static_cast<Eigen::Index>(nb.size());
      Vector col = Vector::Zero(static_cast<Eigen::Index>(p));
      if (m > 0) {
        Matrix w_nn(m, m);
        Vector s_nj(m);
        for (Eigen::Index a = 0; a < m; ++a) {
          s_nj[a] = sigma(nb[a], j);
          for (Eigen::Index b = 0; b < m; ++b) w_nn(a, b) = w(nb[a], nb[b]);
        }
        const Vector coef = w_nn.llt().solve(s_nj);
        for (Eigen::Index a = 0; a < m; ++a) col += coef[a] * w.col(nb[a]);
      }
      for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(p); ++l) {
        if (l == j) continue;
        w(j, l) = col[l];
        w(l, j) = col[l];
      }
    }
    if ((w - previous).cwiseAbs().maxCoeff() < options.tolerance) return w;
  }
  throw Error(ErrorCategory::convergence, "G-Wishart covariance completion did not converge");
}

Matrix constrained_draw(const Graph& graph, double df, const Matrix& scale, Rng& rng,
                        const GWishartOptions& options) {
  const auto p = static_cast<Eigen::Index>(graph.size());
  if (scale.rows() != p || scale.cols() != p) throw Error(ErrorCategory::domain, "scale does not match graph size");
  Matrix k = sample_wishart(df, scale, rng);
  if (graph.is_complete()) return k;

  const Eigen::LLT<Matrix> k_llt(k);
  const Matrix sigma = k_llt.solve(Matrix::Identity(p, p));
  const Matrix w = complete_covariance(graph, sigma, options);
  const Eigen::LLT<Matrix> w_llt(w);
  if (w_llt.info() != Eigen::Success)
    throw Error(ErrorCategory::non_positive_definite, "completed covariance is not positive definite");
  Matrix omega = w_llt.solve(Matrix::Identity(p, p));
  omega = (0.5 * (omega + omega.transpose())).eval();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      if (!graph.has_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
        omega(i, j) = 0.0;
        omega(j, i) = 0.0;
      }
    }
  }
  if (!is_positive_definite(omega))
    throw Error(ErrorCategory::non_positive_definite, "G-Wishart draw is not positive definite");
  return omega;
}

}  // namespace

Matrix sample_gwishart(const Graph& graph, const GWishartParams& params, Rng& rng, const GWishartOptions& options) {
  params.validate();
  return constrained_draw(graph, params.df, params.scale, rng, options);
}

Matrix sample_gwishart_posterior(const Graph& graph, const Matrix& z, const GWishartParams& prior, Rng& rng,
                                 const GWishartOptions& options) {
  prior.validate();
  if (z.rows() > 0 && z.cols() != prior.scale.cols())
    throw Error(ErrorCategory::domain, "latent matrix width does not match the precision dimension");
  if (z.rows() == 0) return constrained_draw(graph, prior.df, prior.scale, rng, options);
  Matrix scale = prior.scale;
  scale.noalias() += z.transpose() * z;
  return constrained_draw(graph, prior.df + static_cast<double>(z.rows()), scale, rng, options);
}

Matrix partial_correlations(const Matrix& omega) {
  const Vector d = omega.diagonal();
  if (!(d.array() > 0.0).all()) throw Error(ErrorCategory::non_positive_definite, "precision diagonal must be positive");
  const Vector inv_sqrt = d.cwiseSqrt().cwiseInverse();
  Matrix pc = -(inv_sqrt.asDiagonal() * omega * inv_sqrt.asDiagonal());
  pc.diagonal().setOnes();
  return pc;
}

}  // namespace rgm
