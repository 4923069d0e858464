#include <doctest.h>

#include <cmath>
#include <vector>

#include "rgm/error.hpp"
#include "rgm/gwishart.hpp"
#include "rgm/stats.hpp"

using namespace rgm;

namespace {

Matrix random_spd(Eigen::Index p, Rng& rng) {
  Matrix a(p, p);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = draw_normal(rng);
  return a * a.transpose() + 0.5 * Matrix::Identity(p, p);
}

Graph random_graph(std::size_t p, double density, Rng& rng) {
  Graph g(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) g.set_edge(i, j, draw_uniform(rng) < density);
  return g;
}

void check_zero_pattern(const Graph& g, const Matrix& omega) {
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i + 1; j < g.size(); ++j)
      if (!g.has_edge(i, j)) CHECK(std::abs(omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) < 1e-10);
}

// Entrywise Monte-Carlo mean and standard error.
struct Moments {
  Matrix mean;
  Matrix se;
};

template <typename Draw>
Moments moments(int n, Draw&& draw) {
  Matrix s, s2;
  for (int t = 0; t < n; ++t) {
    const Matrix x = draw();
    if (t == 0) {
      s = Matrix::Zero(x.rows(), x.cols());
      s2 = s;
    }
    s += x;
    s2 += x.cwiseProduct(x);
  }
  Moments m;
  m.mean = s / n;
  m.se = ((s2 / n - m.mean.cwiseProduct(m.mean)) / n).cwiseSqrt();
  return m;
}

}  // namespace

TEST_CASE("complete-graph draws have the Wishart mean") {
  for (Eigen::Index p : {2, 3}) {
    Rng rng(static_cast<std::uint64_t>(100 + p));
    const auto prior = GWishartParams::standard(static_cast<std::size_t>(p), 3.0);
    const Graph full = Graph::complete(static_cast<std::size_t>(p));
    const auto m = moments(100000, [&] { return sample_gwishart(full, prior, rng); });
    const Matrix target = (3.0 + static_cast<double>(p) - 1.0) * Matrix::Identity(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) CHECK(std::abs(m.mean(i, j) - target(i, j)) < 3 * m.se(i, j));
  }
}

TEST_CASE("unconstrained Wishart mean with a general scale") {
  Rng rng(5);
  Matrix scale(2, 2);
  scale << 2.0, 0.6, 0.6, 1.0;
  const auto m = moments(100000, [&] { return sample_wishart(4.0, scale, rng); });
  const Matrix target = 5.0 * scale.inverse();
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(m.mean(i, j) - target(i, j)) < 3.5 * m.se(i, j));
}

TEST_CASE("empty graph gives diagonal chi-squared precisions") {
  Rng rng(9);
  const Graph empty(4);
  const auto prior = GWishartParams::standard(4, 3.0);
  const auto m = moments(40000, [&] {
    const Matrix omega = sample_gwishart(empty, prior, rng);
    check_zero_pattern(empty, omega);
    return omega;
  });
  // omega_ii ~ Gamma(df / 2, rate 1/2): mean df.
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::abs(m.mean(i, i) - 3.0) < 4 * m.se(i, i));
}

TEST_CASE("decomposable graph matches the clique marginals") {
  // Path 0 - 1 - 2. Clique blocks of the covariance are inverse Wishart with
  // mean scale_C / (df - 2).
  Rng rng(31);
  Graph path(3);
  path.set_edge(0, 1, true);
  path.set_edge(1, 2, true);
  GWishartParams prior;
  prior.df = 8.0;
  prior.scale.resize(3, 3);
  prior.scale << 1.0, 0.5, 0.2, 0.5, 2.0, -0.3, 0.2, -0.3, 1.5;
  const auto m = moments(60000, [&] {
    const Matrix omega = sample_gwishart(path, prior, rng);
    check_zero_pattern(path, omega);
    return Matrix(omega.inverse());
  });
  for (auto [i, j] : {std::pair{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}})
    CHECK(std::abs(m.mean(i, j) - prior.scale(i, j) / 6.0) < 4 * m.se(i, j));
}

TEST_CASE("draws are positive definite and honour the zero pattern") {
  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t p = 3 + static_cast<std::size_t>(rep % 8);
    const Graph g = random_graph(p, 0.3 + 0.05 * (rep % 5), rng);
    GWishartParams prior{3.0 + rep % 3, random_spd(static_cast<Eigen::Index>(p), rng)};
    const Matrix omega = sample_gwishart(g, prior, rng);
    CHECK(is_positive_definite(omega));
    check_zero_pattern(g, omega);
    CHECK(omega == omega.transpose());
  }
}

TEST_CASE("posterior with no data is the prior sampler") {
  Rng a(4), b(4);
  const Graph g = [] {
    Graph x(5);
    x.set_edge(0, 1, true);
    x.set_edge(1, 2, true);
    x.set_edge(2, 3, true);
    x.set_edge(3, 0, true);
    return x;
  }();
  const auto prior = GWishartParams::standard(5);
  CHECK(sample_gwishart_posterior(g, Matrix(0, 5), prior, a) == sample_gwishart(g, prior, b));
}

TEST_CASE("posterior concentrates on the generating covariance") {
  Rng rng(2);
  const Eigen::Index p = 5;
  const Matrix sigma = random_spd(p, rng) / 2.0;
  const Eigen::LLT<Matrix> llt(sigma);
  const Graph full = Graph::complete(static_cast<std::size_t>(p));
  const auto prior = GWishartParams::standard(static_cast<std::size_t>(p));
  auto distance = [&](Eigen::Index n) {
    Matrix z(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector e(p);
      for (Eigen::Index j = 0; j < p; ++j) e[j] = draw_normal(rng);
      z.row(i) = (llt.matrixL() * e).transpose();
    }
    Matrix mean = Matrix::Zero(p, p);
    for (int t = 0; t < 200; ++t) mean += sample_gwishart_posterior(full, z, prior, rng).inverse();
    return (mean / 200.0 - sigma).norm();
  };
  CHECK(distance(2000) < distance(200));
}

TEST_CASE("posterior keeps a missing edge at zero") {
  Rng rng(3);
  Graph g = Graph::complete(4);
  g.set_edge(1, 3, false);
  Matrix z(30, 4);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = draw_normal(rng);
  z.col(3) += 2.0 * z.col(1);
  for (int t = 0; t < 100; ++t) {
    const Matrix omega = sample_gwishart_posterior(g, z, GWishartParams::standard(4), rng);
    CHECK(std::abs(omega(1, 3)) < 1e-10);
    CHECK(is_positive_definite(omega));
  }
}

TEST_CASE("completion cap raises a convergence error") {
  Rng rng(1);
  Graph cycle(5);
  for (std::size_t i = 0; i < 5; ++i) cycle.set_edge(i, (i + 1) % 5, true);
  GWishartOptions opts;
  opts.max_iterations = 1;
  opts.tolerance = 1e-300;
  try {
    sample_gwishart(cycle, GWishartParams::standard(5), rng, opts);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::convergence);
  }
}

TEST_CASE("parameter validation") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_gwishart(Graph(2), GWishartParams::standard(2, 2.5), rng), Error);
  GWishartParams bad{3.0, Matrix::Identity(2, 2)};
  bad.scale(1, 1) = -1.0;
  CHECK_THROWS_AS(sample_gwishart(Graph(2), bad, rng), Error);
}

TEST_CASE("partial correlations") {
  const Matrix pc_identity = partial_correlations(Matrix::Identity(4, 4));
  CHECK(pc_identity == Matrix::Identity(4, 4));
  Matrix omega(2, 2);
  omega << 1.0, 0.5, 0.5, 1.0;
  CHECK(partial_correlations(omega)(0, 1) == -0.5);

  Rng rng(10);
  for (int rep = 0; rep < 1000; ++rep) {
    const Matrix o = random_spd(6, rng);
    const Matrix pc = partial_correlations(o);
    CHECK((pc - pc.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    for (Eigen::Index i = 0; i < 6; ++i)
      for (Eigen::Index j = 0; j < 6; ++j)
        if (i != j) CHECK(std::abs(pc(i, j)) < 1.0);
    if (rep < 100) {
      Vector d(6);
      for (Eigen::Index i = 0; i < 6; ++i) d[i] = 0.1 + 5.0 * draw_uniform(rng);
      const Matrix scaled = d.asDiagonal() * o * d.asDiagonal();
      CHECK((partial_correlations(scaled) - pc).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}
