#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rgm/bdmcmc.hpp"
#include "rgm/error.hpp"
#include "rgm/gwishart.hpp"
#include "rgm/posterior.hpp"
#include "rgm/stats.hpp"

using namespace rgm;

namespace {

Matrix gaussian_rows(const Matrix& omega, Eigen::Index n, Rng& rng) {
  const Eigen::LLT<Matrix> llt(omega);
  Matrix e(omega.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < omega.rows(); ++r) e(r, c) = draw_normal(rng);
  return llt.matrixU().solve(e).transpose();
}

int graph_code(const Graph& g) { return g.has_edge(0, 1) + 2 * g.has_edge(0, 2) + 4 * g.has_edge(1, 2); }

}  // namespace

TEST_CASE("edge prior odds") {
  CHECK(edge_prior_odds(0, 0, 1, GraphPrior::erdos_renyi(0.5)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(edge_prior_odds(0, 0, 1, GraphPrior::erdos_renyi(0.068)) == doctest::Approx(0.068 / 0.932).epsilon(1e-14));
  CHECK(edge_prior_odds(0, 0, 1, GraphPrior::erdos_renyi(0.068)) == doctest::Approx(0.0730).epsilon(1e-3));

  GraphEnsemble ens = empty_ensemble(2, 3);
  RandomGraphParams theta{Vector::Constant(2, -1.0), Vector(0), Matrix::Constant(2, 2, 0.7)};
  const EdgeCovariates w = EdgeCovariates::none(3);
  const auto prior = GraphPrior::latent_probit(ens, theta, w);
  const double before = edge_prior_odds(0, 0, 2, prior);
  const double p = oracle::normal_cdf(-1.0);
  CHECK(before == doctest::Approx(p / (1 - p)).epsilon(1e-12));
  ens[1].set_edge(0, 2, true);
  CHECK(edge_prior_odds(0, 0, 2, prior) > before);
  CHECK(prior.probability(0, 0, 2) == doctest::Approx(oracle::normal_cdf(-1.0 + 2 * 0.49)).epsilon(1e-12));
}

TEST_CASE("latent probit log odds stay finite in the tails") {
  GraphEnsemble ens = empty_ensemble(1, 2);
  for (double a : {-40.0, -9.0, 9.0, 40.0}) {
    RandomGraphParams theta{Vector::Constant(1, a), Vector(0), Matrix::Zero(1, 2)};
    const EdgeCovariates w = EdgeCovariates::none(2);
    const double lo = GraphPrior::latent_probit(ens, theta, w).log_odds(0, 0, 1);
    CHECK(std::isfinite(lo));
    CHECK((lo > 0) == (a > 0));
  }
}

TEST_CASE("a toggle between equally probable states has rate one") {
  Rng rng(3);
  const Eigen::Index p = 4;
  const Matrix z = gaussian_rows(Matrix::Identity(p, p), 50, rng);
  const auto gw = GWishartParams::standard(4);
  BdState state{Graph(4), Matrix::Identity(p, p), 1.0, 0};
  state.graph.set_edge(0, 2, true);
  state.omega = sample_gwishart_posterior(state.graph, z, gw, rng);
  const Matrix scale = gw.scale + z.transpose() * z;
  const Matrix sigma = state.omega.inverse();
  // Absent edge (1, 3): prior odds equal to the likelihood-side ratio.
  const double log_removal = log_edge_removal_ratio(state.graph, sigma, scale, gw.df, 1, 3);
  const auto prior = GraphPrior::erdos_renyi(logistic(log_removal));
  const auto rates = birth_death_rates(state, z, gw, prior);
  CHECK(rates.rate[pair_index(4, 1, 3)] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("doubling the prior odds doubles rates below one") {
  Rng rng(5);
  const Eigen::Index p = 5;
  const Matrix z = gaussian_rows(Matrix::Identity(p, p), 80, rng);
  const auto gw = GWishartParams::standard(5);
  BdState state{Graph(5), Matrix::Identity(p, p), 1.0, 0};
  state.graph.set_edge(1, 4, true);
  state.omega = sample_gwishart_posterior(state.graph, z, gw, rng);
  const double s1 = 0.1, odds2 = 2 * s1 / (1 - s1);
  const auto a = birth_death_rates(state, z, gw, GraphPrior::erdos_renyi(s1));
  const auto b = birth_death_rates(state, z, gw, GraphPrior::erdos_renyi(odds2 / (1 + odds2)));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) {
      const auto e = pair_index(5, i, j);
      // Births scale with the odds, deaths with their inverse, until the
      // rate saturates at one.
      const bool birth = !state.graph.has_edge(i, j);
      const double expected = std::min(1.0, (birth ? 2.0 : 0.5) * std::exp(a.log_ratio[e]));
      CHECK(b.rate[e] == doctest::Approx(expected).epsilon(1e-12));
      if (birth && a.rate[e] < 0.5) CHECK(b.rate[e] / a.rate[e] == doctest::Approx(2.0).epsilon(1e-12));
      CHECK(b.log_ratio[e] - a.log_ratio[e] == doctest::Approx(birth ? std::log(2.0) : -std::log(2.0)).epsilon(1e-12));
      CHECK(a.rate[e] > 0.0);
      CHECK(std::isfinite(a.rate[e]));
    }
}

TEST_CASE("a strongly dependent pair has the largest birth rate") {
  Rng rng(11);
  Matrix omega = Matrix::Identity(5, 5);
  omega(0, 1) = omega(1, 0) = -0.45;
  const auto gw = GWishartParams::standard(5);
  const auto prior = GraphPrior::erdos_renyi(0.2);
  int wins = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const Matrix z = gaussian_rows(omega, 500, rng);
    BdState state{Graph(5), Matrix::Identity(5, 5), 1.0, 0};
    state.omega = sample_gwishart_posterior(state.graph, z, gw, rng);
    const auto rates = birth_death_rates(state, z, gw, prior);
    const double strong = rates.rate[pair_index(5, 0, 1)];
    bool top = true;
    for (std::size_t e = 0; e < rates.rate.size(); ++e)
      if (e != pair_index(5, 0, 1) && rates.rate[e] >= strong) top = false;
    wins += top;
  }
  CHECK(wins >= 95);
}

TEST_CASE("rates are clamped into the configured band") {
  Rng rng(2);
  Matrix omega = Matrix::Identity(3, 3);
  omega(0, 1) = omega(1, 0) = -0.6;
  const Matrix z = gaussian_rows(omega, 5000, rng);
  const auto gw = GWishartParams::standard(3);
  BdState state{Graph(3), Matrix::Identity(3, 3), 1.0, 0};
  state.graph.set_edge(0, 1, true);
  state.omega = sample_gwishart_posterior(state.graph, z, gw, rng);
  RateOptions opts;
  opts.max_rate = 10.0;
  opts.min_rate = 1e-3;
  const auto rates = birth_death_rates(state, z, gw, GraphPrior::erdos_renyi(0.5), opts);
  CHECK(rates.clamped >= 1);
  for (double r : rates.rate) {
    CHECK(r >= 1e-3);
    CHECK(r <= 10.0);
  }
  // Removing a strongly supported edge is far below the floor.
  CHECK(rates.log_ratio[pair_index(3, 0, 1)] < std::log(1e-3));
  CHECK(rates.rate[pair_index(3, 0, 1)] == 1e-3);
}

TEST_CASE("toggle selection follows the rates") {
  Rng rng(17);
  std::vector<double> rates{1.0, 3.0};
  int second = 0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) second += select_toggle(rates, rng) == 1;
  CHECK(std::abs(second / static_cast<double>(n) - 0.75) < 4 * std::sqrt(0.75 * 0.25 / n));
  CHECK(select_toggle({0.0, 0.0, 2.0}, rng) == 2);
  CHECK_THROWS_AS(select_toggle({0.0, 0.0}, rng), Error);
}

TEST_CASE("single candidate: certain toggle and holding time 1/r") {
  Rng rng(4);
  const Matrix z = gaussian_rows(Matrix::Identity(2, 2), 40, rng);
  const auto gw = GWishartParams::standard(2);
  BdState state{Graph(2), Matrix::Identity(2, 2), 1.0, 0};
  const auto prior = GraphPrior::erdos_renyi(0.3);
  const auto rates = birth_death_rates(state, z, gw, prior);
  RateOptions plain;
  plain.refresh_rate = 0.0;
  BdStepInfo info;
  const BdState next = bd_step(state, z, gw, prior, rng, plain, {}, &info);
  CHECK(next.graph.has_edge(0, 1));
  CHECK(info.birth);
  CHECK_FALSE(info.refreshed);
  CHECK(next.waiting_time == doctest::Approx(1.0 / rates.rate[0]).epsilon(1e-15));
}

TEST_CASE("refresh events compete with toggles") {
  Rng rng(14);
  const Matrix z = gaussian_rows(Matrix::Identity(2, 2), 40, rng);
  const auto gw = GWishartParams::standard(2);
  const BdState state{Graph(2), Matrix::Identity(2, 2), 1.0, 0};
  const auto prior = GraphPrior::erdos_renyi(0.3);
  const auto rates = birth_death_rates(state, z, gw, prior);
  RateOptions opts;
  opts.refresh_rate = 2.0;
  int refreshed = 0;
  const int n = 20000;
  for (int t = 0; t < n; ++t) {
    BdStepInfo info;
    const BdState next = bd_step(state, z, gw, prior, rng, opts, {}, &info);
    CHECK(next.waiting_time == doctest::Approx(1.0 / (rates.rate[0] + 2.0)).epsilon(1e-15));
    CHECK(next.graph.has_edge(0, 1) != info.refreshed);
    refreshed += info.refreshed;
  }
  const double expected = 2.0 / (rates.rate[0] + 2.0);
  CHECK(std::abs(refreshed / static_cast<double>(n) - expected) < 4 * std::sqrt(expected * (1 - expected) / n));
}

TEST_CASE("column redraws form a Gibbs sampler for the G-Wishart") {
  // Alternating redraws of both columns of a complete p = 2 graph with no
  // data target W(3, I), whose mean is 4 I.
  Rng rng(17);
  Graph g(2);
  g.set_edge(0, 1, true);
  Matrix omega = Matrix::Identity(2, 2);
  const Matrix scale = Matrix::Identity(2, 2);
  Matrix sum = Matrix::Zero(2, 2);
  const int sweeps = 100000;
  for (int t = 0; t < sweeps; ++t) {
    redraw_column(omega, g, 0, scale, 3.0, rng);
    redraw_column(omega, g, 1, scale, 3.0, rng);
    sum += omega;
  }
  const Matrix mean = sum / sweeps;
  CHECK(mean(0, 0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(mean(1, 1) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(std::abs(mean(0, 1)) < 0.1);

  // On a path the redrawn column keeps the zero pattern.
  Graph path(4);
  path.set_edge(0, 1, true);
  path.set_edge(1, 2, true);
  path.set_edge(2, 3, true);
  Matrix k = sample_gwishart(path, GWishartParams::standard(4), rng);
  for (std::size_t j = 0; j < 4; ++j) {
    redraw_column(k, path, j, Matrix::Identity(4, 4), 3.0, rng);
    CHECK(k(0, 2) == 0.0);
    CHECK(k(0, 3) == 0.0);
    CHECK(k(1, 3) == 0.0);
    CHECK(k == k.transpose());
    CHECK(is_positive_definite(k));
  }
}

TEST_CASE("bd_step keeps omega consistent with the graph") {
  Rng rng(8);
  const Eigen::Index p = 6;
  Matrix omega = Matrix::Identity(p, p);
  omega(0, 1) = omega(1, 0) = 0.4;
  omega(2, 3) = omega(3, 2) = -0.3;
  const Matrix z = gaussian_rows(omega, 100, rng);
  const auto gw = GWishartParams::standard(6);
  BdState state{Graph(6), Matrix::Identity(p, p), 1.0, 2};
  const auto prior = GraphPrior::erdos_renyi(0.2);
  for (int t = 0; t < 300; ++t) {
    state = bd_step(state, z, gw, prior, rng);
    CHECK(state.waiting_time > 0.0);
    CHECK(state.environment == 2);
    CHECK(is_positive_definite(state.omega));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = i + 1; j < 6; ++j)
        if (!state.graph.has_edge(i, j))
          CHECK(std::abs(state.omega(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) < 1e-10);
  }
}

TEST_CASE("accumulate_posterior weights states by holding time") {
  Graph with(3), without(3);
  with.set_edge(0, 1, true);
  with.set_edge(1, 2, true);
  without.set_edge(1, 2, true);
  const Matrix id = Matrix::Identity(3, 3);
  std::vector<std::vector<BdState>> history{{BdState{with, id, 1.0, 0}, BdState{without, id, 3.0, 0}}};
  const auto probs = accumulate_posterior(history);
  CHECK(probs[0](0, 1) == doctest::Approx(0.25));
  CHECK(probs[0](1, 0) == doctest::Approx(0.25));
  CHECK(probs[0](1, 2) == 1.0);
  CHECK(probs[0](0, 2) == 0.0);
  CHECK(probs[0](0, 0) == 0.0);

  std::vector<std::vector<BdState>> equal{{BdState{with, id, 2.0, 0}, BdState{without, id, 2.0, 0},
                                           BdState{without, id, 2.0, 0}, BdState{with, id, 2.0, 0}}};
  CHECK(accumulate_posterior(equal)[0](0, 1) == doctest::Approx(0.5));

  try {
    accumulate_posterior({{}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::empty_history);
  }
}

TEST_CASE("three-node posterior matches exact enumeration") {
  Rng rng(42);
  Matrix omega(3, 3);
  omega << 1.0, 0.35, 0.0, 0.35, 1.0, 0.12, 0.0, 0.12, 1.0;
  const Matrix z = gaussian_rows(omega, 100, rng);
  const auto gw = GWishartParams::standard(3);
  for (double sparsity : {0.5, 0.2}) {
    const auto exact = oracle::exact_graph_posterior_p3(z.transpose() * z, 100, gw.df, gw.scale, sparsity);
    const auto prior = GraphPrior::erdos_renyi(sparsity);
    BdState state{Graph(3), Matrix::Identity(3, 3), 1.0, 0};
    std::vector<double> weight(8, 0.0);
    double total = 0.0;
    const int iters = 100000;
    for (int t = 0; t < iters; ++t) {
      const int code = graph_code(state.graph);
      BdState next = bd_step(state, z, gw, prior, rng);
      if (t >= iters / 10) {
        weight[code] += next.waiting_time;
        total += next.waiting_time;
      }
      state = std::move(next);
    }
    for (int c = 0; c < 8; ++c) CHECK(std::abs(weight[c] / total - exact[c]) < 0.05);
  }
}

TEST_CASE("coupling raises the posterior of a shared edge") {
  // Environment 1 holds edge (0, 1); environment 2's data are weak. With
  // c_1 . c_2 > 0 the prior pulls the edge into environment 2.
  Rng data_rng(9);
  Matrix omega = Matrix::Identity(4, 4);
  omega(0, 1) = omega(1, 0) = -0.15;
  const Matrix z = gaussian_rows(omega, 40, data_rng);
  const auto gw = GWishartParams::standard(4);
  GraphEnsemble ens = empty_ensemble(2, 4);
  ens[0].set_edge(0, 1, true);
  const EdgeCovariates w = EdgeCovariates::none(4);

  auto edge_posterior = [&](const Matrix& c) {
    RandomGraphParams theta{Vector::Constant(2, -1.0), Vector(0), c};
    GraphEnsemble local = ens;
    const auto prior = GraphPrior::latent_probit(local, theta, w);
    Rng rng(21);
    BdState state{Graph(4), Matrix::Identity(4, 4), 1.0, 1};
    double hit = 0.0, total = 0.0;
    for (int t = 0; t < 20000; ++t) {
      const bool present = state.graph.has_edge(0, 1);
      BdState next = bd_step(state, z, gw, prior, rng);
      if (t >= 2000) {
        hit += present * next.waiting_time;
        total += next.waiting_time;
      }
      state = std::move(next);
      local[1] = state.graph;
    }
    return hit / total;
  };
  Matrix coupled(2, 2);
  coupled << 1.2, 0.0, 1.2, 0.0;
  CHECK(edge_posterior(coupled) > edge_posterior(Matrix::Zero(2, 2)));
}
