#include "rgm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rgm/error.hpp"
#include "rgm/gwishart.hpp"

namespace rgm {

PosteriorAccumulator::PosteriorAccumulator(std::size_t environments, std::size_t p_, std::size_t covariates)
    : p(p_),
      weight(Vector::Zero(static_cast<Eigen::Index>(environments))),
      edge_sums(Matrix::Zero(static_cast<Eigen::Index>(environments), static_cast<Eigen::Index>(num_pairs(p_)))),
      pcor_sums(environments, Matrix::Zero(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(p_))),
      states(environments, 0),
      alpha_sum(Vector::Zero(static_cast<Eigen::Index>(environments))),
      beta_sum(Vector::Zero(static_cast<Eigen::Index>(covariates))),
      c_sum(Matrix::Zero(static_cast<Eigen::Index>(environments), kLatentDim)),
      c_aligned_sum(Matrix::Zero(static_cast<Eigen::Index>(environments), kLatentDim)),
      gram_sum(Matrix::Zero(static_cast<Eigen::Index>(environments), static_cast<Eigen::Index>(environments))) {}

void PosteriorAccumulator::add_state(std::size_t k, const Graph& graph, const Matrix& omega, double waiting_time) {
  if (k >= environments()) throw Error(ErrorCategory::domain, "environment index out of range");
  if (graph.size() != p) throw Error(ErrorCategory::domain, "graph size does not match the accumulator");
  if (!(waiting_time > 0.0) || !std::isfinite(waiting_time))
    throw Error(ErrorCategory::domain, "waiting times must be positive and finite");
  const auto kk = static_cast<Eigen::Index>(k);
  weight[kk] += waiting_time;
  std::size_t e = 0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j, ++e)
      if (graph.has_edge(i, j)) edge_sums(kk, static_cast<Eigen::Index>(e)) += waiting_time;
  pcor_sums[k] += waiting_time * partial_correlations(omega);
  ++states[k];
}

Eigen::Matrix2d procrustes_rotation(const Matrix& c, const Matrix& reference) {
  const Eigen::Matrix2d m = c.transpose() * reference;
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

void PosteriorAccumulator::add_theta(const RandomGraphParams& theta) {
  if (theta.environments() != environments() || theta.covariates() != static_cast<std::size_t>(beta_sum.size()))
    throw Error(ErrorCategory::domain, "Theta does not match the accumulator");
  if (c_reference.size() == 0) c_reference = theta.c;
  ++theta_draws;
  alpha_sum += theta.alpha;
  beta_sum += theta.beta;
  c_sum += theta.c;
  c_aligned_sum += theta.c * procrustes_rotation(theta.c, c_reference);
  gram_sum += theta.c * theta.c.transpose();
}

void PosteriorAccumulator::merge(const PosteriorAccumulator& other) {
  if (other.environments() != environments() || other.p != p || other.beta_sum.size() != beta_sum.size())
    throw Error(ErrorCategory::domain, "cannot merge accumulators of different shapes");
  if (c_reference.size() == 0) {
    c_reference = other.c_reference;
  } else if (other.c_reference.size() != 0 && other.c_reference != c_reference) {
    throw Error(ErrorCategory::domain, "accumulators were aligned to different references");
  }
  weight += other.weight;
  edge_sums += other.edge_sums;
  for (std::size_t k = 0; k < pcor_sums.size(); ++k) {
    pcor_sums[k] += other.pcor_sums[k];
    states[k] += other.states[k];
  }
  theta_draws += other.theta_draws;
  alpha_sum += other.alpha_sum;
  beta_sum += other.beta_sum;
  c_sum += other.c_sum;
  c_aligned_sum += other.c_aligned_sum;
  gram_sum += other.gram_sum;
}

PosteriorSummary summarize(const PosteriorAccumulator& acc) {
  const std::size_t b = acc.environments();
  if (b == 0) throw Error(ErrorCategory::empty_history, "no environments in the retained history");
  for (std::size_t k = 0; k < b; ++k)
    if (acc.states[k] == 0 || !(acc.weight[static_cast<Eigen::Index>(k)] > 0.0))
      throw Error(ErrorCategory::empty_history, "the retained history is empty");

  const auto p = static_cast<Eigen::Index>(acc.p);
  const double pairs = static_cast<double>(num_pairs(acc.p));
  PosteriorSummary s;
  s.sparsity.resize(static_cast<Eigen::Index>(b));
  s.edge_variance.resize(static_cast<Eigen::Index>(b));
  for (std::size_t k = 0; k < b; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double w = acc.weight[kk];
    Matrix prob = Matrix::Zero(p, p);
    double total = 0.0;
    double variance = 0.0;
    Eigen::Index e = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i + 1; j < p; ++j, ++e) {
        const double v = std::clamp(acc.edge_sums(kk, e) / w, 0.0, 1.0);
        prob(i, j) = prob(j, i) = v;
        total += v;
        variance += v * (1.0 - v);
      }
    }
    s.edge_probability.push_back(std::move(prob));
    Matrix pc = acc.pcor_sums[k] / w;
    pc.diagonal().setOnes();
    s.partial_correlation.push_back(std::move(pc));
    s.sparsity[kk] = pairs > 0 ? total / pairs : 0.0;
    s.edge_variance[kk] = pairs > 0 ? variance / pairs : 0.0;
  }
  s.theta_draws = acc.theta_draws;
  if (acc.theta_draws > 0) {
    const double n = static_cast<double>(acc.theta_draws);
    s.alpha_mean = acc.alpha_sum / n;
    s.beta_mean = acc.beta_sum / n;
    s.c_mean = acc.c_sum / n;
    s.c_aligned_mean = acc.c_aligned_sum / n;
    s.gram_mean = acc.gram_sum / n;
  }
  return s;
}

namespace {

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data(), [](double x, double y) {
           return x == y || (std::isnan(x) && std::isnan(y));
         });
}

bool same(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same(a[i], b[i])) return false;
  return true;
}

}  // namespace

bool identical(const PosteriorSummary& a, const PosteriorSummary& b) {
  return same(a.edge_probability, b.edge_probability) && same(a.partial_correlation, b.partial_correlation) &&
         same(a.sparsity, b.sparsity) && same(a.edge_variance, b.edge_variance) && a.theta_draws == b.theta_draws &&
         same(a.alpha_mean, b.alpha_mean) && same(a.beta_mean, b.beta_mean) && same(a.c_mean, b.c_mean) &&
         same(a.c_aligned_mean, b.c_aligned_mean) && same(a.gram_mean, b.gram_mean);
}

std::vector<Matrix> accumulate_posterior(const std::vector<std::vector<BdState>>& history) {
  if (history.empty()) throw Error(ErrorCategory::empty_history, "no environments in the history");
  std::size_t p = 0;
  for (const auto& h : history) {
    if (h.empty()) throw Error(ErrorCategory::empty_history, "an environment has no retained states");
    p = h.front().graph.size();
  }
  PosteriorAccumulator acc(history.size(), p, 0);
  for (std::size_t k = 0; k < history.size(); ++k)
    for (const auto& st : history[k]) acc.add_state(k, st.graph, st.omega, st.waiting_time);
  return summarize(acc).edge_probability;
}

namespace {

std::vector<double> upper_triangle(const Matrix& m) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) v.push_back(m(i, j));
  return v;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

NetworkStatistics network_statistics(const PosteriorSummary& summary, double edge_threshold) {
  const std::size_t b = summary.edge_probability.size();
  if (b == 0) throw Error(ErrorCategory::empty_history, "summary has no environments");
  NetworkStatistics out;
  const auto bb = static_cast<Eigen::Index>(b);
  out.sharing = Matrix::Ones(bb, bb);
  out.pcor_correlation = Matrix::Ones(bb, bb);
  std::vector<std::vector<double>> probs, pcors;
  for (std::size_t k = 0; k < b; ++k) {
    probs.push_back(upper_triangle(summary.edge_probability[k]));
    pcors.push_back(upper_triangle(summary.partial_correlation[k]));
  }
  for (std::size_t a = 0; a < b; ++a) {
    for (std::size_t c = a + 1; c < b; ++c) {
      std::size_t both = 0, either = 0;
      for (std::size_t e = 0; e < probs[a].size(); ++e) {
        const bool ia = probs[a][e] > edge_threshold;
        const bool ic = probs[c][e] > edge_threshold;
        both += ia && ic;
        either += ia || ic;
      }
      const double share = either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
      const auto ai = static_cast<Eigen::Index>(a);
      const auto ci = static_cast<Eigen::Index>(c);
      out.sharing(ai, ci) = out.sharing(ci, ai) = share;
      out.pcor_correlation(ai, ci) = out.pcor_correlation(ci, ai) = pearson(pcors[a], pcors[c]);
    }
  }
  return out;
}

RocCurve roc_curve(const Matrix& edge_probability, const Graph& truth) {
  const std::size_t p = truth.size();
  if (static_cast<std::size_t>(edge_probability.rows()) != p || static_cast<std::size_t>(edge_probability.cols()) != p)
    throw Error(ErrorCategory::domain, "edge probabilities and truth differ in size");
  const std::size_t positives = truth.edge_count();
  const std::size_t negatives = num_pairs(p) - positives;
  if (positives == 0 || negatives == 0)
    throw Error(ErrorCategory::degenerate_truth, "the true graph is empty or complete");

  std::vector<std::pair<double, bool>> scored;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      scored.emplace_back(edge_probability(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                          truth.has_edge(i, j));
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0;
  for (std::size_t s = 0; s < scored.size();) {
    const double threshold = scored[s].first;
    for (; s < scored.size() && scored[s].first == threshold; ++s) (scored[s].second ? tp : fp) += 1;
    const double x = static_cast<double>(fp) / static_cast<double>(negatives);
    const double y = static_cast<double>(tp) / static_cast<double>(positives);
    roc.auc += 0.5 * (x - roc.fpr.back()) * (y + roc.tpr.back());
    roc.fpr.push_back(x);
    roc.tpr.push_back(y);
  }
  return roc;
}

}  // namespace rgm
