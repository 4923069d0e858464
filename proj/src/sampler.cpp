#include "rgm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rgm/error.hpp"
#include "rgm/latent_copula.hpp"
#include "rgm/parallel.hpp"

namespace rgm {

using nlohmann::json;

std::string to_string(FitMode mode) { return mode == FitMode::rgm ? "rgm" : "independent_er"; }

FitMode parse_fit_mode(const std::string& text) {
  if (text == "rgm") return FitMode::rgm;
  if (text == "independent_er" || text == "independent-er") return FitMode::independent_er;
  throw Error(ErrorCategory::config, "unknown fit mode '" + text + "'");
}

void McmcConfig::validate() const {
  if (structural_iterations < 0) throw Error(ErrorCategory::config, "structural_iterations must be non-negative");
  if (!(retain_fraction > 0.0 && retain_fraction < 1.0))
    throw Error(ErrorCategory::config, "retain_fraction must lie in (0,1)");
  if (retain_count && *retain_count < 0) throw Error(ErrorCategory::config, "retain_count must be non-negative");
  if (checkpoint_every < 0) throw Error(ErrorCategory::config, "checkpoint_every must be non-negative");
  if (bd_moves < 1) throw Error(ErrorCategory::config, "bd_moves must be at least 1");
  if (threads < 1) throw Error(ErrorCategory::config, "threads must be at least 1");
  if (er_sparsity && !(*er_sparsity > 0.0 && *er_sparsity < 1.0))
    throw Error(ErrorCategory::config, "er_sparsity must lie in (0,1)");
  if (!(initial_sparsity > 0.0 && initial_sparsity < 1.0))
    throw Error(ErrorCategory::config, "initial_sparsity must lie in (0,1)");
  if (!(gwishart_df >= 3.0)) throw Error(ErrorCategory::config, "gwishart_df must be at least 3");
  if (!(theta_prior_variance > 0.0)) throw Error(ErrorCategory::config, "theta_prior_variance must be positive");
  if (!(rates.min_rate > 0.0 && rates.min_rate <= rates.max_rate))
    throw Error(ErrorCategory::config, "rate clamp bounds must satisfy 0 < min_rate <= max_rate");
  if (!(rates.refresh_rate >= 0.0)) throw Error(ErrorCategory::config, "refresh_rate must be non-negative");
}

int McmcConfig::retained() const {
  if (retain_count) return std::min(*retain_count, structural_iterations);
  return static_cast<int>(std::floor(retain_fraction * static_cast<double>(structural_iterations)));
}

void StructuralData::validate() const {
  const std::size_t b = environments();
  if (b == 0) throw Error(ErrorCategory::validation, "no environments to fit");
  if (p < 2) throw Error(ErrorCategory::validation, "at least two nodes are required");
  if (stream_keys.size() != b) throw Error(ErrorCategory::validation, "one stream key per environment is required");
  if (w.p != p) throw Error(ErrorCategory::validation, "edge covariates do not match the node count");
  if (w.dim() > 0 && static_cast<std::size_t>(w.values.rows()) != num_pairs(p))
    throw Error(ErrorCategory::validation, "edge covariates need one row per node pair");
  if (gaussian()) {
    for (const auto& x : observations) {
      if (static_cast<std::size_t>(x.cols()) != p) throw Error(ErrorCategory::validation, "observation width differs from p");
      if (!x.allFinite()) throw Error(ErrorCategory::validation, "observations must be finite");
    }
  } else {
    if (upper.size() != b) throw Error(ErrorCategory::validation, "interval bound lists differ in length");
    for (std::size_t k = 0; k < b; ++k) {
      if (static_cast<std::size_t>(lower[k].cols()) != p || lower[k].rows() != upper[k].rows() ||
          lower[k].cols() != upper[k].cols())
        throw Error(ErrorCategory::validation, "interval matrices do not match p");
    }
  }
}

namespace {

std::vector<std::uint64_t> index_keys(std::size_t n) {
  std::vector<std::uint64_t> keys(n);
  for (std::size_t k = 0; k < n; ++k) keys[k] = k;
  return keys;
}

}  // namespace

StructuralData StructuralData::from_gaussian(std::vector<Matrix> observations, EdgeCovariates w) {
  StructuralData d;
  d.p = observations.empty() ? 0 : static_cast<std::size_t>(observations.front().cols());
  d.stream_keys = index_keys(observations.size());
  d.observations = std::move(observations);
  d.w = std::move(w);
  return d;
}

StructuralData StructuralData::from_intervals(std::vector<Matrix> lower, std::vector<Matrix> upper, EdgeCovariates w) {
  StructuralData d;
  d.p = lower.empty() ? 0 : static_cast<std::size_t>(lower.front().cols());
  d.stream_keys = index_keys(lower.size());
  d.lower = std::move(lower);
  d.upper = std::move(upper);
  d.w = std::move(w);
  return d;
}

std::vector<std::string> theta_parameter_names(std::size_t environments, const EdgeCovariates& w) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < environments; ++k) names.push_back("alpha_" + std::to_string(k));
  for (std::size_t l = 0; l < w.dim(); ++l)
    names.push_back("beta_" + (l < w.names.size() ? w.names[l] : std::to_string(l)));
  for (std::size_t k = 0; k < environments; ++k) {
    names.push_back("c_" + std::to_string(k) + "_1");
    names.push_back("c_" + std::to_string(k) + "_2");
  }
  return names;
}

namespace {

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix json_matrix(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error(ErrorCategory::io, "malformed matrix in checkpoint");
  Matrix m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = data[idx++].get<double>();
  return m;
}

json config_json(const McmcConfig& c) {
  json j = {{"structural_iterations", c.structural_iterations},
            {"retain_fraction", c.retain_fraction},
            {"marginal_iterations", c.marginal_iterations},
            {"seed", c.seed},
            {"checkpoint_every", c.checkpoint_every},
            {"mode", to_string(c.mode)},
            {"bd_moves", c.bd_moves},
            {"initial_sparsity", c.initial_sparsity},
            {"gwishart_df", c.gwishart_df},
            {"theta_prior_variance", c.theta_prior_variance},
            {"min_rate", c.rates.min_rate},
            {"refresh_rate", c.rates.refresh_rate},
            {"max_rate", c.rates.max_rate},
            {"drift_tolerance", c.drift_tolerance}};
  j["retain_count"] = c.retain_count ? json(*c.retain_count) : json(nullptr);
  j["er_sparsity"] = c.er_sparsity ? json(*c.er_sparsity) : json(nullptr);
  return j;
}

json accumulator_json(const PosteriorAccumulator& a) {
  json pcor = json::array();
  for (const auto& m : a.pcor_sums) pcor.push_back(matrix_json(m));
  return {{"p", a.p},
          {"weight", matrix_json(a.weight)},
          {"edge_sums", matrix_json(a.edge_sums)},
          {"pcor_sums", std::move(pcor)},
          {"states", a.states},
          {"theta_draws", a.theta_draws},
          {"alpha_sum", matrix_json(a.alpha_sum)},
          {"beta_sum", matrix_json(a.beta_sum)},
          {"c_sum", matrix_json(a.c_sum)},
          {"c_aligned_sum", matrix_json(a.c_aligned_sum)},
          {"gram_sum", matrix_json(a.gram_sum)},
          {"c_reference", matrix_json(a.c_reference)}};
}

PosteriorAccumulator json_accumulator(const json& j) {
  PosteriorAccumulator a;
  a.p = j.at("p").get<std::size_t>();
  a.weight = json_matrix(j.at("weight"));
  a.edge_sums = json_matrix(j.at("edge_sums"));
  for (const auto& m : j.at("pcor_sums")) a.pcor_sums.push_back(json_matrix(m));
  a.states = j.at("states").get<std::vector<std::uint64_t>>();
  a.theta_draws = j.at("theta_draws").get<std::uint64_t>();
  a.alpha_sum = json_matrix(j.at("alpha_sum"));
  a.beta_sum = json_matrix(j.at("beta_sum"));
  a.c_sum = json_matrix(j.at("c_sum"));
  a.c_aligned_sum = json_matrix(j.at("c_aligned_sum"));
  a.gram_sum = json_matrix(j.at("gram_sum"));
  a.c_reference = json_matrix(j.at("c_reference"));
  if (a.c_reference.size() == 0) a.c_reference.resize(0, 0);
  return a;
}

json graph_json(const Graph& g) {
  json edges = json::array();
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = i + 1; j < g.size(); ++j)
      if (g.has_edge(i, j)) edges.push_back(pair_index(g.size(), i, j));
  return edges;
}

Graph json_graph(const json& j, std::size_t p) {
  Graph g(p);
  for (const auto& e : j) {
    const auto [a, b] = pair_nodes(p, e.get<std::size_t>());
    g.set_edge(a, b, true);
  }
  return g;
}

// Everything that evolves along the chain.
struct ChainState {
  int iteration = 0;
  RandomGraphParams theta;
  GraphEnsemble graphs;
  std::vector<Matrix> omega;
  std::vector<LatentGaussianState> latent;  // one single-environment state each
  PosteriorAccumulator acc;
  Matrix window_sum;
  Vector window_weight;
  Matrix previous_window;
  std::optional<double> last_drift;
  std::vector<std::vector<double>> trace;
  std::uint64_t clamped = 0;
};

std::filesystem::path z_path(const std::filesystem::path& dir, std::size_t k, int iteration) {
  return dir / ("z_" + std::to_string(k) + "_" + std::to_string(iteration) + ".bin");
}

void write_checkpoint(const std::filesystem::path& dir, const McmcConfig& config, const ChainState& s) {
  std::filesystem::create_directories(dir);
  json j;
  j["config"] = config_json(config);
  j["iteration"] = s.iteration;
  j["theta"] = {{"alpha", matrix_json(s.theta.alpha)}, {"beta", matrix_json(s.theta.beta)}, {"c", matrix_json(s.theta.c)}};
  json graphs = json::array(), omegas = json::array(), zs = json::array();
  for (std::size_t k = 0; k < s.graphs.size(); ++k) {
    graphs.push_back(graph_json(s.graphs[k]));
    omegas.push_back(matrix_json(s.omega[k]));
  }
  for (std::size_t k = 0; k < s.latent.size(); ++k) {
    const auto path = z_path(dir, k, s.iteration);
    write_matrix_snapshot(path, s.latent[k].z.front());
    zs.push_back(path.filename().string());
  }
  j["graphs"] = std::move(graphs);
  j["omega"] = std::move(omegas);
  j["z_files"] = std::move(zs);
  j["accumulator"] = accumulator_json(s.acc);
  j["window_sum"] = matrix_json(s.window_sum);
  j["window_weight"] = matrix_json(s.window_weight);
  j["previous_window"] = matrix_json(s.previous_window);
  j["last_drift"] = s.last_drift ? json(*s.last_drift) : json(nullptr);
  j["trace"] = s.trace;
  j["clamped"] = s.clamped;

  const auto tmp = dir / (std::string(kStateFile) + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorCategory::io, "cannot write checkpoint in " + dir.string());
    out << j.dump() << '\n';
    if (!out) throw Error(ErrorCategory::io, "failed writing checkpoint in " + dir.string());
  }
  std::filesystem::rename(tmp, dir / kStateFile);
  // Latent snapshots from earlier checkpoints are no longer referenced.
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("z_", 0) != 0 || entry.path().extension() != ".bin") continue;
    bool current = false;
    for (const auto& z : j["z_files"]) current = current || z.get<std::string>() == name;
    if (!current) std::filesystem::remove(entry.path());
  }
}

json read_state(const std::filesystem::path& dir) {
  std::ifstream in(dir / kStateFile);
  if (!in) throw Error(ErrorCategory::io, "no checkpoint in " + dir.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::io, std::string("corrupt checkpoint: ") + e.what());
  }
}

void load_checkpoint(const std::filesystem::path& dir, const McmcConfig& config, const StructuralData& data,
                     ChainState& s) {
  const json j = read_state(dir);
  json expected = config_json(config);
  json stored = j.at("config");
  // Checkpoint cadence may change between sessions.
  expected.erase("checkpoint_every");
  stored.erase("checkpoint_every");
  if (expected != stored) throw Error(ErrorCategory::config, "checkpoint was written with a different configuration");
  s.iteration = j.at("iteration").get<int>();
  s.theta.alpha = json_matrix(j.at("theta").at("alpha"));
  s.theta.beta = json_matrix(j.at("theta").at("beta"));
  s.theta.c = json_matrix(j.at("theta").at("c"));
  const auto& graphs = j.at("graphs");
  const auto& omegas = j.at("omega");
  if (graphs.size() != data.environments()) throw Error(ErrorCategory::config, "checkpoint environment count differs");
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    s.graphs[k] = json_graph(graphs[k], data.p);
    s.omega[k] = json_matrix(omegas[k]);
  }
  const auto& zs = j.at("z_files");
  if (zs.size() != s.latent.size()) throw Error(ErrorCategory::config, "checkpoint latent state does not match the data");
  for (std::size_t k = 0; k < zs.size(); ++k) {
    Matrix z = read_matrix_snapshot(dir / zs[k].get<std::string>());
    if (z.rows() != s.latent[k].z.front().rows() || z.cols() != s.latent[k].z.front().cols())
      throw Error(ErrorCategory::config, "checkpoint latent state does not match the data");
    s.latent[k].z.front() = std::move(z);
  }
  s.acc = json_accumulator(j.at("accumulator"));
  s.window_sum = json_matrix(j.at("window_sum"));
  s.window_weight = json_matrix(j.at("window_weight"));
  s.previous_window = json_matrix(j.at("previous_window"));
  if (!j.at("last_drift").is_null()) s.last_drift = j.at("last_drift").get<double>();
  s.trace = j.at("trace").get<std::vector<std::vector<double>>>();
  s.clamped = j.at("clamped").get<std::uint64_t>();
}

std::uint64_t environment_seed(std::uint64_t seed, std::uint64_t key) { return mix64(seed ^ mix64(key + 0x9e37)); }

void record_window(ChainState& s) {
  Matrix est = s.window_sum;
  for (Eigen::Index k = 0; k < est.rows(); ++k)
    if (s.window_weight[k] > 0.0) est.row(k) /= s.window_weight[k];
  if (s.previous_window.size() == est.size() && est.size() > 0)
    s.last_drift = (est - s.previous_window).cwiseAbs().maxCoeff();
  s.previous_window = est;
  s.window_sum.setZero();
  s.window_weight.setZero();
}

}  // namespace

PosteriorAccumulator load_accumulator(const std::filesystem::path& run_dir) {
  return json_accumulator(read_state(run_dir).at("accumulator"));
}

FitResult fit(const StructuralData& data, const McmcConfig& config, const FitOptions& options) {
  config.validate();
  data.validate();
  if (config.structural_iterations == 0) throw Error(ErrorCategory::empty_history, "zero structural iterations");

  const std::size_t b = data.environments();
  const std::size_t p = data.p;
  const auto pairs = static_cast<Eigen::Index>(num_pairs(p));
  const bool coupled = config.mode == FitMode::rgm;
  const int burn_in = config.burn_in();
  const GWishartParams gw_prior = GWishartParams::standard(p, config.gwishart_df);
  const ThetaPrior theta_prior{config.theta_prior_variance};
  const double er_sparsity = config.er_sparsity.value_or(config.initial_sparsity);

  std::vector<std::uint64_t> env_seed(b);
  for (std::size_t k = 0; k < b; ++k) env_seed[k] = environment_seed(config.seed, data.stream_keys[k]);

  ChainState s;
  s.theta = initial_params(b, data.w.dim(), config.initial_sparsity);
  s.graphs = empty_ensemble(b, p);
  s.omega.assign(b, Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
  if (!data.gaussian()) {
    for (std::size_t k = 0; k < b; ++k) s.latent.push_back(initial_latent_state({data.lower[k]}, {data.upper[k]}));
  }
  s.acc = PosteriorAccumulator(b, p, data.w.dim());
  s.window_sum = Matrix::Zero(static_cast<Eigen::Index>(b), pairs);
  s.window_weight = Vector::Zero(static_cast<Eigen::Index>(b));

  const bool persist = !options.run_dir.empty();
  if (persist && options.resume && std::filesystem::exists(options.run_dir / kStateFile))
    load_checkpoint(options.run_dir, config, data, s);

  const unsigned outer = static_cast<unsigned>(std::min<std::size_t>(config.threads, b));
  const unsigned inner = std::max(1u, config.threads / std::max(1u, outer));
  const int n_iter = config.structural_iterations;
  int ran = 0;

  while (s.iteration < n_iter && !(options.stop_after && ran >= *options.stop_after)) {
    const int t = s.iteration;
    const auto tt = static_cast<std::uint64_t>(t);
    const bool retained = t >= burn_in;

    if (coupled) {
      Rng rng = make_stream(config.seed, {stream::theta, tt});
      s.theta = gibbs_update_theta(s.graphs, s.theta, data.w, rng, theta_prior);
    }

    // Latent scores and precisions only touch their own environment.
    parallel_for(b, outer, [&](std::size_t k) {
      if (!data.gaussian()) gibbs_update_z(s.latent[k], s.omega[k], 0, env_seed[k], tt, inner);
      const Matrix& z = data.gaussian() ? data.observations[k] : s.latent[k].z.front();
      Rng rng = make_stream(env_seed[k], {stream::precision, tt});
      s.omega[k] = sample_gwishart_posterior(s.graphs[k], z, gw_prior, rng, config.gwishart);
    });

    // Graph moves run in environment order so each conditions on the
    // freshest state of the others.
    const GraphPrior prior =
        coupled ? GraphPrior::latent_probit(s.graphs, s.theta, data.w) : GraphPrior::erdos_renyi(er_sparsity);
    for (std::size_t k = 0; k < b; ++k) {
      const Matrix& z = data.gaussian() ? data.observations[k] : s.latent[k].z.front();
      for (int m = 0; m < config.bd_moves; ++m) {
        Rng rng = make_stream(env_seed[k], {stream::birth_death, tt, static_cast<std::uint64_t>(m)});
        const BdState current{s.graphs[k], s.omega[k], 1.0, k};
        BdStepInfo info;
        BdState next = bd_step(current, z, gw_prior, prior, rng, config.rates, config.gwishart, &info);
        s.clamped += info.clamped;
        if (retained) {
          s.acc.add_state(k, current.graph, current.omega, next.waiting_time);
          const auto kk = static_cast<Eigen::Index>(k);
          s.window_weight[kk] += next.waiting_time;
          Eigen::Index e = 0;
          for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j, ++e)
              if (current.graph.has_edge(i, j)) s.window_sum(kk, e) += next.waiting_time;
        }
        s.graphs[k] = std::move(next.graph);
        s.omega[k] = std::move(next.omega);
      }
    }

    if (retained && coupled) {
      s.acc.add_theta(s.theta);
      std::vector<double> row{static_cast<double>(t)};
      row.insert(row.end(), s.theta.alpha.data(), s.theta.alpha.data() + s.theta.alpha.size());
      row.insert(row.end(), s.theta.beta.data(), s.theta.beta.data() + s.theta.beta.size());
      for (Eigen::Index k = 0; k < s.theta.c.rows(); ++k)
        for (Eigen::Index d = 0; d < s.theta.c.cols(); ++d) row.push_back(s.theta.c(k, d));
      s.trace.push_back(std::move(row));
    }

    ++s.iteration;
    ++ran;
    const bool boundary = config.checkpoint_every > 0 && s.iteration % config.checkpoint_every == 0;
    if (boundary && retained) record_window(s);
    if (boundary && persist) write_checkpoint(options.run_dir, config, s);
  }

  FitResult result;
  result.iterations_done = s.iteration;
  result.complete = s.iteration >= n_iter;
  if (persist) write_checkpoint(options.run_dir, config, s);
  result.accumulator = s.acc;
  result.theta_names = theta_parameter_names(b, data.w);
  const auto width = static_cast<Eigen::Index>(1 + result.theta_names.size());
  result.theta_trace.resize(static_cast<Eigen::Index>(s.trace.size()), width);
  for (std::size_t r = 0; r < s.trace.size(); ++r)
    for (Eigen::Index c = 0; c < width; ++c) result.theta_trace(static_cast<Eigen::Index>(r), c) = s.trace[r][c];

  if (!result.complete) return result;
  if (s.last_drift && *s.last_drift > config.drift_tolerance) {
    std::ostringstream msg;
    msg << "possible non-convergence: edge probabilities moved by " << *s.last_drift
        << " between the last two checkpoint windows";
    result.warnings.push_back(msg.str());
  }
  if (s.clamped > 0)
    result.warnings.push_back(std::to_string(s.clamped) + " birth-death rates were clamped to the configured bounds");
  result.summary = summarize(s.acc);
  return result;
}

}  // namespace rgm
