#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rgm/dw_marginals.hpp"
#include "rgm/error.hpp"
#include "rgm/io.hpp"
#include "rgm/parallel.hpp"
#include "rgm/posterior.hpp"
#include "rgm/sampler.hpp"
#include "rgm/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rgm;

namespace {

void emit(const std::string& level, const std::string& category, const std::string& message) {
  std::cerr << json{{"level", level}, {"category", category}, {"message", message}}.dump() << '\n';
}

void warn(const std::string& message) { emit("warning", "convergence", message); }

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::io, path.string() + ": " + e.what());
  }
}

LabelledMatrix square(const std::vector<std::string>& names, const Matrix& m, const std::string& corner) {
  return {corner, names, names, m};
}

// ---- simulate ----

int cmd_simulate(const std::string& config_path, const fs::path& out) {
  const RunConfig cfg = config_or_default(config_path);
  const auto& sc = cfg.sim;
  Dataset ds;
  ds.environments = numbered("env", sc.environments);
  ds.otus = numbered("otu", sc.p);
  SimResult sim;
  if (cfg.sim_counts) {
    std::vector<DwRegression> marginals;
    for (std::size_t j = 0; j < sc.p; ++j)
      marginals.push_back({j, Vector::Constant(1, logit(cfg.sim_q)), Vector::Constant(1, std::log(cfg.sim_b))});
    auto counts = simulate_counts(sc, marginals);
    ds.values = std::move(counts.counts);
    sim = std::move(counts.gaussian);
  } else {
    sim = simulate(sc);
    ds.values = sim.observations;
  }
  for (std::size_t k = 0; k < sc.environments; ++k) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < sc.n; ++i) ids.push_back(ds.environments[k] + "_s" + std::to_string(i + 1));
    ds.sample_ids.push_back(std::move(ids));
  }
  ds.edge_covariates = sim.truth.w;
  write_dataset(out, ds);

  const fs::path truth = out / "truth";
  fs::create_directories(truth);
  {
    std::ofstream th(truth / "theta.csv");
    th << "parameter_name,value\n";
    const auto& t = sim.truth.theta;
    for (std::size_t k = 0; k < sc.environments; ++k) th << "alpha_" << ds.environments[k] << ',' << format_double(t.alpha[static_cast<Eigen::Index>(k)]) << '\n';
    th << "beta_w," << format_double(t.beta[0]) << '\n';
    for (std::size_t k = 0; k < sc.environments; ++k)
      for (int d = 0; d < kLatentDim; ++d)
        th << "c_" << ds.environments[k] << '_' << d + 1 << ',' << format_double(t.c(static_cast<Eigen::Index>(k), d)) << '\n';
  }
  for (std::size_t k = 0; k < sc.environments; ++k) {
    const auto& g = sim.truth.graphs[k];
    Matrix adj = Matrix::Zero(static_cast<Eigen::Index>(sc.p), static_cast<Eigen::Index>(sc.p));
    for (std::size_t i = 0; i < sc.p; ++i)
      for (std::size_t j = 0; j < sc.p; ++j)
        if (i != j && g.has_edge(i, j)) adj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    write_tsv(truth / ("adjacency_" + ds.environments[k] + ".tsv"), square(ds.otus, adj, "otu_id"));
    write_tsv(truth / ("precision_" + ds.environments[k] + ".tsv"), square(ds.otus, sim.truth.precisions[k], "otu_id"));
  }
  write_tsv(truth / "gram.tsv", square(ds.environments, sim.truth.theta.c * sim.truth.theta.c.transpose(), "environment"));
  std::cout << "simulated " << sc.environments << " environments x " << sc.n << " samples x " << sc.p << " nodes into "
            << out.string() << '\n';
  return 0;
}

// ---- fit-marginals ----

std::vector<std::string> design_row_names(const Dataset& ds) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < ds.size(); ++k)
    for (const auto& s : ds.sample_ids[k]) names.push_back(ds.environments[k] + "/" + s);
  return names;
}

int cmd_fit_marginals(const fs::path& data, const fs::path& out, const std::string& config_path,
                      std::optional<int> iterations, const std::string& traces, std::optional<unsigned> threads) {
  RunConfig cfg = config_or_default(config_path);
  if (iterations) cfg.marginal.iterations = *iterations;
  if (threads) cfg.marginal_threads = *threads;
  cfg.validation.counts = true;
  const Dataset ds = apply_filters(read_dataset(data), cfg.validation);
  const NodeCovariates x = marginal_design(ds, cfg.design);

  const std::size_t p = ds.p();
  std::vector<MarginalFit> fits(p);
  MhConfig mh = cfg.marginal;
  mh.keep_trace = !traces.empty();
  parallel_for(p, cfg.marginal_threads, [&](std::size_t j) {
    std::vector<std::int64_t> y;
    for (const auto& v : ds.values)
      for (Eigen::Index i = 0; i < v.rows(); ++i) y.push_back(static_cast<std::int64_t>(v(i, static_cast<Eigen::Index>(j))));
    MhConfig local = mh;
    local.seed = mix64(cfg.marginal.seed ^ label_key(ds.otus[j]));
    fits[j] = fit_marginal_mh(y, x, local, j);
  });

  fs::create_directories(out);
  write_marginals(out / "marginals.tsv", ds.otus, x.names, fits);
  write_tsv(out / "design.tsv", {"sample", design_row_names(ds), x.names, x.design});
  std::ofstream report(out / "report.tsv");
  report << "otu_id\tacceptance_rate\tproposal_sd\twarnings\n";
  for (std::size_t j = 0; j < p; ++j) {
    std::string w;
    for (const auto& m : fits[j].warnings) {
      w += (w.empty() ? "" : "; ") + m;
      emit("warning", "convergence", ds.otus[j] + ": " + m);
    }
    report << ds.otus[j] << '\t' << format_double(fits[j].acceptance_rate) << '\t' << format_double(fits[j].proposal_sd)
           << '\t' << w << '\n';
  }
  if (!traces.empty()) {
    fs::create_directories(traces);
    for (std::size_t j = 0; j < p; ++j) {
      std::ofstream tr(fs::path(traces) / (ds.otus[j] + ".csv"));
      tr << "iteration";
      for (const auto& n : x.names) tr << ",eta:" << n;
      for (const auto& n : x.names) tr << ",gamma:" << n;
      tr << '\n';
      for (Eigen::Index r = 0; r < fits[j].trace.rows(); ++r) {
        tr << r;
        for (Eigen::Index c = 0; c < fits[j].trace.cols(); ++c) tr << ',' << format_double(fits[j].trace(r, c));
        tr << '\n';
      }
    }
  }
  std::cout << "fitted " << p << " marginals over " << x.samples() << " samples (" << x.width() << " columns)\n";
  return 0;
}

// ---- fit ----

Dataset select_environments(Dataset ds, const std::vector<std::string>& wanted) {
  if (wanted.empty()) return ds;
  Dataset out = ds;
  out.environments.clear();
  out.values.clear();
  out.sample_ids.clear();
  out.covariates.clear();
  for (const auto& label : wanted) {
    const auto it = std::find(ds.environments.begin(), ds.environments.end(), label);
    if (it == ds.environments.end()) throw Error(ErrorCategory::validation, "unknown environment '" + label + "'");
    const auto k = static_cast<std::size_t>(it - ds.environments.begin());
    out.environments.push_back(label);
    out.values.push_back(ds.values[k]);
    out.sample_ids.push_back(ds.sample_ids[k]);
    if (!ds.covariates.empty()) out.covariates.push_back(ds.covariates[k]);
  }
  return out;
}

int cmd_fit(const fs::path& data, const std::string& marginals, bool gaussian, const std::string& config_path,
            const fs::path& out, const std::string& mode, bool resume, std::optional<unsigned> threads,
            std::optional<int> stop_after, const std::vector<std::string>& environments) {
  if (gaussian == !marginals.empty())
    throw Error(ErrorCategory::config, "exactly one of --marginals and --gaussian is required");
  RunConfig cfg = config_or_default(config_path);
  if (!mode.empty()) cfg.mcmc.mode = parse_fit_mode(mode);
  if (threads) cfg.mcmc.threads = *threads;

  const Dataset raw = read_dataset(data);
  StructuralData sd;
  Dataset ds;
  if (gaussian) {
    ValidationOptions v = cfg.validation;
    v.counts = false;
    v.min_distinct = 0;
    ds = select_environments(raw, environments);
    const auto report = validate(ds, v);
    if (!report.problems.empty()) throw Error(ErrorCategory::validation, report.problems.front());
    sd = StructuralData::from_gaussian(ds.values, ds.edge_covariates_or_default());
  } else {
    ValidationOptions v = cfg.validation;
    v.counts = true;
    const Dataset filtered = apply_filters(raw, v);
    const LabelledMatrix design = read_tsv(fs::path(marginals) / "design.tsv");
    const auto regs = read_marginals(fs::path(marginals) / "marginals.tsv", filtered.otus, design.col_names);
    if (design.row_names != design_row_names(filtered))
      throw Error(ErrorCategory::validation, "marginal design rows do not match the filtered dataset");
    ds = select_environments(filtered, environments);
    std::vector<Matrix> lower, upper;
    std::size_t row0 = 0;
    for (std::size_t k = 0; k < filtered.size(); ++k) {
      const auto rows = filtered.values[k].rows();
      if (std::find(ds.environments.begin(), ds.environments.end(), filtered.environments[k]) != ds.environments.end()) {
        Matrix lo(rows, static_cast<Eigen::Index>(filtered.p()));
        Matrix up(rows, static_cast<Eigen::Index>(filtered.p()));
        for (Eigen::Index i = 0; i < rows; ++i) {
          const RowVector xrow = design.values.row(static_cast<Eigen::Index>(row0) + i);
          for (std::size_t j = 0; j < filtered.p(); ++j) {
            const auto cell = latent_interval(static_cast<std::int64_t>(filtered.values[k](i, static_cast<Eigen::Index>(j))),
                                              regs[j], xrow);
            lo(i, static_cast<Eigen::Index>(j)) = cell.lower;
            up(i, static_cast<Eigen::Index>(j)) = cell.upper;
          }
        }
        lower.push_back(std::move(lo));
        upper.push_back(std::move(up));
      }
      row0 += static_cast<std::size_t>(rows);
    }
    sd = StructuralData::from_intervals(std::move(lower), std::move(upper), ds.edge_covariates_or_default());
  }
  sd.stream_keys.clear();
  for (const auto& label : ds.environments) sd.stream_keys.push_back(label_key(label));

  fs::create_directories(out);
  write_json(out / "run.json", {{"environments", ds.environments},
                                {"otus", ds.otus},
                                {"mode", to_string(cfg.mcmc.mode)},
                                {"gaussian", gaussian},
                                {"edge_covariates", sd.w.names},
                                {"iterations", cfg.mcmc.structural_iterations},
                                {"retained", cfg.mcmc.retained()},
                                {"seed", cfg.mcmc.seed}});

  const FitResult result = fit(sd, cfg.mcmc, {out, resume, stop_after});
  for (const auto& w : result.warnings) warn(w);
  if (!result.complete) {
    std::cout << "stopped after " << result.iterations_done << " of " << cfg.mcmc.structural_iterations
              << " iterations; continue with --resume\n";
    return 0;
  }

  std::vector<std::string> names = result.theta_names;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    std::replace(names.begin(), names.end(), "alpha_" + std::to_string(k), "alpha_" + ds.environments[k]);
    std::replace(names.begin(), names.end(), "c_" + std::to_string(k) + "_1", "c_" + ds.environments[k] + "_1");
    std::replace(names.begin(), names.end(), "c_" + std::to_string(k) + "_2", "c_" + ds.environments[k] + "_2");
  }
  std::ofstream trace(out / kThetaTraceFile);
  trace << "iteration,parameter_name,value\n";
  for (Eigen::Index r = 0; r < result.theta_trace.rows(); ++r)
    for (std::size_t c = 0; c < names.size(); ++c)
      trace << static_cast<long long>(result.theta_trace(r, 0)) << ',' << names[c] << ','
            << format_double(result.theta_trace(r, static_cast<Eigen::Index>(c + 1))) << '\n';

  std::cout << "completed " << result.iterations_done << " iterations; mean sparsity";
  for (Eigen::Index k = 0; k < result.summary.sparsity.size(); ++k)
    std::cout << ' ' << ds.environments[static_cast<std::size_t>(k)] << '=' << result.summary.sparsity[k];
  std::cout << '\n';
  return 0;
}

// ---- summarize ----

struct RunInfo {
  std::vector<std::string> environments;
  std::vector<std::string> otus;
};

RunInfo read_run(const fs::path& run) {
  const json j = read_json(run / "run.json");
  return {j.at("environments").get<std::vector<std::string>>(), j.at("otus").get<std::vector<std::string>>()};
}

int cmd_summarize(const fs::path& run, const fs::path& out, double threshold) {
  const RunInfo info = read_run(run);
  const PosteriorSummary s = summarize(load_accumulator(run));
  if (s.edge_probability.size() != info.environments.size())
    throw Error(ErrorCategory::validation, "run metadata does not match its checkpoint");
  const NetworkStatistics stats = network_statistics(s, threshold);
  fs::create_directories(out);

  const std::size_t p = info.otus.size();
  for (std::size_t k = 0; k < info.environments.size(); ++k) {
    const auto& label = info.environments[k];
    write_tsv(out / ("edge_probabilities_" + label + ".tsv"), square(info.otus, s.edge_probability[k], "otu_id"));
    write_tsv(out / ("partial_correlations_" + label + ".tsv"), square(info.otus, s.partial_correlation[k], "otu_id"));
    struct Row {
      std::size_t i, j;
      double prob, pcor;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j)
        rows.push_back({i, j, s.edge_probability[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                        s.partial_correlation[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.prob > b.prob; });
    std::ofstream edges(out / ("edges_" + label + ".tsv"));
    edges << "otu_a\totu_b\tposterior_prob\tmean_partial_correlation\n";
    for (const auto& r : rows)
      edges << info.otus[r.i] << '\t' << info.otus[r.j] << '\t' << format_double(r.prob) << '\t'
            << format_double(r.pcor) << '\n';
  }
  write_tsv(out / "sharing.tsv", square(info.environments, stats.sharing, "environment"));
  write_tsv(out / "pcor_correlation.tsv", square(info.environments, stats.pcor_correlation, "environment"));
  {
    std::ofstream sp(out / "sparsity.tsv");
    sp << "environment\tsparsity\tedge_variance\n";
    for (std::size_t k = 0; k < info.environments.size(); ++k)
      sp << info.environments[k] << '\t' << format_double(s.sparsity[static_cast<Eigen::Index>(k)]) << '\t'
         << format_double(s.edge_variance[static_cast<Eigen::Index>(k)]) << '\n';
  }
  if (s.theta_draws > 0) {
    write_tsv(out / "gram.tsv", square(info.environments, s.gram_mean, "environment"));
    std::ofstream loc(out / "locations.tsv");
    loc << "environment\tc1\tc2\tc1_aligned\tc2_aligned\n";
    for (std::size_t k = 0; k < info.environments.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      loc << info.environments[k] << '\t' << format_double(s.c_mean(kk, 0)) << '\t' << format_double(s.c_mean(kk, 1))
          << '\t' << format_double(s.c_aligned_mean(kk, 0)) << '\t' << format_double(s.c_aligned_mean(kk, 1)) << '\n';
    }
    const json runj = read_json(run / "run.json");
    const auto covs = runj.value("edge_covariates", std::vector<std::string>{});
    std::ofstream th(out / "theta_means.csv");
    th << "parameter_name,value\n";
    for (std::size_t k = 0; k < info.environments.size(); ++k)
      th << "alpha_" << info.environments[k] << ',' << format_double(s.alpha_mean[static_cast<Eigen::Index>(k)]) << '\n';
    for (Eigen::Index l = 0; l < s.beta_mean.size(); ++l)
      th << "beta_" << (static_cast<std::size_t>(l) < covs.size() ? covs[static_cast<std::size_t>(l)] : std::to_string(l))
         << ',' << format_double(s.beta_mean[l]) << '\n';
  }
  std::cout << "sharing at threshold " << threshold << ":\n";
  for (std::size_t a = 0; a < info.environments.size(); ++a) {
    std::cout << info.environments[a];
    for (std::size_t b = 0; b < info.environments.size(); ++b)
      std::cout << '\t' << stats.sharing(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    std::cout << '\n';
  }
  return 0;
}

// ---- roc ----

int cmd_roc(const fs::path& run, const fs::path& truth, const fs::path& out) {
  const RunInfo info = read_run(run);
  const PosteriorSummary s = summarize(load_accumulator(run));
  std::ofstream csv(out);
  if (!csv) throw Error(ErrorCategory::io, "cannot write " + out.string());
  csv << "environment,fpr,tpr\n";
  double total = 0.0;
  for (std::size_t k = 0; k < info.environments.size(); ++k) {
    const auto& label = info.environments[k];
    const LabelledMatrix adj = read_tsv(truth / ("adjacency_" + label + ".tsv"));
    if (adj.col_names != info.otus) throw Error(ErrorCategory::validation, "truth OTUs differ from the run");
    Graph g(info.otus.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = i + 1; j < g.size(); ++j)
        g.set_edge(i, j, adj.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0);
    const RocCurve roc = roc_curve(s.edge_probability[k], g);
    for (std::size_t t = 0; t < roc.fpr.size(); ++t)
      csv << label << ',' << format_double(roc.fpr[t]) << ',' << format_double(roc.tpr[t]) << '\n';
    std::cout << label << "\tauc\t" << roc.auc << '\n';
    total += roc.auc;
  }
  std::cout << "mean\tauc\t" << total / static_cast<double>(info.environments.size()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint graphical models for multi-environment count data"};
  app.require_subcommand(1);

  std::string config, out, data, marginals, mode, run, truth, traces;
  bool gaussian = false, resume = false;
  std::optional<int> iterations, stop_after;
  std::optional<unsigned> threads;
  double threshold = 0.5;
  std::vector<std::string> environments;

  auto* sim = app.add_subcommand("simulate", "Simulate a dataset with ground truth");
  sim->add_option("--config", config, "Configuration file")->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output dataset directory")->required();

  auto* fm = app.add_subcommand("fit-marginals", "Fit discrete Weibull marginals");
  fm->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  fm->add_option("--out", out, "Output directory")->required();
  fm->add_option("--iterations", iterations, "MH iterations per OTU (default 50000)");
  fm->add_option("--config", config, "Configuration file")->check(CLI::ExistingFile);
  fm->add_option("--traces", traces, "Directory for per-OTU trace CSVs");
  fm->add_option("--threads", threads, "Worker threads");

  auto* ft = app.add_subcommand("fit", "Run the structural sampler");
  ft->add_option("--data", data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  auto* m_opt = ft->add_option("--marginals", marginals, "Marginal fit directory")->check(CLI::ExistingDirectory);
  auto* g_opt = ft->add_flag("--gaussian", gaussian, "Treat observations as the latent Gaussian scores");
  m_opt->excludes(g_opt);
  ft->add_option("--config", config, "Configuration file")->check(CLI::ExistingFile);
  ft->add_option("--out", out, "Run directory")->required();
  ft->add_option("--mode", mode, "rgm or independent-er")->check(CLI::IsMember({"rgm", "independent-er", "independent_er"}));
  ft->add_flag("--resume", resume, "Continue from the checkpoint in --out");
  ft->add_option("--threads", threads, "Worker threads");
  ft->add_option("--stop-after", stop_after, "Stop after this many iterations (checkpoint and exit)");
  ft->add_option("--environments", environments, "Fit only these environments")->delimiter(',');

  auto* sm = app.add_subcommand("summarize", "Posterior summaries and network statistics");
  sm->add_option("--run", run, "Run directory")->required()->check(CLI::ExistingDirectory);
  sm->add_option("--out", out, "Output directory")->required();
  sm->add_option("--edge-threshold", threshold, "Edge probability threshold for sharing");

  auto* rc = app.add_subcommand("roc", "ROC curves against true graphs");
  rc->add_option("--run", run, "Run directory")->required()->check(CLI::ExistingDirectory);
  rc->add_option("--truth", truth, "Directory with adjacency_<environment>.tsv")->required()->check(CLI::ExistingDirectory);
  rc->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit("error", "config", e.what());
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(config, out);
    if (*fm) return cmd_fit_marginals(data, out, config, iterations, traces, threads);
    if (*ft) return cmd_fit(data, marginals, gaussian, config, out, mode, resume, threads, stop_after, environments);
    if (*sm) return cmd_summarize(run, out, threshold);
    if (*rc) return cmd_roc(run, truth, out);
  } catch (const Error& e) {
    emit("error", std::string(to_string(e.category())), e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    emit("error", "io", e.what());
    return 1;
  } catch (const std::exception& e) {
    emit("error", "internal", e.what());
    return 1;
  }
  return 1;
}
