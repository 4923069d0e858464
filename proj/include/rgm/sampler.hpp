#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgm/bdmcmc.hpp"
#include "rgm/gwishart.hpp"
#include "rgm/posterior.hpp"
#include "rgm/random_graph.hpp"

namespace rgm {

enum class FitMode { rgm, independent_er };

std::string to_string(FitMode mode);
FitMode parse_fit_mode(const std::string& text);

struct McmcConfig {
  int structural_iterations = 10000;
  double retain_fraction = 0.25;
  // Overrides retain_fraction with an absolute tail length when set.
  std::optional<int> retain_count;
  int marginal_iterations = 50000;
  std::uint64_t seed = 1;
  // 0 disables checkpoints.
  int checkpoint_every = 0;
  FitMode mode = FitMode::rgm;
  // Constant prior edge probability in independent_er mode.
  std::optional<double> er_sparsity;
  unsigned threads = 1;
  int bd_moves = 1;
  double initial_sparsity = 0.05;
  double gwishart_df = 3.0;
  double theta_prior_variance = 10.0;
  RateOptions rates;
  GWishartOptions gwishart;
  double drift_tolerance = 0.05;

  void validate() const;
  int retained() const;
  int burn_in() const { return structural_iterations - retained(); }
};

// Input to the structural sampler. In Gaussian mode the latent scores are
// the observations themselves and are never resampled; otherwise every score
// moves inside its fixed cell (lower, upper].
struct StructuralData {
  std::size_t p = 0;
  std::vector<Matrix> observations;
  std::vector<Matrix> lower;
  std::vector<Matrix> upper;
  EdgeCovariates w;
  // Per-environment stream keys. Keyed by label rather than position, an
  // environment draws the same numbers whatever other environments are fitted
  // alongside it.
  std::vector<std::uint64_t> stream_keys;

  bool gaussian() const { return lower.empty(); }
  std::size_t environments() const { return gaussian() ? observations.size() : lower.size(); }
  void validate() const;

  static StructuralData from_gaussian(std::vector<Matrix> observations, EdgeCovariates w);
  static StructuralData from_intervals(std::vector<Matrix> lower, std::vector<Matrix> upper, EdgeCovariates w);
};

struct FitOptions {
  // Run directory for checkpoints; empty keeps everything in memory.
  std::filesystem::path run_dir;
  // Continue from the checkpoint in run_dir.
  bool resume = false;
  // Stop after this many iterations in this call (simulates an interrupt).
  std::optional<int> stop_after;
};

struct FitResult {
  PosteriorAccumulator accumulator;
  PosteriorSummary summary;
  // One row per retained iteration: iteration, alpha..., beta..., c (row-major).
  Matrix theta_trace;
  std::vector<std::string> theta_names;
  std::vector<std::string> warnings;
  int iterations_done = 0;
  bool complete = false;
};

FitResult fit(const StructuralData& data, const McmcConfig& config, const FitOptions& options = {});

std::vector<std::string> theta_parameter_names(std::size_t environments, const EdgeCovariates& w);

// Run-directory files.
inline constexpr const char* kStateFile = "state.json";
inline constexpr const char* kThetaTraceFile = "theta_trace.csv";

// Accumulator stored in a run directory's checkpoint.
PosteriorAccumulator load_accumulator(const std::filesystem::path& run_dir);

}  // namespace rgm
