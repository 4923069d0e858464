#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgm/dw_marginals.hpp"
#include "rgm/random_graph.hpp"
#include "rgm/sampler.hpp"
#include "rgm/sim.hpp"

namespace rgm {

inline constexpr std::size_t kTaxonomyLevels = 6;
inline constexpr std::array<const char*, kTaxonomyLevels> kTaxonomyNames{"phylum", "class", "order",
                                                                          "family", "genus", "species"};

struct TaxonomyTable {
  std::vector<std::string> otus;
  std::vector<std::array<std::string, kTaxonomyLevels>> levels;
};

// w_l = 1 when both OTUs carry the same non-empty value at level l. OTUs are
// looked up by id, so the result follows `otu_order`; ids missing from the
// table never match.
EdgeCovariates taxonomy_edge_covariates(const TaxonomyTable& tax, const std::vector<std::string>& otu_order);

// On-disk layout of a dataset directory:
//   environments.txt     one label per line
//   env_<label>.tsv      header "sample_id<TAB>otu...", one row per sample
//   samples.tsv          optional: sample_id, environment, numeric covariates
//   edge_covariates.tsv  optional: otu_a, otu_b, one column per covariate
//   taxonomy.tsv         optional: otu_id, phylum .. species
struct Dataset {
  std::vector<std::string> environments;
  std::vector<std::string> otus;
  std::vector<Matrix> values;
  std::vector<std::vector<std::string>> sample_ids;
  // Sample metadata, aligned with sample_ids when present.
  std::vector<std::string> covariate_names;
  std::vector<Matrix> covariates;
  std::optional<EdgeCovariates> edge_covariates;
  std::optional<TaxonomyTable> taxonomy;

  std::size_t p() const { return otus.size(); }
  std::size_t size() const { return environments.size(); }
  // Edge covariates from the file, else from taxonomy, else none.
  EdgeCovariates edge_covariates_or_default() const;
};

Dataset read_dataset(const std::filesystem::path& dir);
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);

struct ValidationOptions {
  // Samples with fewer total reads are filtered; 0 disables the filter.
  double min_reads = 500.0;
  // OTUs need at least this many distinct values in every environment.
  int min_distinct = 3;
  int min_samples = 10;
  // Real-valued data skip the read filter.
  bool counts = true;
};

struct ValidationReport {
  std::vector<std::pair<std::string, std::string>> low_read_samples;  // (environment, sample_id)
  std::vector<std::string> low_variation_otus;
  std::vector<std::string> problems;  // dimension or labelling errors

  bool empty() const { return low_read_samples.empty() && low_variation_otus.empty() && problems.empty(); }
};

ValidationReport validate(const Dataset& ds, const ValidationOptions& options = {});
// Drops flagged samples first, then OTUs that are low-variation in the
// remaining samples. Throws a validation error if problems were reported.
Dataset apply_filters(const Dataset& ds, const ValidationOptions& options = {});

// Stable per-label stream key (FNV-1a).
std::uint64_t label_key(const std::string& label);

enum class LibraryScale { log, raw, none };

// Pooled design for the marginal regressions: intercept, library size,
// environment dummies against the reference environment and their
// interactions with library size (2B columns for B environments).
struct MarginalDesign {
  LibraryScale library_size = LibraryScale::log;
  bool site_effects = true;
  std::size_t reference = 0;
};

// Rows follow the dataset (environment order, then samples). Library size
// comes from a "library_size" metadata column when present, else GMPR.
NodeCovariates marginal_design(const Dataset& ds, const MarginalDesign& design);

struct RunConfig {
  SimConfig sim;
  // Count output for `simulate`: intercept-only marginals with these q, b.
  bool sim_counts = false;
  double sim_q = 0.5;
  double sim_b = 1.0;
  McmcConfig mcmc;
  MhConfig marginal;
  unsigned marginal_threads = 1;
  MarginalDesign design;
  ValidationOptions validation;
};

// key = value file with [simulation], [mcmc], [marginal], [validation]
// sections. Unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& path);

// Tab-separated matrix with a header row and row names in the first column.
struct LabelledMatrix {
  std::string corner;
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  Matrix values;
};

void write_tsv(const std::filesystem::path& path, const LabelledMatrix& m);
LabelledMatrix read_tsv(const std::filesystem::path& path);

// Shortest text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

// Marginal fits: one row per (otu_id, parameter_name) with posterior_mean and
// posterior_sd; parameter names are "eta:<column>" and "gamma:<column>".
void write_marginals(const std::filesystem::path& path, const std::vector<std::string>& otus,
                     const std::vector<std::string>& design_names, const std::vector<MarginalFit>& fits);
std::vector<DwRegression> read_marginals(const std::filesystem::path& path, const std::vector<std::string>& otus,
                                         const std::vector<std::string>& design_names);

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path);
std::vector<std::string> split_tabs(const std::string& line);

}  // namespace rgm
