#include "rgm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rgm/error.hpp"

namespace rgm {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan" || text == "NaN" || text == "NA") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf" || text == "Inf") return kInf;
  if (text == "-inf" || text == "-Inf") return -kInf;
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) throw Error(ErrorCategory::io, "not a number: '" + text + "'");
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::io, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<std::vector<std::string>> read_table(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& line : read_lines(path)) rows.push_back(split_tabs(line));
  if (rows.empty()) throw Error(ErrorCategory::io, path.string() + " is empty");
  for (const auto& r : rows)
    if (r.size() != rows.front().size()) throw Error(ErrorCategory::io, path.string() + " has ragged rows");
  return rows;
}

void write_tsv(const fs::path& path, const LabelledMatrix& m) {
  if (static_cast<Eigen::Index>(m.row_names.size()) != m.values.rows() ||
      static_cast<Eigen::Index>(m.col_names.size()) != m.values.cols())
    throw Error(ErrorCategory::domain, "labels do not match the matrix shape");
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, "cannot write " + path.string());
  out << m.corner;
  for (const auto& c : m.col_names) out << '\t' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    out << m.row_names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) out << '\t' << format_double(m.values(i, j));
    out << '\n';
  }
  if (!out) throw Error(ErrorCategory::io, "failed writing " + path.string());
}

LabelledMatrix read_tsv(const fs::path& path) {
  const auto rows = read_table(path);
  LabelledMatrix m;
  m.corner = rows.front().front();
  m.col_names.assign(rows.front().begin() + 1, rows.front().end());
  m.values.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(m.col_names.size()));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    m.row_names.push_back(rows[r].front());
    for (std::size_t c = 1; c < rows[r].size(); ++c)
      m.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) = parse_double(rows[r][c]);
  }
  return m;
}

EdgeCovariates taxonomy_edge_covariates(const TaxonomyTable& tax, const std::vector<std::string>& otu_order) {
  if (tax.otus.size() != tax.levels.size()) throw Error(ErrorCategory::validation, "taxonomy table is ragged");
  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t r = 0; r < tax.otus.size(); ++r) {
    if (!row.emplace(tax.otus[r], r).second)
      throw Error(ErrorCategory::validation, "duplicate OTU '" + tax.otus[r] + "' in taxonomy");
  }
  const std::size_t p = otu_order.size();
  EdgeCovariates w;
  w.p = p;
  w.names.assign(kTaxonomyNames.begin(), kTaxonomyNames.end());
  w.values = Matrix::Zero(static_cast<Eigen::Index>(num_pairs(p)), static_cast<Eigen::Index>(kTaxonomyLevels));
  Eigen::Index e = 0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j, ++e) {
      const auto a = row.find(otu_order[i]);
      const auto b = row.find(otu_order[j]);
      if (a == row.end() || b == row.end()) continue;
      for (std::size_t l = 0; l < kTaxonomyLevels; ++l) {
        const auto& va = tax.levels[a->second][l];
        const auto& vb = tax.levels[b->second][l];
        if (!va.empty() && va == vb) w.values(e, static_cast<Eigen::Index>(l)) = 1.0;
      }
    }
  }
  return w;
}

EdgeCovariates Dataset::edge_covariates_or_default() const {
  if (edge_covariates) return *edge_covariates;
  if (taxonomy) return taxonomy_edge_covariates(*taxonomy, otus);
  return EdgeCovariates::none(p());
}

namespace {

fs::path environment_file(const fs::path& dir, const std::string& label) { return dir / ("env_" + label + ".tsv"); }

EdgeCovariates read_edge_covariates(const fs::path& path, const std::vector<std::string>& otus) {
  const auto rows = read_table(path);
  const auto& header = rows.front();
  if (header.size() < 2 || header[0] != "otu_a" || header[1] != "otu_b")
    throw Error(ErrorCategory::io, path.string() + " must start with columns otu_a, otu_b");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < otus.size(); ++j) index.emplace(otus[j], j);
  EdgeCovariates w;
  w.p = otus.size();
  w.names.assign(header.begin() + 2, header.end());
  w.values = Matrix::Zero(static_cast<Eigen::Index>(num_pairs(w.p)), static_cast<Eigen::Index>(w.names.size()));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto a = index.find(rows[r][0]);
    const auto b = index.find(rows[r][1]);
    if (a == index.end() || b == index.end() || a->second == b->second)
      throw Error(ErrorCategory::validation, "edge covariate row names an unknown pair");
    const auto e = static_cast<Eigen::Index>(pair_index(w.p, a->second, b->second));
    for (std::size_t c = 2; c < rows[r].size(); ++c)
      w.values(e, static_cast<Eigen::Index>(c - 2)) = parse_double(rows[r][c]);
  }
  return w;
}

TaxonomyTable read_taxonomy(const fs::path& path) {
  const auto rows = read_table(path);
  if (rows.front().size() != kTaxonomyLevels + 1)
    throw Error(ErrorCategory::io, path.string() + " needs otu_id plus six taxonomy columns");
  TaxonomyTable t;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    t.otus.push_back(rows[r][0]);
    std::array<std::string, kTaxonomyLevels> lv;
    for (std::size_t l = 0; l < kTaxonomyLevels; ++l) lv[l] = rows[r][l + 1];
    t.levels.push_back(std::move(lv));
  }
  return t;
}

}  // namespace

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  ds.environments = read_lines(dir / "environments.txt");
  if (ds.environments.empty()) throw Error(ErrorCategory::validation, "environments.txt lists no environments");
  for (const auto& label : ds.environments) {
    LabelledMatrix m = read_tsv(environment_file(dir, label));
    if (ds.otus.empty()) {
      ds.otus = m.col_names;
    } else if (m.col_names != ds.otus) {
      throw Error(ErrorCategory::validation, "environment '" + label + "' has a different OTU set or order");
    }
    ds.values.push_back(std::move(m.values));
    ds.sample_ids.push_back(std::move(m.row_names));
  }

  if (fs::exists(dir / "samples.tsv")) {
    const auto rows = read_table(dir / "samples.tsv");
    const auto& header = rows.front();
    if (header.size() < 2 || header[0] != "sample_id" || header[1] != "environment")
      throw Error(ErrorCategory::io, "samples.tsv must start with columns sample_id, environment");
    ds.covariate_names.assign(header.begin() + 2, header.end());
    std::map<std::pair<std::string, std::string>, std::size_t> where;
    for (std::size_t r = 1; r < rows.size(); ++r) where[{rows[r][1], rows[r][0]}] = r;
    for (std::size_t k = 0; k < ds.size(); ++k) {
      Matrix cov(static_cast<Eigen::Index>(ds.sample_ids[k].size()), static_cast<Eigen::Index>(ds.covariate_names.size()));
      for (std::size_t i = 0; i < ds.sample_ids[k].size(); ++i) {
        const auto it = where.find({ds.environments[k], ds.sample_ids[k][i]});
        if (it == where.end())
          throw Error(ErrorCategory::validation, "sample '" + ds.sample_ids[k][i] + "' is missing from samples.tsv");
        for (std::size_t c = 0; c < ds.covariate_names.size(); ++c)
          cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = parse_double(rows[it->second][c + 2]);
      }
      ds.covariates.push_back(std::move(cov));
    }
  }
  if (fs::exists(dir / "edge_covariates.tsv")) ds.edge_covariates = read_edge_covariates(dir / "edge_covariates.tsv", ds.otus);
  if (fs::exists(dir / "taxonomy.tsv")) ds.taxonomy = read_taxonomy(dir / "taxonomy.tsv");
  return ds;
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "environments.txt");
    if (!out) throw Error(ErrorCategory::io, "cannot write " + dir.string());
    for (const auto& e : ds.environments) out << e << '\n';
  }
  for (std::size_t k = 0; k < ds.size(); ++k)
    write_tsv(environment_file(dir, ds.environments[k]), {"sample_id", ds.sample_ids[k], ds.otus, ds.values[k]});

  if (!ds.covariates.empty()) {
    std::ofstream out(dir / "samples.tsv");
    out << "sample_id\tenvironment";
    for (const auto& n : ds.covariate_names) out << '\t' << n;
    out << '\n';
    for (std::size_t k = 0; k < ds.size(); ++k) {
      for (std::size_t i = 0; i < ds.sample_ids[k].size(); ++i) {
        out << ds.sample_ids[k][i] << '\t' << ds.environments[k];
        for (Eigen::Index c = 0; c < ds.covariates[k].cols(); ++c)
          out << '\t' << format_double(ds.covariates[k](static_cast<Eigen::Index>(i), c));
        out << '\n';
      }
    }
  }
  if (ds.edge_covariates) {
    const auto& w = *ds.edge_covariates;
    std::ofstream out(dir / "edge_covariates.tsv");
    out << "otu_a\totu_b";
    for (const auto& n : w.names) out << '\t' << n;
    out << '\n';
    Eigen::Index e = 0;
    for (std::size_t i = 0; i < w.p; ++i) {
      for (std::size_t j = i + 1; j < w.p; ++j, ++e) {
        out << ds.otus[i] << '\t' << ds.otus[j];
        for (Eigen::Index c = 0; c < w.values.cols(); ++c) out << '\t' << format_double(w.values(e, c));
        out << '\n';
      }
    }
  }
  if (ds.taxonomy) {
    std::ofstream out(dir / "taxonomy.tsv");
    out << "otu_id";
    for (const auto* n : kTaxonomyNames) out << '\t' << n;
    out << '\n';
    for (std::size_t r = 0; r < ds.taxonomy->otus.size(); ++r) {
      out << ds.taxonomy->otus[r];
      for (const auto& v : ds.taxonomy->levels[r]) out << '\t' << v;
      out << '\n';
    }
  }
}

namespace {

bool is_count(double v) { return std::isfinite(v) && v >= 0.0 && v == std::floor(v); }

std::vector<std::vector<bool>> low_read_mask(const Dataset& ds, const ValidationOptions& options) {
  std::vector<std::vector<bool>> mask(ds.size());
  for (std::size_t k = 0; k < ds.size(); ++k) {
    mask[k].assign(static_cast<std::size_t>(ds.values[k].rows()), false);
    if (!options.counts || !(options.min_reads > 0.0)) continue;
    for (Eigen::Index i = 0; i < ds.values[k].rows(); ++i)
      mask[k][static_cast<std::size_t>(i)] = ds.values[k].row(i).sum() < options.min_reads;
  }
  return mask;
}

std::vector<bool> low_variation(const Dataset& ds, const std::vector<std::vector<bool>>& dropped, int min_distinct) {
  std::vector<bool> flag(ds.p(), false);
  for (std::size_t j = 0; j < ds.p(); ++j) {
    for (std::size_t k = 0; k < ds.size() && !flag[j]; ++k) {
      std::set<double> distinct;
      for (Eigen::Index i = 0; i < ds.values[k].rows(); ++i)
        if (!dropped[k][static_cast<std::size_t>(i)]) distinct.insert(ds.values[k](i, static_cast<Eigen::Index>(j)));
      flag[j] = static_cast<int>(distinct.size()) < min_distinct;
    }
  }
  return flag;
}

}  // namespace

ValidationReport validate(const Dataset& ds, const ValidationOptions& options) {
  ValidationReport report;
  if (ds.environments.empty()) report.problems.push_back("no environments");
  if (std::set<std::string>(ds.environments.begin(), ds.environments.end()).size() != ds.environments.size())
    report.problems.push_back("environment labels are not unique");
  if (std::set<std::string>(ds.otus.begin(), ds.otus.end()).size() != ds.otus.size())
    report.problems.push_back("OTU ids are not unique");
  if (ds.values.size() != ds.size() || ds.sample_ids.size() != ds.size())
    report.problems.push_back("environment tables do not match the environment list");
  if (!report.problems.empty()) return report;

  for (std::size_t k = 0; k < ds.size(); ++k) {
    const auto& v = ds.values[k];
    const auto& label = ds.environments[k];
    if (static_cast<std::size_t>(v.cols()) != ds.p())
      report.problems.push_back("environment '" + label + "' has " + std::to_string(v.cols()) + " columns, expected " +
                                std::to_string(ds.p()));
    if (static_cast<std::size_t>(v.rows()) != ds.sample_ids[k].size())
      report.problems.push_back("environment '" + label + "' has mismatched sample ids");
    if (v.rows() < options.min_samples)
      report.problems.push_back("environment '" + label + "' has fewer than " + std::to_string(options.min_samples) +
                                " samples");
    if (options.counts && !v.unaryExpr([](double x) { return is_count(x) ? 0.0 : 1.0; }).isZero())
      report.problems.push_back("environment '" + label + "' has values that are not non-negative integers");
    if (!options.counts && !v.allFinite()) report.problems.push_back("environment '" + label + "' has non-finite values");
    if (!ds.covariates.empty() && ds.covariates[k].rows() != v.rows())
      report.problems.push_back("sample metadata for '" + label + "' does not match its table");
  }
  if (ds.edge_covariates && ds.edge_covariates->p != ds.p())
    report.problems.push_back("edge covariates do not match the OTU count");
  if (!report.problems.empty()) return report;

  const auto dropped = low_read_mask(ds, options);
  for (std::size_t k = 0; k < ds.size(); ++k)
    for (std::size_t i = 0; i < dropped[k].size(); ++i)
      if (dropped[k][i]) report.low_read_samples.emplace_back(ds.environments[k], ds.sample_ids[k][i]);
  const auto flat = low_variation(ds, dropped, options.min_distinct);
  for (std::size_t j = 0; j < ds.p(); ++j)
    if (flat[j]) report.low_variation_otus.push_back(ds.otus[j]);
  return report;
}

Dataset apply_filters(const Dataset& ds, const ValidationOptions& options) {
  const ValidationReport report = validate(ds, options);
  if (!report.problems.empty()) throw Error(ErrorCategory::validation, report.problems.front());
  const auto dropped = low_read_mask(ds, options);
  const auto flat = low_variation(ds, dropped, options.min_distinct);

  std::vector<Eigen::Index> keep_cols;
  Dataset out;
  out.environments = ds.environments;
  for (std::size_t j = 0; j < ds.p(); ++j) {
    if (flat[j]) continue;
    keep_cols.push_back(static_cast<Eigen::Index>(j));
    out.otus.push_back(ds.otus[j]);
  }
  if (out.otus.size() < 2) throw Error(ErrorCategory::validation, "fewer than two OTUs survive filtering");
  out.covariate_names = ds.covariate_names;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < dropped[k].size(); ++i)
      if (!dropped[k][i]) rows.push_back(static_cast<Eigen::Index>(i));
    if (static_cast<int>(rows.size()) < options.min_samples)
      throw Error(ErrorCategory::validation, "environment '" + ds.environments[k] + "' has too few samples after filtering");
    out.values.push_back(ds.values[k](rows, keep_cols));
    std::vector<std::string> ids;
    for (auto r : rows) ids.push_back(ds.sample_ids[k][static_cast<std::size_t>(r)]);
    out.sample_ids.push_back(std::move(ids));
    if (!ds.covariates.empty()) out.covariates.push_back(ds.covariates[k](rows, Eigen::all));
  }
  if (ds.edge_covariates) {
    const auto& w = *ds.edge_covariates;
    EdgeCovariates sub;
    sub.p = keep_cols.size();
    sub.names = w.names;
    sub.values.resize(static_cast<Eigen::Index>(num_pairs(sub.p)), w.values.cols());
    Eigen::Index e = 0;
    for (std::size_t a = 0; a < keep_cols.size(); ++a)
      for (std::size_t b = a + 1; b < keep_cols.size(); ++b, ++e)
        sub.values.row(e) = w.values.row(static_cast<Eigen::Index>(
            pair_index(w.p, static_cast<std::size_t>(keep_cols[a]), static_cast<std::size_t>(keep_cols[b]))));
    out.edge_covariates = std::move(sub);
  }
  out.taxonomy = ds.taxonomy;
  return out;
}

std::uint64_t label_key(const std::string& label) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char ch : label) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

NodeCovariates marginal_design(const Dataset& ds, const MarginalDesign& design) {
  if (design.reference >= ds.size()) throw Error(ErrorCategory::config, "reference environment out of range");
  Eigen::Index n = 0;
  for (const auto& v : ds.values) n += v.rows();

  Vector lib;
  if (design.library_size != LibraryScale::none) {
    const auto it = std::find(ds.covariate_names.begin(), ds.covariate_names.end(), "library_size");
    lib.resize(n);
    if (it != ds.covariate_names.end()) {
      const auto c = static_cast<Eigen::Index>(it - ds.covariate_names.begin());
      Eigen::Index r = 0;
      for (const auto& cov : ds.covariates) {
        lib.segment(r, cov.rows()) = cov.col(c);
        r += cov.rows();
      }
    } else {
      Matrix pooled(n, static_cast<Eigen::Index>(ds.p()));
      Eigen::Index r = 0;
      for (const auto& v : ds.values) {
        pooled.middleRows(r, v.rows()) = v;
        r += v.rows();
      }
      lib = gmpr_size_factors(pooled);
    }
    if (design.library_size == LibraryScale::log) {
      if (!(lib.array() > 0.0).all()) throw Error(ErrorCategory::validation, "library sizes must be positive for the log scale");
      lib = lib.array().log().matrix();
    }
  }

  std::vector<std::size_t> sites;
  if (design.site_effects)
    for (std::size_t k = 0; k < ds.size(); ++k)
      if (k != design.reference) sites.push_back(k);

  NodeCovariates x;
  x.names.push_back("intercept");
  if (lib.size() > 0) x.names.push_back("library_size");
  for (auto k : sites) x.names.push_back("site_" + ds.environments[k]);
  if (lib.size() > 0)
    for (auto k : sites) x.names.push_back("site_" + ds.environments[k] + ":library_size");

  x.design = Matrix::Zero(n, static_cast<Eigen::Index>(x.names.size()));
  x.design.col(0).setOnes();
  Eigen::Index col = 1;
  if (lib.size() > 0) x.design.col(col++) = lib;
  Eigen::Index row = 0;
  std::vector<Eigen::Index> start(ds.size());
  for (std::size_t k = 0; k < ds.size(); ++k) {
    start[k] = row;
    row += ds.values[k].rows();
  }
  for (std::size_t s = 0; s < sites.size(); ++s) {
    const auto k = sites[s];
    const auto rows = ds.values[k].rows();
    x.design.block(start[k], col + static_cast<Eigen::Index>(s), rows, 1).setOnes();
    if (lib.size() > 0)
      x.design.block(start[k], col + static_cast<Eigen::Index>(sites.size() + s), rows, 1) = lib.segment(start[k], rows);
  }
  x.validate();
  return x;
}

namespace {

using boost::property_tree::ptree;

template <typename T>
T get_value(const ptree& node, const std::string& key) {
  try {
    return node.get_value<T>();
  } catch (const boost::property_tree::ptree_error&) {
    throw Error(ErrorCategory::config, "bad value for '" + key + "': '" + node.data() + "'");
  }
}

}  // namespace

RunConfig load_config(const fs::path& path) {
  ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCategory::config, e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      auto as_int = [&] { return get_value<long long>(node, name); };
      auto as_real = [&] { return get_value<double>(node, name); };
      auto as_bool = [&] { return get_value<bool>(node, name); };
      auto as_text = [&] { return node.data(); };
      if (section == "simulation") {
        auto& s = cfg.sim;
        if (key == "n") s.n = static_cast<std::size_t>(as_int());
        else if (key == "p") s.p = static_cast<std::size_t>(as_int());
        else if (key == "environments") s.environments = static_cast<std::size_t>(as_int());
        else if (key == "alpha_mean") s.alpha_mean = as_real();
        else if (key == "alpha_sd") s.alpha_sd = as_real();
        else if (key == "w_low") s.w_low = as_real();
        else if (key == "w_high") s.w_high = as_real();
        else if (key == "beta") s.beta = as_real();
        else if (key == "c_sd") s.c_sd = as_real();
        else if (key == "ensemble_sweeps") s.ensemble_sweeps = static_cast<int>(as_int());
        else if (key == "gwishart_df") s.gwishart_df = as_real();
        else if (key == "seed") s.seed = static_cast<std::uint64_t>(as_int());
        else if (key == "counts") cfg.sim_counts = as_bool();
        else if (key == "marginal_q") cfg.sim_q = as_real();
        else if (key == "marginal_b") cfg.sim_b = as_real();
        else throw Error(ErrorCategory::config, "unknown key '" + name + "'");
      } else if (section == "mcmc") {
        auto& m = cfg.mcmc;
        if (key == "iterations") m.structural_iterations = static_cast<int>(as_int());
        else if (key == "retain_fraction") m.retain_fraction = as_real();
        else if (key == "retain_count") m.retain_count = static_cast<int>(as_int());
        else if (key == "marginal_iterations") m.marginal_iterations = static_cast<int>(as_int());
        else if (key == "seed") m.seed = static_cast<std::uint64_t>(as_int());
        else if (key == "checkpoint_every") m.checkpoint_every = static_cast<int>(as_int());
        else if (key == "mode") m.mode = parse_fit_mode(as_text());
        else if (key == "er_sparsity") m.er_sparsity = as_real();
        else if (key == "threads") m.threads = static_cast<unsigned>(as_int());
        else if (key == "bd_moves") m.bd_moves = static_cast<int>(as_int());
        else if (key == "initial_sparsity") m.initial_sparsity = as_real();
        else if (key == "gwishart_df") m.gwishart_df = as_real();
        else if (key == "theta_prior_variance") m.theta_prior_variance = as_real();
        else if (key == "min_rate") m.rates.min_rate = as_real();
        else if (key == "refresh_rate") m.rates.refresh_rate = as_real();
        else if (key == "max_rate") m.rates.max_rate = as_real();
        else if (key == "drift_tolerance") m.drift_tolerance = as_real();
        else if (key == "gwishart_tolerance") m.gwishart.tolerance = as_real();
        else if (key == "gwishart_max_iterations") m.gwishart.max_iterations = static_cast<int>(as_int());
        else throw Error(ErrorCategory::config, "unknown key '" + name + "'");
      } else if (section == "marginal") {
        if (key == "iterations") cfg.marginal.iterations = static_cast<int>(as_int());
        else if (key == "proposal_sd") cfg.marginal.proposal_sd = as_real();
        else if (key == "burn_in_fraction") cfg.marginal.burn_in_fraction = as_real();
        else if (key == "seed") cfg.marginal.seed = static_cast<std::uint64_t>(as_int());
        else if (key == "threads") cfg.marginal_threads = static_cast<unsigned>(as_int());
        else if (key == "site_effects") cfg.design.site_effects = as_bool();
        else if (key == "reference") cfg.design.reference = static_cast<std::size_t>(as_int());
        else if (key == "library_size") {
          const auto v = as_text();
          if (v == "log") cfg.design.library_size = LibraryScale::log;
          else if (v == "raw") cfg.design.library_size = LibraryScale::raw;
          else if (v == "none") cfg.design.library_size = LibraryScale::none;
          else throw Error(ErrorCategory::config, "library_size must be log, raw or none");
        } else throw Error(ErrorCategory::config, "unknown key '" + name + "'");
      } else if (section == "validation") {
        if (key == "min_reads") cfg.validation.min_reads = as_real();
        else if (key == "min_distinct") cfg.validation.min_distinct = static_cast<int>(as_int());
        else if (key == "min_samples") cfg.validation.min_samples = static_cast<int>(as_int());
        else throw Error(ErrorCategory::config, "unknown key '" + name + "'");
      } else {
        throw Error(ErrorCategory::config, "unknown section '" + section + "'");
      }
    }
  }
  cfg.mcmc.validate();
  cfg.sim.validate();
  return cfg;
}

void write_marginals(const fs::path& path, const std::vector<std::string>& otus,
                     const std::vector<std::string>& design_names, const std::vector<MarginalFit>& fits) {
  if (fits.size() != otus.size()) throw Error(ErrorCategory::domain, "one marginal fit per OTU is required");
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::io, "cannot write " + path.string());
  out << "otu_id\tparameter_name\tposterior_mean\tposterior_sd\n";
  for (std::size_t j = 0; j < otus.size(); ++j) {
    const auto& f = fits[j];
    for (std::size_t c = 0; c < design_names.size(); ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      out << otus[j] << "\teta:" << design_names[c] << '\t' << format_double(f.posterior_mean.eta[cc]) << '\t'
          << format_double(f.eta_sd[cc]) << '\n';
    }
    for (std::size_t c = 0; c < design_names.size(); ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      out << otus[j] << "\tgamma:" << design_names[c] << '\t' << format_double(f.posterior_mean.gamma[cc]) << '\t'
          << format_double(f.gamma_sd[cc]) << '\n';
    }
  }
  if (!out) throw Error(ErrorCategory::io, "failed writing " + path.string());
}

std::vector<DwRegression> read_marginals(const fs::path& path, const std::vector<std::string>& otus,
                                         const std::vector<std::string>& design_names) {
  const auto rows = read_table(path);
  if (rows.front().size() < 3 || rows.front()[0] != "otu_id" || rows.front()[1] != "parameter_name")
    throw Error(ErrorCategory::io, path.string() + " is not a marginal fit table");
  std::map<std::pair<std::string, std::string>, double> value;
  for (std::size_t r = 1; r < rows.size(); ++r) value[{rows[r][0], rows[r][1]}] = parse_double(rows[r][2]);
  std::vector<DwRegression> out;
  const auto m = static_cast<Eigen::Index>(design_names.size());
  for (std::size_t j = 0; j < otus.size(); ++j) {
    DwRegression reg{j, Vector(m), Vector(m)};
    for (Eigen::Index c = 0; c < m; ++c) {
      const auto eta = value.find({otus[j], "eta:" + design_names[static_cast<std::size_t>(c)]});
      const auto gamma = value.find({otus[j], "gamma:" + design_names[static_cast<std::size_t>(c)]});
      if (eta == value.end() || gamma == value.end())
        throw Error(ErrorCategory::validation,
                    "marginal fits lack OTU '" + otus[j] + "' or column '" + design_names[static_cast<std::size_t>(c)] + "'");
      reg.eta[c] = eta->second;
      reg.gamma[c] = gamma->second;
    }
    out.push_back(std::move(reg));
  }
  return out;
}

}  // namespace rgm
