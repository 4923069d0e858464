#include "rgm/latent_copula.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "rgm/error.hpp"
#include "rgm/parallel.hpp"

namespace rgm {

bool LatentGaussianState::contained() const {
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!((z[k].array() > lower[k].array()).all() && (z[k].array() <= upper[k].array()).all())) return false;
  }
  return true;
}

namespace {

constexpr double kInitTail = 1e-6;

double initial_value(double lower, double upper) {
  const double p_lo = std::isinf(lower) ? kInitTail : normal_cdf(lower);
  const double p_hi = std::isinf(upper) ? 1.0 - kInitTail : normal_cdf(upper);
  const double z = normal_quantile(0.5 * (p_lo + p_hi));
  if (z > lower && z <= upper) return z;
  // Cells beyond the 1e-6 quantiles or too narrow to resolve in probability.
  if (std::isinf(lower)) return upper - 1.0;
  if (std::isinf(upper)) return lower + 1.0;
  return 0.5 * (lower + upper);
}

}  // namespace

LatentGaussianState initial_latent_state(std::vector<Matrix> lower, std::vector<Matrix> upper) {
  if (lower.size() != upper.size()) throw Error(ErrorCategory::domain, "interval bound lists differ in length");
  LatentGaussianState state;
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (lower[k].rows() != upper[k].rows() || lower[k].cols() != upper[k].cols())
      throw Error(ErrorCategory::domain, "interval bound matrices differ in shape");
    if (!(lower[k].array() < upper[k].array()).all())
      throw Error(ErrorCategory::domain, "every latent interval needs lower < upper");
    Matrix z(lower[k].rows(), lower[k].cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = initial_value(lower[k](i, j), upper[k](i, j));
    state.z.push_back(std::move(z));
  }
  state.lower = std::move(lower);
  state.upper = std::move(upper);
  return state;
}

ConditionalMoments conditional_moments(const Matrix& omega, const Eigen::Ref<const RowVector>& z_row, std::size_t j) {
  const auto jj = static_cast<Eigen::Index>(j);
  const double diag = omega(jj, jj);
  if (!(diag > 0.0)) throw Error(ErrorCategory::non_positive_definite, "precision diagonal must be positive");
  const double cross = omega.row(jj).dot(z_row) - diag * z_row[jj];
  return {-cross / diag, 1.0 / diag};
}

void gibbs_update_row(Eigen::Ref<RowVector> z_row, const Eigen::Ref<const RowVector>& lower,
                      const Eigen::Ref<const RowVector>& upper, const Matrix& omega, Rng& rng) {
  for (Eigen::Index j = 0; j < z_row.size(); ++j) {
    const auto m = conditional_moments(omega, z_row, static_cast<std::size_t>(j));
    z_row[j] = draw_truncated_normal(rng, m.mean, m.variance, lower[j], upper[j]);
  }
}

namespace {

void sweep_rows(LatentGaussianState& state, const Matrix& omega, std::size_t k, unsigned threads,
                const auto& make_row_rng) {
  if (k >= state.environments()) throw Error(ErrorCategory::domain, "environment index out of range");
  Matrix& z = state.z[k];
  if (omega.rows() != z.cols() || omega.cols() != z.cols())
    throw Error(ErrorCategory::domain, "precision matrix does not match latent dimension");
  const Matrix& lower = state.lower[k];
  const Matrix& upper = state.upper[k];
  parallel_for(static_cast<std::size_t>(z.rows()), threads, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    Rng rng = make_row_rng(i);
    RowVector row = z.row(r);
    gibbs_update_row(row, lower.row(r), upper.row(r), omega, rng);
    z.row(r) = row;
  });
}

}  // namespace

void gibbs_update_z(LatentGaussianState& state, const Matrix& omega, std::size_t k, std::uint64_t seed,
                    std::uint64_t iteration, unsigned threads) {
  sweep_rows(state, omega, k, threads,
             [&](std::size_t i) { return make_stream(seed, {stream::latent, iteration, k, i}); });
}

void gibbs_update_z(LatentGaussianState& state, const Matrix& omega, std::size_t k, Rng& rng) {
  const std::uint64_t base = rng();
  sweep_rows(state, omega, k, 1, [&](std::size_t i) { return make_stream(base, {i}); });
}

namespace {

constexpr std::array<char, 4> kSnapshotMagic{'R', 'G', 'M', 'Z'};
constexpr std::uint32_t kFloat64 = 1;

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

}  // namespace

void write_matrix_snapshot(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::io, "cannot open " + path.string() + " for writing");
  const auto rows = static_cast<std::uint32_t>(m.rows());
  const auto cols = static_cast<std::uint32_t>(m.cols());
  out.write(kSnapshotMagic.data(), 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(&kFloat64), 4);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = m;
  out.write(reinterpret_cast<const char*>(row_major.data()),
            static_cast<std::streamsize>(sizeof(double) * row_major.size()));
  if (!out) throw Error(ErrorCategory::io, "failed writing " + path.string());
}

Matrix read_matrix_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open " + path.string());
  std::array<char, 4> magic{};
  std::uint32_t rows = 0, cols = 0, dtype = 0;
  in.read(magic.data(), 4);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  in.read(reinterpret_cast<char*>(&dtype), 4);
  if (!in || magic != kSnapshotMagic || dtype != kFloat64)
    throw Error(ErrorCategory::io, path.string() + " is not a latent snapshot");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw Error(ErrorCategory::io, path.string() + " is truncated");
  return m;
}

}  // namespace rgm
