#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "rgm/stats.hpp"

namespace rgm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// Latent Gaussian scores z^(k) (n_k x p) together with the fixed cells
// (lower, upper] each score is confined to.
struct LatentGaussianState {
  std::vector<Matrix> z;
  std::vector<Matrix> lower;
  std::vector<Matrix> upper;

  std::size_t environments() const { return z.size(); }
  // True when every z entry lies inside its cell.
  bool contained() const;
};

// Feasible starting point: probability-space midpoint of every cell mapped
// back through the probit, with infinite ends read as the 1e-6 / 1 - 1e-6
// quantiles.
LatentGaussianState initial_latent_state(std::vector<Matrix> lower, std::vector<Matrix> upper);

struct ConditionalMoments {
  double mean;
  double variance;
};

// Full conditional of coordinate j given the rest of the row under N(0, omega^{-1}).
ConditionalMoments conditional_moments(const Matrix& omega, const Eigen::Ref<const RowVector>& z_row, std::size_t j);

// One coordinate sweep (j ascending) over a single row.
void gibbs_update_row(Eigen::Ref<RowVector> z_row, const Eigen::Ref<const RowVector>& lower,
                      const Eigen::Ref<const RowVector>& upper, const Matrix& omega, Rng& rng);

// Sweep over every row of environment k. Row i draws from
// make_stream(seed, {stream::latent, iteration, k, i}), so the result does
// not depend on `threads`.
void gibbs_update_z(LatentGaussianState& state, const Matrix& omega, std::size_t k, std::uint64_t seed,
                    std::uint64_t iteration, unsigned threads = 1);

// Same sweep with row streams seeded from `rng`.
void gibbs_update_z(LatentGaussianState& state, const Matrix& omega, std::size_t k, Rng& rng);

// Debug snapshot: 16-byte header {"RGMZ", uint32 rows, uint32 cols,
// uint32 dtype = 1 (float64)} followed by row-major little-endian doubles.
void write_matrix_snapshot(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_snapshot(const std::filesystem::path& path);

}  // namespace rgm
