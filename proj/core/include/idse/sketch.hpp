#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "idse/feature_map.hpp"
#include "idse/image.hpp"
#include "idse/linalg.hpp"
#include "idse/prng.hpp"

namespace idse {

/// Largest sketch height accepted when drawing Rademacher matrices.
inline constexpr int kMaxSketchRows = 64;

/// Default sketch height used by the codec and CLI.
inline constexpr int kDefaultSketchRows = 8;

/// Rademacher sketching matrix, entries +-1/sqrt(rows).
class SketchMatrix {
 public:
  explicit SketchMatrix(RowMatrix entries) : entries_(std::move(entries)) {}

  int rows() const noexcept { return static_cast<int>(entries_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
  const RowMatrix& entries() const noexcept { return entries_; }

 private:
  RowMatrix entries_;
};

/// n_s x n_p matrix S J_f(x) on a padded pixel grid. Columns are raster pixels.
class SketchedJacobian {
 public:
  SketchedJacobian(int width, int height, std::uint64_t seed, std::string source_tag,
                   RowMatrix entries);

  int rows() const noexcept { return static_cast<int>(entries_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  BlockGrid grid() const { return BlockGrid(width_, height_); }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& source_tag() const noexcept { return source_tag_; }
  const RowMatrix& entries() const noexcept { return entries_; }

  /// Same sketch with every entry multiplied by s.
  SketchedJacobian scaled(double s) const;

 private:
  int width_;
  int height_;
  std::uint64_t seed_;
  std::string source_tag_;
  RowMatrix entries_;
};

/// ceil(c_jl * ln(n_r + 1) / epsilon^2), at least 1.
int jl_dimension(int candidate_count, double epsilon, double c_jl = 1.0);

/// Row-major fill, one generator draw per entry (sign from the top bit).
SketchMatrix draw_sketch(int rows, std::size_t cols, Prng& prng);

/// Row i is s_i^T J_f(x), computed with one vector-Jacobian product per row.
SketchedJacobian sketch_jacobian(const FeatureMap& fe, const ImagePlane& x, const SketchMatrix& s,
                                 std::uint64_t seed, std::string source_tag);

/// Draws S from `seed` and sketches in one step.
SketchedJacobian sketch_jacobian(const FeatureMap& fe, const ImagePlane& x, int rows,
                                 std::uint64_t seed, std::string source_tag);

/// Unsketched Jacobian (S = I, n_s = n_f).
SketchedJacobian full_jacobian(const FeatureMap& fe, const ImagePlane& x, std::string source_tag);

/// n_p x n_p identity on the grid: IDSE with this sketch and tau = 0 is SSE.
SketchedJacobian identity_jacobian(int width, int height);

/// Columns of macroblock i in intra-block row-major order (n_s x 256).
RowMatrix block_slice(const SketchedJacobian& j, const BlockGrid& grid, int block);

/// Squared column norms, raster layout.
std::vector<double> importance_map(const SketchedJacobian& j);

/// Max-normalized 16-bit big-endian PGM of an importance map.
void export_importance_map(const std::filesystem::path& path, std::span<const double> map,
                           int width, int height);

/// Largest squared singular value by power iteration with a fixed-seed start
/// vector. Stops when the eigen-residual drops below tol times the estimate.
double spectral_norm_sq(const SketchedJacobian& j, double tol = 1e-6, int max_iter = 1000);
double spectral_norm_sq(const RowMatrix& m, double tol = 1e-6, int max_iter = 1000);

/// Squared Frobenius norm of every block slice.
std::vector<double> frobenius_sq_per_block(const SketchedJacobian& j, const BlockGrid& grid);

/// Throws GridMismatchError unless the sketch was computed on the plane's grid.
void check_grid(const SketchedJacobian& j, const ImagePlane& plane);

// SKJ1 interchange format.
std::vector<std::uint8_t> serialize_sketch(const SketchedJacobian& j);
SketchedJacobian parse_sketch(std::span<const std::uint8_t> bytes);
void write_sketch(const std::filesystem::path& path, const SketchedJacobian& j);
SketchedJacobian read_sketch(const std::filesystem::path& path);

}  // namespace idse
