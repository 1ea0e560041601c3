#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "idse/image.hpp"

namespace idse {

/// Orthonormal separable 2-D DCT-II of size 4 or 16.
struct TransformSpec {
  int size = kMacroblockSize;

  int coefficient_count() const noexcept { return size * size; }
};

/// Macroblock partition: one 16x16 transform or sixteen 4x4 transforms.
enum class Partition : std::uint8_t { whole16 = 0, split4 = 1 };

inline constexpr int kSubblocksPerMacroblock = 16;

/// size x size row-major matrix C with C[k][n] = a_k cos(pi (2n + 1) k / 2N).
const std::vector<double>& dct_basis(int size);

/// Y = C X C^T on a row-major block. Throws DomainError on size mismatch.
std::vector<double> dct_forward(std::span<const double> block, const TransformSpec& spec);
std::vector<double> dct_inverse(std::span<const double> coeffs, const TransformSpec& spec);
void dct_forward(std::span<const double> block, std::span<double> out, int size);
void dct_inverse(std::span<const double> coeffs, std::span<double> out, int size);

/// Zig-zag scan: position i of the scan holds the row-major coefficient index.
/// Odd anti-diagonals run down-left, even ones up-right (JPEG order).
const std::vector<int>& zigzag(int size);

/// Intra-macroblock pixel index of position k of 4x4 sub-block s (both row-major).
int subblock_pixel(int subblock, int k) noexcept;

/// Transform of a whole macroblock. For split4 the result is the sixteen 4x4
/// coefficient blocks concatenated in sub-block raster order.
Block forward_partition(const Block& pixels, Partition partition);
Block inverse_partition(const Block& coeffs, Partition partition);

}  // namespace idse
