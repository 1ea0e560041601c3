#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "idse/entropy.hpp"
#include "idse/image.hpp"
#include "idse/transform.hpp"

namespace idse {

/// 9 quantizer offsets x 2 partitions.
inline constexpr int kCandidateCount = 18;

/// Side information per macroblock: 1 partition bit + 4-bit dqp.
inline constexpr int kSideInfoBits = 5;

/// Coding parameters of one macroblock as carried in the bitstream.
struct MacroblockChoice {
  Partition partition = Partition::whole16;
  int dqp = 0;
  std::vector<std::int32_t> levels;  // 256 levels, transform-block order (see forward_partition)
};

/// One (partition, dqp) option for a macroblock, fully coded.
struct CodingCandidate {
  MacroblockChoice choice;
  Block coeff_error{};  // dequantized minus source coefficients, transform order
  Block recon{};        // reconstructed pixels, intra-block row-major
  int bits = 0;         // exact payload size including side information
};

/// Index of (dqp, partition) in the candidate list: (dqp + 4) * 2 + partition.
constexpr int candidate_index(int dqp, Partition p) noexcept {
  return (dqp + 4) * 2 + static_cast<int>(p);
}

/// Source coefficients of a macroblock for both partitions.
struct BlockTransforms {
  Block whole16{};
  Block split4{};

  explicit BlockTransforms(const Block& pixels);
  const Block& of(Partition p) const noexcept { return p == Partition::whole16 ? whole16 : split4; }
};

/// Dequantize and inverse transform: the only reconstruction path, shared by
/// encoder and decoder.
Block reconstruct(const MacroblockChoice& choice, int base_qp);

/// Exact payload bits of a choice (side information plus entropy-coded levels).
int macroblock_bits(const MacroblockChoice& choice);

void write_macroblock(BitWriter& out, const MacroblockChoice& choice);
MacroblockChoice read_macroblock(BitReader& in);

/// All 18 candidates in candidate_index order.
std::vector<CodingCandidate> enumerate_candidates(const Block& pixels, int base_qp);
std::vector<CodingCandidate> enumerate_candidates(const BlockTransforms& source, int base_qp);

}  // namespace idse
