#include "idse/candidates.hpp"

#include <span>

#include "idse/error.hpp"
#include "idse/quant.hpp"

namespace idse {

namespace {

int transform_size(Partition p) { return p == Partition::whole16 ? kMacroblockSize : kSubblockSize; }

int transform_blocks(Partition p) { return p == Partition::whole16 ? 1 : kSubblocksPerMacroblock; }

}  // namespace

BlockTransforms::BlockTransforms(const Block& pixels)
    : whole16(forward_partition(pixels, Partition::whole16)),
      split4(forward_partition(pixels, Partition::split4)) {}

Block reconstruct(const MacroblockChoice& choice, int base_qp) {
  if (choice.levels.size() != static_cast<std::size_t>(kBlockPixels)) {
    throw DomainError("macroblock needs 256 levels");
  }
  const double step = quant_step(base_qp, choice.dqp);
  Block coeffs{};
  for (int i = 0; i < kBlockPixels; ++i) coeffs[i] = dequantize(choice.levels[i], step);
  return inverse_partition(coeffs, choice.partition);
}

int macroblock_bits(const MacroblockChoice& choice) {
  const int size = transform_size(choice.partition);
  const int per = size * size;
  int bits = kSideInfoBits;
  for (int t = 0; t < transform_blocks(choice.partition); ++t) {
    bits += entropy_block_bits(std::span<const std::int32_t>(choice.levels).subspan(
                                   static_cast<std::size_t>(t) * per, static_cast<std::size_t>(per)),
                               size);
  }
  return bits;
}

void write_macroblock(BitWriter& out, const MacroblockChoice& choice) {
  if (choice.dqp < kMinDqp || choice.dqp > kMaxDqp) throw DomainError("dqp out of range");
  out.put_bit(choice.partition == Partition::split4);
  out.put_bits(static_cast<std::uint64_t>(choice.dqp) & 0xFu, 4);
  const int size = transform_size(choice.partition);
  const int per = size * size;
  for (int t = 0; t < transform_blocks(choice.partition); ++t) {
    entropy_encode_block(out,
                         std::span<const std::int32_t>(choice.levels)
                             .subspan(static_cast<std::size_t>(t) * per, static_cast<std::size_t>(per)),
                         size);
  }
}

MacroblockChoice read_macroblock(BitReader& in) {
  MacroblockChoice choice;
  choice.partition = in.get_bit() ? Partition::split4 : Partition::whole16;
  const auto raw = static_cast<int>(in.get_bits(4));
  choice.dqp = raw >= 8 ? raw - 16 : raw;  // 4-bit two's complement
  if (choice.dqp < kMinDqp || choice.dqp > kMaxDqp) throw FormatError("dqp out of range");
  const int size = transform_size(choice.partition);
  choice.levels.reserve(kBlockPixels);
  for (int t = 0; t < transform_blocks(choice.partition); ++t) {
    const auto block = entropy_decode_block(in, size);
    choice.levels.insert(choice.levels.end(), block.begin(), block.end());
  }
  return choice;
}

std::vector<CodingCandidate> enumerate_candidates(const BlockTransforms& source, int base_qp) {
  std::vector<CodingCandidate> out(kCandidateCount);
  for (int dqp = kMinDqp; dqp <= kMaxDqp; ++dqp) {
    const double step = quant_step(base_qp, dqp);
    for (Partition p : {Partition::whole16, Partition::split4}) {
      CodingCandidate& c = out[candidate_index(dqp, p)];
      c.choice.partition = p;
      c.choice.dqp = dqp;
      c.choice.levels.resize(kBlockPixels);
      const Block& y = source.of(p);
      for (int i = 0; i < kBlockPixels; ++i) {
        const std::int32_t level = quantize(y[i], step);
        c.choice.levels[i] = level;
        c.coeff_error[i] = dequantize(level, step) - y[i];
      }
      c.recon = reconstruct(c.choice, base_qp);
      c.bits = macroblock_bits(c.choice);
    }
  }
  return out;
}

std::vector<CodingCandidate> enumerate_candidates(const Block& pixels, int base_qp) {
  return enumerate_candidates(BlockTransforms(pixels), base_qp);
}

}  // namespace idse
