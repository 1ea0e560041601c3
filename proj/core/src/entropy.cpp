#include "idse/entropy.hpp"

#include <bit>
#include <limits>
#include <string>

#include "idse/error.hpp"
#include "idse/transform.hpp"

namespace idse {

namespace {
constexpr int kMaxLeadingZeros = 40;
}

void BitWriter::put_bit(bool bit) {
  if (bits_ % 8 == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
  ++bits_;
}

void BitWriter::put_bits(std::uint64_t value, int count) {
  for (int i = count - 1; i >= 0; --i) put_bit(((value >> i) & 1u) != 0);
}

void BitWriter::put_ue(std::uint64_t value) {
  const std::uint64_t v = value + 1;
  const int len = std::bit_width(v) - 1;
  put_bits(0, len);
  put_bits(v, len + 1);
}

void BitWriter::put_se(std::int64_t value) { put_ue(se_to_ue(value)); }

std::vector<std::uint8_t> BitWriter::finish() {
  bits_ = bytes_.size() * 8;
  return bytes_;
}

bool BitReader::get_bit() {
  if (pos_ >= bytes_.size() * 8) throw FormatError("bitstream truncated");
  const bool bit = ((bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u) != 0;
  ++pos_;
  return bit;
}

std::uint64_t BitReader::get_bits(int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | (get_bit() ? 1u : 0u);
  return v;
}

std::uint64_t BitReader::get_ue() {
  int zeros = 0;
  while (!get_bit()) {
    if (++zeros > kMaxLeadingZeros) throw FormatError("invalid Exp-Golomb prefix");
  }
  const std::uint64_t suffix = get_bits(zeros);
  return ((std::uint64_t{1} << zeros) | suffix) - 1;
}

std::int64_t BitReader::get_se() {
  const std::uint64_t k = get_ue();
  const auto half = static_cast<std::int64_t>((k + 1) / 2);
  return (k % 2 == 1) ? half : -half;
}

int ue_bits(std::uint64_t value) noexcept { return 2 * (std::bit_width(value + 1) - 1) + 1; }

std::uint64_t se_to_ue(std::int64_t value) noexcept {
  return value > 0 ? 2 * static_cast<std::uint64_t>(value) - 1 : 2 * static_cast<std::uint64_t>(-value);
}

int se_bits(std::int64_t value) noexcept { return ue_bits(se_to_ue(value)); }

void entropy_encode_block(BitWriter& out, std::span<const std::int32_t> levels, int size) {
  const auto& scan = zigzag(size);
  if (levels.size() != scan.size()) throw DomainError("level count does not match block size");
  std::uint64_t nonzero = 0;
  for (std::int32_t l : levels) nonzero += l != 0 ? 1 : 0;
  out.put_ue(nonzero);
  std::uint64_t run = 0;
  for (int idx : scan) {
    const std::int32_t l = levels[static_cast<std::size_t>(idx)];
    if (l == 0) {
      ++run;
      continue;
    }
    out.put_ue(run);
    out.put_se(l);
    run = 0;
  }
}

int entropy_block_bits(std::span<const std::int32_t> levels, int size) {
  const auto& scan = zigzag(size);
  if (levels.size() != scan.size()) throw DomainError("level count does not match block size");
  int bits = 0;
  std::uint64_t nonzero = 0;
  std::uint64_t run = 0;
  for (int idx : scan) {
    const std::int32_t l = levels[static_cast<std::size_t>(idx)];
    if (l == 0) {
      ++run;
      continue;
    }
    bits += ue_bits(run) + se_bits(l);
    ++nonzero;
    run = 0;
  }
  return bits + ue_bits(nonzero);
}

std::vector<std::int32_t> entropy_decode_block(BitReader& in, int size) {
  const auto& scan = zigzag(size);
  std::vector<std::int32_t> levels(scan.size(), 0);
  const std::uint64_t nonzero = in.get_ue();
  if (nonzero > scan.size()) throw FormatError("coefficient count exceeds block size");
  std::size_t pos = 0;
  for (std::uint64_t i = 0; i < nonzero; ++i) {
    const std::uint64_t run = in.get_ue();
    if (run >= scan.size() - pos) throw FormatError("zero run overflows block");
    pos += run;
    const std::int64_t l = in.get_se();
    if (l == 0 || l > std::numeric_limits<std::int32_t>::max() || l < std::numeric_limits<std::int32_t>::min()) {
      throw FormatError("invalid coefficient level");
    }
    levels[static_cast<std::size_t>(scan[pos])] = static_cast<std::int32_t>(l);
    ++pos;
  }
  return levels;
}

}  // namespace idse
