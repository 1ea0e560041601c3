#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace idse {

/// MSB-first bit packer.
class BitWriter {
 public:
  void put_bit(bool bit);
  void put_bits(std::uint64_t value, int count);
  void put_ue(std::uint64_t value);
  void put_se(std::int64_t value);

  std::size_t bit_count() const noexcept { return bits_; }

  /// Pads with zero bits to the next byte boundary and returns the bytes.
  std::vector<std::uint8_t> finish();

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

/// MSB-first bit reader over a byte range. Reading past the end throws FormatError.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool get_bit();
  std::uint64_t get_bits(int count);
  std::uint64_t get_ue();
  std::int64_t get_se();

  std::size_t bit_position() const noexcept { return pos_; }
  std::size_t bits_left() const noexcept { return bytes_.size() * 8 - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

/// Exp-Golomb code lengths.
int ue_bits(std::uint64_t value) noexcept;
int se_bits(std::int64_t value) noexcept;

/// Signed-to-unsigned mapping k > 0 -> 2k - 1, k <= 0 -> -2k.
std::uint64_t se_to_ue(std::int64_t value) noexcept;

/// One transform block, levels given in row-major order. Emits ue(n_nz) then,
/// in zig-zag order, ue(zero run before the coefficient) and se(level) for
/// every nonzero level.
void entropy_encode_block(BitWriter& out, std::span<const std::int32_t> levels, int size);
int entropy_block_bits(std::span<const std::int32_t> levels, int size);
std::vector<std::int32_t> entropy_decode_block(BitReader& in, int size);

}  // namespace idse
