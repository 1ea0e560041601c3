#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "idse/candidates.hpp"
#include "idse/image.hpp"

namespace idse {

/// Distortion metric recorded in the stream header. The payload does not
/// depend on it; decoding is identical for both.
enum class MetricKind : std::uint8_t { sse = 0, idse = 1 };

/// IDS1 header: magic | version u8 | width u32 | height u32 | orig_w u32 |
/// orig_h u32 | base_qp u8 | metric u8 | reserved u16, little-endian.
struct BitstreamHeader {
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kSize = 25;

  int width = 0;
  int height = 0;
  int original_width = 0;
  int original_height = 0;
  int base_qp = 0;
  MetricKind metric = MetricKind::sse;

  int block_count() const { return BlockGrid(width, height).block_count(); }

  friend bool operator==(const BitstreamHeader&, const BitstreamHeader&) = default;
};

struct DecodedStream {
  BitstreamHeader header;
  std::vector<MacroblockChoice> macroblocks;
  ImagePlane reconstruction;  // padded grid, real-valued, original size recorded
};

/// Header followed by the macroblock payloads in raster order, zero-padded to a byte.
std::vector<std::uint8_t> mux(const BitstreamHeader& header, std::span<const MacroblockChoice> macroblocks);

/// Parses and reconstructs a whole stream. Any truncation, trailing data or
/// nonzero padding raises FormatError; no partial image is returned.
DecodedStream demux(std::span<const std::uint8_t> bytes);

void write_bitstream(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
DecodedStream read_bitstream(const std::filesystem::path& path);

}  // namespace idse
