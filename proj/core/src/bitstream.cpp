#include "idse/bitstream.hpp"

#include <string>

#include "idse/bytes.hpp"
#include "idse/entropy.hpp"
#include "idse/error.hpp"
#include "idse/quant.hpp"

namespace idse {

namespace {
constexpr std::string_view kStreamMagic = "IDS1";
}

std::vector<std::uint8_t> mux(const BitstreamHeader& header, std::span<const MacroblockChoice> macroblocks) {
  const BlockGrid grid(header.width, header.height);
  if (macroblocks.size() != static_cast<std::size_t>(grid.block_count())) {
    throw DomainError("macroblock count does not match the header grid");
  }
  if (header.base_qp < 0 || header.base_qp > kMaxQp) throw DomainError("base QP out of range");
  if (header.original_width <= 0 || header.original_width > header.width || header.original_height <= 0 ||
      header.original_height > header.height) {
    throw DomainError("original size must lie within the coded size");
  }
  ByteWriter w;
  w.raw(kStreamMagic);
  w.u8(BitstreamHeader::kVersion);
  w.u32(static_cast<std::uint32_t>(header.width));
  w.u32(static_cast<std::uint32_t>(header.height));
  w.u32(static_cast<std::uint32_t>(header.original_width));
  w.u32(static_cast<std::uint32_t>(header.original_height));
  w.u8(static_cast<std::uint8_t>(header.base_qp));
  w.u8(static_cast<std::uint8_t>(header.metric));
  w.u16(0);

  BitWriter bits;
  for (const MacroblockChoice& mb : macroblocks) write_macroblock(bits, mb);
  w.raw(bits.finish());
  return w.take();
}

DecodedStream demux(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "bitstream");
  if (r.str(4) != kStreamMagic) throw FormatError("bitstream: bad magic");
  const std::uint8_t version = r.u8();
  if (version != BitstreamHeader::kVersion) {
    throw FormatError("bitstream: unsupported version " + std::to_string(version));
  }
  BitstreamHeader h;
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  const std::uint32_t ow = r.u32();
  const std::uint32_t oh = r.u32();
  h.base_qp = r.u8();
  const std::uint8_t metric = r.u8();
  const std::uint16_t reserved = r.u16();
  if (width == 0 || height == 0 || width % kMacroblockSize != 0 || height % kMacroblockSize != 0 ||
      width > (1u << 16) || height > (1u << 16)) {
    throw FormatError("bitstream: invalid coded size");
  }
  if (ow == 0 || oh == 0 || ow > width || oh > height) throw FormatError("bitstream: invalid original size");
  if (h.base_qp > kMaxQp) throw FormatError("bitstream: base QP out of range");
  if (metric > 1) throw FormatError("bitstream: unknown metric id");
  if (reserved != 0) throw FormatError("bitstream: reserved field must be zero");
  h.width = static_cast<int>(width);
  h.height = static_cast<int>(height);
  h.original_width = static_cast<int>(ow);
  h.original_height = static_cast<int>(oh);
  h.metric = static_cast<MetricKind>(metric);

  const BlockGrid grid(h.width, h.height);
  BitReader bits(r.rest());
  std::vector<MacroblockChoice> macroblocks;
  macroblocks.reserve(static_cast<std::size_t>(grid.block_count()));
  std::vector<Block> recon;
  recon.reserve(static_cast<std::size_t>(grid.block_count()));
  for (int b = 0; b < grid.block_count(); ++b) {
    macroblocks.push_back(read_macroblock(bits));
    recon.push_back(reconstruct(macroblocks.back(), h.base_qp));
  }
  if (bits.bits_left() >= 8) throw FormatError("bitstream: trailing data after last macroblock");
  while (bits.bits_left() > 0) {
    if (bits.get_bit()) throw FormatError("bitstream: nonzero padding");
  }
  ImagePlane plane = assemble_blocks(recon, h.width, h.height, h.original_width, h.original_height);
  return DecodedStream{h, std::move(macroblocks), std::move(plane)};
}

void write_bitstream(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  write_file(path, bytes);
}

DecodedStream read_bitstream(const std::filesystem::path& path) { return demux(read_file(path)); }

}  // namespace idse
