#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace idse {

inline constexpr int kMacroblockSize = 16;
inline constexpr int kSubblockSize = 4;
inline constexpr int kBlockPixels = kMacroblockSize * kMacroblockSize;  // n_pb

/// One 16x16 macroblock, row-major. This is the intra-block pixel order used
/// by the transform, the Jacobian block slices and the metrics.
using Block = std::array<double, kBlockPixels>;

/// Single-channel (luma) raster. Width and height are multiples of 16; the
/// size before padding is kept so the decoder can crop back.
class ImagePlane {
 public:
  ImagePlane(int width, int height, std::vector<double> samples);
  ImagePlane(int width, int height, std::vector<double> samples, int original_width,
             int original_height);

  /// Constant-valued plane.
  static ImagePlane filled(int width, int height, double value);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int original_width() const noexcept { return original_width_; }
  int original_height() const noexcept { return original_height_; }
  std::size_t pixel_count() const noexcept { return samples_.size(); }

  std::span<const double> samples() const noexcept { return samples_; }
  double at(int x, int y) const { return samples_[static_cast<std::size_t>(y) * width_ + x]; }

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

 private:
  int width_;
  int height_;
  int original_width_;
  int original_height_;
  std::vector<double> samples_;
};

/// Macroblock geometry of a padded plane, blocks in raster order.
class BlockGrid {
 public:
  BlockGrid(int width, int height);
  explicit BlockGrid(const ImagePlane& plane) : BlockGrid(plane.width(), plane.height()) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int blocks_x() const noexcept { return width_ / kMacroblockSize; }
  int blocks_y() const noexcept { return height_ / kMacroblockSize; }
  int block_count() const noexcept { return blocks_x() * blocks_y(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  /// Top-left pixel (x, y) of macroblock i.
  std::pair<int, int> block_origin(int block) const;

  /// Raster index in the plane of intra-block position k (row-major in the block).
  std::size_t pixel_index(int block, int k) const;

  /// Block containing raster pixel p.
  int block_of_pixel(std::size_t p) const;

  friend bool operator==(const BlockGrid&, const BlockGrid&) = default;

 private:
  int width_;
  int height_;
};

/// Per-pixel difference reconstructed - original.
using PixelError = std::vector<double>;

std::vector<Block> split_blocks(const ImagePlane& plane);

/// Inverse of split_blocks. Original size defaults to the padded size.
ImagePlane assemble_blocks(std::span<const Block> blocks, int width, int height,
                           int original_width = 0, int original_height = 0);

/// Binary P5 reader. Pads to the next multiple of 16 by edge replication.
ImagePlane load_pgm(const std::filesystem::path& path);
ImagePlane parse_pgm(std::span<const std::uint8_t> bytes);

/// Writes the cropped original-size region, rounding half away from zero and
/// clamping to [0, 255].
void save_pgm(const std::filesystem::path& path, const ImagePlane& plane);
std::vector<std::uint8_t> encode_pgm(const ImagePlane& plane);

/// 16-bit big-endian P5 (maxval 65535).
void save_pgm16(const std::filesystem::path& path, int width, int height,
                std::span<const std::uint16_t> samples);

/// 8-bit output sample for a real reconstruction value.
std::uint8_t to_8bit(double v) noexcept;

PixelError pixel_error(const ImagePlane& reconstructed, const ImagePlane& original);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace idse
