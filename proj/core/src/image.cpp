#include "idse/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "idse/error.hpp"

namespace idse {

namespace {

bool valid_dimension(int v) { return v > 0 && v % kMacroblockSize == 0; }

int padded(int v) { return (v + kMacroblockSize - 1) / kMacroblockSize * kMacroblockSize; }

}  // namespace

ImagePlane::ImagePlane(int width, int height, std::vector<double> samples)
    : ImagePlane(width, height, std::move(samples), width, height) {}

ImagePlane::ImagePlane(int width, int height, std::vector<double> samples, int original_width,
                       int original_height)
    : width_(width),
      height_(height),
      original_width_(original_width),
      original_height_(original_height),
      samples_(std::move(samples)) {
  if (!valid_dimension(width) || !valid_dimension(height)) {
    throw DomainError("image dimensions must be positive multiples of 16, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  if (samples_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DomainError("sample count does not match image dimensions");
  }
  if (original_width <= 0 || original_width > width || original_height <= 0 ||
      original_height > height) {
    throw DomainError("original size must lie within the padded size");
  }
}

ImagePlane ImagePlane::filled(int width, int height, double value) {
  return ImagePlane(width, height,
                    std::vector<double>(static_cast<std::size_t>(width) * height, value));
}

BlockGrid::BlockGrid(int width, int height) : width_(width), height_(height) {
  if (!valid_dimension(width) || !valid_dimension(height)) {
    throw DomainError("block grid dimensions must be positive multiples of 16");
  }
}

std::pair<int, int> BlockGrid::block_origin(int block) const {
  if (block < 0 || block >= block_count()) throw DomainError("block index out of range");
  return {(block % blocks_x()) * kMacroblockSize, (block / blocks_x()) * kMacroblockSize};
}

std::size_t BlockGrid::pixel_index(int block, int k) const {
  const auto [x0, y0] = block_origin(block);
  const int y = y0 + k / kMacroblockSize;
  const int x = x0 + k % kMacroblockSize;
  return static_cast<std::size_t>(y) * width_ + x;
}

int BlockGrid::block_of_pixel(std::size_t p) const {
  const int y = static_cast<int>(p / width_);
  const int x = static_cast<int>(p % width_);
  return (y / kMacroblockSize) * blocks_x() + x / kMacroblockSize;
}

std::vector<Block> split_blocks(const ImagePlane& plane) {
  const BlockGrid grid(plane);
  std::vector<Block> blocks(grid.block_count());
  const auto samples = plane.samples();
  for (int b = 0; b < grid.block_count(); ++b) {
    for (int k = 0; k < kBlockPixels; ++k) blocks[b][k] = samples[grid.pixel_index(b, k)];
  }
  return blocks;
}

ImagePlane assemble_blocks(std::span<const Block> blocks, int width, int height,
                           int original_width, int original_height) {
  const BlockGrid grid(width, height);
  if (blocks.size() != static_cast<std::size_t>(grid.block_count())) {
    throw DomainError("block count does not match grid");
  }
  std::vector<double> samples(grid.pixel_count());
  for (int b = 0; b < grid.block_count(); ++b) {
    for (int k = 0; k < kBlockPixels; ++k) samples[grid.pixel_index(b, k)] = blocks[b][k];
  }
  return ImagePlane(width, height, std::move(samples), original_width > 0 ? original_width : width,
                    original_height > 0 ? original_height : height);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    std::string t;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) t.push_back(static_cast<char>(bytes_[pos_++]));
    if (t.empty()) throw FormatError("PGM header truncated");
    return t;
  }

  int integer() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
        t.size() > 9) {
      throw FormatError("PGM header field is not a number: " + t);
    }
    return std::stoi(t);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw FormatError("PGM header truncated");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ImagePlane parse_pgm(std::span<const std::uint8_t> bytes) {
  PgmHeaderReader reader(bytes);
  const std::string magic = reader.token();
  if (magic != "P5") throw FormatError("unsupported PGM variant '" + magic + "', expected P5");
  const int w = reader.integer();
  const int h = reader.integer();
  const int maxval = reader.integer();
  if (w <= 0 || h <= 0) throw FormatError("PGM dimensions must be positive");
  if (maxval != 255) throw FormatError("PGM maxval must be 255, got " + std::to_string(maxval));
  const std::size_t offset = reader.raster_offset();
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - offset < need) throw FormatError("PGM payload truncated");

  const int pw = padded(w);
  const int ph = padded(h);
  std::vector<double> samples(static_cast<std::size_t>(pw) * ph);
  for (int y = 0; y < ph; ++y) {
    const int sy = std::min(y, h - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(x, w - 1);
      samples[static_cast<std::size_t>(y) * pw + x] = bytes[offset + static_cast<std::size_t>(sy) * w + sx];
    }
  }
  return ImagePlane(pw, ph, std::move(samples), w, h);
}

ImagePlane load_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }

std::uint8_t to_8bit(double v) noexcept {
  const double r = std::round(v);  // half away from zero
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

std::vector<std::uint8_t> encode_pgm(const ImagePlane& plane) {
  const std::string header = "P5\n" + std::to_string(plane.original_width()) + " " +
                             std::to_string(plane.original_height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(plane.original_width()) * plane.original_height());
  for (int y = 0; y < plane.original_height(); ++y) {
    for (int x = 0; x < plane.original_width(); ++x) out.push_back(to_8bit(plane.at(x, y)));
  }
  return out;
}

void save_pgm(const std::filesystem::path& path, const ImagePlane& plane) {
  write_file(path, encode_pgm(plane));
}

void save_pgm16(const std::filesystem::path& path, int width, int height,
                std::span<const std::uint16_t> samples) {
  if (samples.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DomainError("sample count does not match image dimensions");
  }
  const std::string header =
      "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (std::uint16_t s : samples) {
    out.push_back(static_cast<std::uint8_t>(s >> 8));
    out.push_back(static_cast<std::uint8_t>(s & 0xFF));
  }
  write_file(path, out);
}

PixelError pixel_error(const ImagePlane& reconstructed, const ImagePlane& original) {
  if (reconstructed.width() != original.width() || reconstructed.height() != original.height()) {
    throw DomainError("images differ in size");
  }
  PixelError e(original.pixel_count());
  const auto a = reconstructed.samples();
  const auto b = original.samples();
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = a[i] - b[i];
  return e;
}

}  // namespace idse
