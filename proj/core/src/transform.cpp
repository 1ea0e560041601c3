#include "idse/transform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "idse/error.hpp"

namespace idse {

namespace {

std::vector<double> make_basis(int n) {
  std::vector<double> c(static_cast<std::size_t>(n) * n);
  for (int k = 0; k < n; ++k) {
    const double a = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) {
      c[static_cast<std::size_t>(k) * n + i] = a * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
    }
  }
  return c;
}

std::vector<int> make_zigzag(int n) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n) * n);
  for (int s = 0; s <= 2 * (n - 1); ++s) {
    const int rlo = std::max(0, s - (n - 1));
    const int rhi = std::min(s, n - 1);
    if (s % 2 == 1) {
      for (int r = rlo; r <= rhi; ++r) order.push_back(r * n + (s - r));
    } else {
      for (int r = rhi; r >= rlo; --r) order.push_back(r * n + (s - r));
    }
  }
  return order;
}

void check_size(int size) {
  if (size != kSubblockSize && size != kMacroblockSize) throw DomainError("transform size must be 4 or 16");
}

}  // namespace

const std::vector<double>& dct_basis(int size) {
  static const std::vector<double> b4 = make_basis(kSubblockSize);
  static const std::vector<double> b16 = make_basis(kMacroblockSize);
  check_size(size);
  return size == kSubblockSize ? b4 : b16;
}

const std::vector<int>& zigzag(int size) {
  static const std::vector<int> z4 = make_zigzag(kSubblockSize);
  static const std::vector<int> z16 = make_zigzag(kMacroblockSize);
  check_size(size);
  return size == kSubblockSize ? z4 : z16;
}

void dct_forward(std::span<const double> block, std::span<double> out, int n) {
  const auto& c = dct_basis(n);
  const std::size_t count = static_cast<std::size_t>(n) * n;
  if (block.size() != count || out.size() != count) throw DomainError("block size does not match transform");
  // tmp = C X, out = tmp C^T
  std::vector<double> tmp(count, 0.0);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      const double ck = c[k * n + i];
      for (int j = 0; j < n; ++j) tmp[k * n + j] += ck * block[i * n + j];
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += tmp[k * n + j] * c[l * n + j];
      out[k * n + l] = acc;
    }
  }
}

void dct_inverse(std::span<const double> coeffs, std::span<double> out, int n) {
  const auto& c = dct_basis(n);
  const std::size_t count = static_cast<std::size_t>(n) * n;
  if (coeffs.size() != count || out.size() != count) throw DomainError("block size does not match transform");
  // tmp = C^T Y, out = tmp C
  std::vector<double> tmp(count, 0.0);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      const double ck = c[k * n + i];
      for (int l = 0; l < n; ++l) tmp[i * n + l] += ck * coeffs[k * n + l];
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < n; ++l) acc += tmp[i * n + l] * c[l * n + j];
      out[i * n + j] = acc;
    }
  }
}

std::vector<double> dct_forward(std::span<const double> block, const TransformSpec& spec) {
  check_size(spec.size);
  std::vector<double> out(static_cast<std::size_t>(spec.coefficient_count()));
  dct_forward(block, out, spec.size);
  return out;
}

std::vector<double> dct_inverse(std::span<const double> coeffs, const TransformSpec& spec) {
  check_size(spec.size);
  std::vector<double> out(static_cast<std::size_t>(spec.coefficient_count()));
  dct_inverse(coeffs, out, spec.size);
  return out;
}

int subblock_pixel(int subblock, int k) noexcept {
  const int sy = subblock / 4;
  const int sx = subblock % 4;
  const int r = k / kSubblockSize;
  const int c = k % kSubblockSize;
  return (sy * kSubblockSize + r) * kMacroblockSize + sx * kSubblockSize + c;
}

Block forward_partition(const Block& pixels, Partition partition) {
  Block out{};
  if (partition == Partition::whole16) {
    dct_forward(pixels, out, kMacroblockSize);
    return out;
  }
  std::array<double, 16> sub{};
  for (int s = 0; s < kSubblocksPerMacroblock; ++s) {
    for (int k = 0; k < 16; ++k) sub[k] = pixels[subblock_pixel(s, k)];
    dct_forward(sub, std::span<double>(out).subspan(static_cast<std::size_t>(s) * 16, 16), kSubblockSize);
  }
  return out;
}

Block inverse_partition(const Block& coeffs, Partition partition) {
  Block out{};
  if (partition == Partition::whole16) {
    dct_inverse(coeffs, out, kMacroblockSize);
    return out;
  }
  std::array<double, 16> sub{};
  for (int s = 0; s < kSubblocksPerMacroblock; ++s) {
    dct_inverse(std::span<const double>(coeffs).subspan(static_cast<std::size_t>(s) * 16, 16), sub, kSubblockSize);
    for (int k = 0; k < 16; ++k) out[subblock_pixel(s, k)] = sub[k];
  }
  return out;
}

}  // namespace idse
