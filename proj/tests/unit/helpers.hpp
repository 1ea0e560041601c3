#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "idse/image.hpp"
#include "idse/prng.hpp"

namespace idse::testing {

inline ImagePlane random_image(int width, int height, std::uint64_t seed) {
  Prng prng(seed);
  std::vector<double> v(static_cast<std::size_t>(width) * height);
  for (double& s : v) s = static_cast<double>(prng.below(256));
  return ImagePlane(width, height, std::move(v));
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Prng prng(seed);
  std::vector<double> v(n);
  for (double& s : v) s = scale * prng.normal();
  return v;
}

inline double relative_error(double a, double b) {
  const double d = std::max(std::abs(a), std::abs(b));
  return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

/// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("idse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path data_path(const std::string& file) {
  return std::filesystem::path(IDSE_TEST_DATA_DIR) / file;
}

}  // namespace idse::testing

#include "idse/feature_map.hpp"

namespace idse::testing {

/// f(x) = A x on a fixed grid.
class DenseLinearMap final : public FeatureMap {
 public:
  DenseLinearMap(int width, int height, RowMatrix a) : width_(width), height_(height), a_(std::move(a)) {}

  int input_width() const override { return width_; }
  int input_height() const override { return height_; }
  std::size_t output_dim() const override { return static_cast<std::size_t>(a_.rows()); }
  Vector features(const ImagePlane& x) const override { return a_ * map(x.samples()); }
  Vector jvp(const ImagePlane&, std::span<const double> v) const override { return a_ * map(v); }
  Vector vjp(const ImagePlane&, std::span<const double> w) const override { return a_.transpose() * map(w); }

 private:
  static Eigen::Map<const Vector> map(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
  }
  int width_;
  int height_;
  RowMatrix a_;
};

}  // namespace idse::testing
