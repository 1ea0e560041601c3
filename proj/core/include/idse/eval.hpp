#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "idse/image.hpp"

namespace idse {

/// PSNR over the original-size region. Identical images give +infinity.
double psnr(const ImagePlane& x, const ImagePlane& x_hat);
double psnr_from_mse(double mse);

/// Quality in dB for a distortion (lower-is-better) value: -10 log10(d).
double distortion_db(double d);

struct RdPoint {
  double rate = 0.0;     // bits per pixel
  double quality = 0.0;  // higher is better (PSNR or a distortion in dB)
};

/// Rate-sorted RD curve with strictly increasing positive rates.
class RdCurve {
 public:
  RdCurve(std::string label, std::vector<RdPoint> points);

  const std::string& label() const noexcept { return label_; }
  const std::vector<RdPoint>& points() const noexcept { return points_; }

 private:
  std::string label_;
  std::vector<RdPoint> points_;
};

/// Bjontegaard delta rate in percent (negative: test needs less rate). Natural
/// cubic splines of log-rate over quality are integrated on the common
/// quality interval.
double bd_rate(const RdCurve& reference, const RdCurve& test);

/// Comma-separated "rate,quality" lines; '#' comments and a non-numeric header
/// line are skipped.
RdCurve read_curve(const std::filesystem::path& path);
void write_curve(const std::filesystem::path& path, const RdCurve& curve);

/// FLOP ratio of block-wise FD evaluation over Jacobian sketching:
/// h w (n_r + 1) / (h' w' (2 n_s + 1)).
double flop_model(double h, double w, double h_resized, double w_resized, int candidates, int sketch_rows);

/// Seeded synthetic luma image: smooth gradient, random flat shapes, a
/// textured patch and mild noise, rounded to 8-bit values.
ImagePlane synthetic_image(int width, int height, std::uint64_t seed);

/// `count` synthetic images whose seeds are derived from `seed`.
std::vector<ImagePlane> synthetic_corpus(int count, int width, int height, std::uint64_t seed);

}  // namespace idse
