#include "idse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "idse/error.hpp"
#include "idse/prng.hpp"

namespace idse {

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr(const ImagePlane& x, const ImagePlane& x_hat) {
  if (x.width() != x_hat.width() || x.height() != x_hat.height()) throw DomainError("images differ in size");
  double err = 0.0;
  for (int y = 0; y < x.original_height(); ++y) {
    for (int c = 0; c < x.original_width(); ++c) {
      const double e = x_hat.at(c, y) - x.at(c, y);
      err += e * e;
    }
  }
  return psnr_from_mse(err / (static_cast<double>(x.original_width()) * x.original_height()));
}

double distortion_db(double d) {
  if (!(d > 0.0)) throw DomainError("distortion must be positive to express in dB");
  return -10.0 * std::log10(d);
}

RdCurve::RdCurve(std::string label, std::vector<RdPoint> points)
    : label_(std::move(label)), points_(std::move(points)) {
  std::sort(points_.begin(), points_.end(), [](const RdPoint& a, const RdPoint& b) { return a.rate < b.rate; });
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i].rate > 0.0)) throw DomainError("RD points need positive rates");
    if (!std::isfinite(points_[i].quality)) throw DomainError("RD points need finite quality");
    if (i > 0 && !(points_[i].rate > points_[i - 1].rate)) throw DomainError("RD rates must be strictly increasing");
  }
}

namespace {

// Natural cubic spline through (x_i, y_i) with strictly increasing x.
class NaturalSpline {
 public:
  NaturalSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      sub[i] = h0 / 6.0;
      diag[i] = (h0 + h1) / 3.0;
      sup[i] = h1 / 6.0;
      rhs[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];
  }

  /// Integral over [a, b], both inside [x_0, x_{n-1}].
  double integrate(double a, double b) const {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
      const double lo = std::max(a, x_[i]);
      const double hi = std::min(b, x_[i + 1]);
      if (hi > lo) total += antiderivative(i, hi) - antiderivative(i, lo);
    }
    return total;
  }

 private:
  double antiderivative(std::size_t i, double t) const {
    const double h = x_[i + 1] - x_[i];
    const double l = x_[i + 1] - t;
    const double r = t - x_[i];
    const double ci = y_[i] / h - m_[i] * h / 6.0;
    const double cj = y_[i + 1] / h - m_[i + 1] * h / 6.0;
    return -m_[i] * l * l * l * l / (24.0 * h) + m_[i + 1] * r * r * r * r / (24.0 * h) - ci * l * l / 2.0 +
           cj * r * r / 2.0;
  }

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

NaturalSpline log_rate_over_quality(const RdCurve& c) {
  std::vector<RdPoint> pts = c.points();
  std::sort(pts.begin(), pts.end(), [](const RdPoint& a, const RdPoint& b) { return a.quality < b.quality; });
  std::vector<double> q, lr;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && !(pts[i].quality > pts[i - 1].quality)) {
      throw DomainError("curve '" + c.label() + "' has repeated quality values");
    }
    q.push_back(pts[i].quality);
    lr.push_back(std::log(pts[i].rate));
  }
  return NaturalSpline(std::move(q), std::move(lr));
}

std::pair<double, double> quality_range(const RdCurve& c) {
  const auto [lo, hi] = std::minmax_element(c.points().begin(), c.points().end(),
                                            [](const RdPoint& a, const RdPoint& b) { return a.quality < b.quality; });
  return {lo->quality, hi->quality};
}

}  // namespace

double bd_rate(const RdCurve& reference, const RdCurve& test) {
  if (reference.points().size() < 4 || test.points().size() < 4) {
    throw DomainError("BD-rate needs at least 4 points per curve");
  }
  const auto [rlo, rhi] = quality_range(reference);
  const auto [tlo, thi] = quality_range(test);
  const double lo = std::max(rlo, tlo);
  const double hi = std::min(rhi, thi);
  if (!(hi > lo)) throw DomainError("RD curves do not overlap in quality");
  const double ref_int = log_rate_over_quality(reference).integrate(lo, hi);
  const double test_int = log_rate_over_quality(test).integrate(lo, hi);
  return (std::exp((test_int - ref_int) / (hi - lo)) - 1.0) * 100.0;
}

RdCurve read_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<RdPoint> pts;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    RdPoint p;
    if (!(fields >> p.rate >> p.quality)) {
      if (first) {
        first = false;
        continue;
      }
      throw FormatError("curve file " + path.string() + ": malformed line '" + line + "'");
    }
    first = false;
    pts.push_back(p);
  }
  return RdCurve(path.stem().string(), std::move(pts));
}

void write_curve(const std::filesystem::path& path, const RdCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "# " << curve.label() << "\nrate,quality\n";
  for (const RdPoint& p : curve.points()) out << p.rate << ',' << p.quality << '\n';
}

double flop_model(double h, double w, double h_resized, double w_resized, int candidates, int sketch_rows) {
  if (!(h > 0 && w > 0 && h_resized > 0 && w_resized > 0) || candidates < 1 || sketch_rows < 1) {
    throw DomainError("FLOP model inputs must be positive");
  }
  return (h * w * (candidates + 1.0)) / (h_resized * w_resized * (2.0 * sketch_rows + 1.0));
}

ImagePlane synthetic_image(int width, int height, std::uint64_t seed) {
  Prng prng(seed);
  const double base = prng.uniform(60.0, 190.0);
  const double gx = prng.uniform(-1.0, 1.0) * 60.0 / width;
  const double gy = prng.uniform(-1.0, 1.0) * 60.0 / height;
  std::vector<double> v(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) v[static_cast<std::size_t>(y) * width + x] = base + gx * x + gy * y;
  }
  auto rect = [&](int& x0, int& y0, int& x1, int& y1) {
    x0 = static_cast<int>(prng.below(static_cast<std::uint64_t>(width)));
    y0 = static_cast<int>(prng.below(static_cast<std::uint64_t>(height)));
    x1 = std::min(width, x0 + 4 + static_cast<int>(prng.below(static_cast<std::uint64_t>(width / 2))));
    y1 = std::min(height, y0 + 4 + static_cast<int>(prng.below(static_cast<std::uint64_t>(height / 2))));
  };
  const int shapes = 3 + static_cast<int>(prng.below(4));
  for (int s = 0; s < shapes; ++s) {
    int x0, y0, x1, y1;
    rect(x0, y0, x1, y1);
    const double level = prng.uniform(0.0, 255.0);
    const bool ellipse = prng.below(2) == 1;
    const double cx = (x0 + x1 - 1) / 2.0, cy = (y0 + y1 - 1) / 2.0;
    const double rx = (x1 - x0) / 2.0, ry = (y1 - y0) / 2.0;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        if (ellipse) {
          const double dx = (x - cx) / rx, dy = (y - cy) / ry;
          if (dx * dx + dy * dy > 1.0) continue;
        }
        v[static_cast<std::size_t>(y) * width + x] = level;
      }
    }
  }
  {
    int x0, y0, x1, y1;
    rect(x0, y0, x1, y1);
    const double amp = prng.uniform(15.0, 45.0);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) v[static_cast<std::size_t>(y) * width + x] += amp * prng.uniform(-1.0, 1.0);
    }
  }
  for (double& s : v) s = std::clamp(std::round(s + prng.uniform(-2.0, 2.0)), 0.0, 255.0);
  return ImagePlane(width, height, std::move(v));
}

std::vector<ImagePlane> synthetic_corpus(int count, int width, int height, std::uint64_t seed) {
  Prng prng(seed);
  std::vector<ImagePlane> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(synthetic_image(width, height, prng.next_u64()));
  return out;
}

}  // namespace idse
