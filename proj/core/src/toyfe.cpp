#include "idse/toyfe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "idse/bytes.hpp"
#include "idse/error.hpp"
#include "idse/prng.hpp"

namespace idse {

namespace {

constexpr std::array<double, 3> kBlurTaps = {0.25, 0.5, 0.25};
constexpr double kKinkShift = 1e-9;

}  // namespace

std::string_view to_string(ToyKind kind) {
  switch (kind) {
    case ToyKind::identity: return "identity";
    case ToyKind::blur_down: return "blur_down";
    case ToyKind::block_blur: return "block_blur";
    case ToyKind::conv_relu_conv: return "conv_relu_conv";
  }
  return "unknown";
}

ToyKind parse_toy_kind(std::string_view name) {
  for (ToyKind k : {ToyKind::identity, ToyKind::blur_down, ToyKind::block_blur, ToyKind::conv_relu_conv}) {
    if (to_string(k) == name) return k;
  }
  throw DomainError("unknown feature extractor '" + std::string(name) + "'");
}

ConvWeights generate_conv_weights(std::uint64_t seed) {
  Prng prng(seed);
  auto draw = [&](double scale) { return static_cast<double>(static_cast<float>(prng.uniform(-scale, scale))); };
  ConvWeights w;
  for (double& v : w.conv1) v = draw(1.0 / 3.0);
  for (double& v : w.bias1) v = draw(0.5);
  for (double& v : w.conv2) v = draw(1.0 / 6.0);
  for (double& v : w.bias2) v = draw(0.1);
  return w;
}

namespace {

constexpr std::string_view kWeightsMagic = "TFW1";

template <std::size_t N>
void write_tensor(ByteWriter& out, std::initializer_list<std::uint32_t> dims, const std::array<double, N>& data) {
  out.u8(static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) out.u32(d);
  for (double v : data) out.f32(static_cast<float>(v));
}

template <std::size_t N>
void read_tensor(ByteReader& in, std::initializer_list<std::uint32_t> dims, std::array<double, N>& data) {
  const std::uint8_t rank = in.u8();
  if (rank != dims.size()) throw FormatError("weights file: unexpected tensor rank");
  for (auto d : dims) {
    if (in.u32() != d) throw FormatError("weights file: unexpected tensor shape");
  }
  for (double& v : data) v = static_cast<double>(in.f32());
}

}  // namespace

std::vector<std::uint8_t> serialize_conv_weights(const ConvWeights& w) {
  ByteWriter out;
  out.raw(kWeightsMagic);
  out.u32(4);
  write_tensor(out, {4, 1, 3, 3}, w.conv1);
  write_tensor(out, {4}, w.bias1);
  write_tensor(out, {2, 4, 3, 3}, w.conv2);
  write_tensor(out, {2}, w.bias2);
  return out.take();
}

ConvWeights parse_conv_weights(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "weights file");
  if (in.str(4) != kWeightsMagic) throw FormatError("weights file: bad magic");
  if (in.u32() != 4) throw FormatError("weights file: unexpected tensor count");
  ConvWeights w;
  read_tensor(in, {4, 1, 3, 3}, w.conv1);
  read_tensor(in, {4}, w.bias1);
  read_tensor(in, {2, 4, 3, 3}, w.conv2);
  read_tensor(in, {2}, w.bias2);
  if (in.remaining() != 0) throw FormatError("weights file: trailing bytes");
  return w;
}

ConvWeights load_conv_weights(const std::filesystem::path& path) {
  return parse_conv_weights(read_file(path));
}

std::filesystem::path default_conv_weights_path() {
  constexpr const char* kFile = "conv_relu_conv_v1.tfw";
  if (const char* env = std::getenv("IDSE_DATA_DIR"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env) / kFile;
  }
  const std::filesystem::path installed = std::filesystem::path(IDSE_INSTALL_DATA_DIR) / kFile;
  const std::filesystem::path source = std::filesystem::path(IDSE_SOURCE_DATA_DIR) / kFile;
  return std::filesystem::exists(source) ? source : installed;
}

ToyFeatureExtractor::ToyFeatureExtractor(ToyKind kind, int width, int height, ConvWeights weights)
    : kind_(kind), width_(width), height_(height), weights_(weights) {
  const BlockGrid grid(width, height);  // validates the grid
  (void)grid;
}

ToyFeatureExtractor ToyFeatureExtractor::identity(int width, int height) {
  return ToyFeatureExtractor(ToyKind::identity, width, height);
}
ToyFeatureExtractor ToyFeatureExtractor::blur_down(int width, int height) {
  return ToyFeatureExtractor(ToyKind::blur_down, width, height);
}
ToyFeatureExtractor ToyFeatureExtractor::block_blur(int width, int height) {
  return ToyFeatureExtractor(ToyKind::block_blur, width, height);
}
ToyFeatureExtractor ToyFeatureExtractor::conv_relu_conv(int width, int height) {
  return conv_relu_conv(width, height, load_conv_weights(default_conv_weights_path()));
}
ToyFeatureExtractor ToyFeatureExtractor::conv_relu_conv(int width, int height, const ConvWeights& weights) {
  return ToyFeatureExtractor(ToyKind::conv_relu_conv, width, height, weights);
}
ToyFeatureExtractor ToyFeatureExtractor::make(ToyKind kind, int width, int height) {
  switch (kind) {
    case ToyKind::identity: return identity(width, height);
    case ToyKind::blur_down: return blur_down(width, height);
    case ToyKind::block_blur: return block_blur(width, height);
    case ToyKind::conv_relu_conv: return conv_relu_conv(width, height);
  }
  throw DomainError("unknown feature extractor kind");
}

std::size_t ToyFeatureExtractor::output_dim() const {
  const std::size_t n_p = input_dim();
  switch (kind_) {
    case ToyKind::identity: return n_p;
    case ToyKind::blur_down:
    case ToyKind::block_blur: return n_p / 4;
    case ToyKind::conv_relu_conv: return n_p * ConvWeights::kOutputs;
  }
  return 0;
}

void ToyFeatureExtractor::check_input(const ImagePlane& x) const {
  if (x.width() != width_ || x.height() != height_) {
    throw GridMismatchError("image grid does not match the feature extractor");
  }
}

// Blur taps for output (r, c). blur_down clamps at the image border,
// block_blur at the border of the macroblock holding pixel (2r, 2c).
Vector ToyFeatureExtractor::blur_apply(std::span<const double> v) const {
  const int ow = width_ / 2;
  const int oh = height_ / 2;
  Vector out = Vector::Zero(static_cast<Eigen::Index>(ow) * oh);
  const bool local = kind_ == ToyKind::block_blur;
  for (int r = 0; r < oh; ++r) {
    const int cy = 2 * r;
    const int ylo = local ? cy / kMacroblockSize * kMacroblockSize : 0;
    const int yhi = local ? ylo + kMacroblockSize - 1 : height_ - 1;
    for (int c = 0; c < ow; ++c) {
      const int cx = 2 * c;
      const int xlo = local ? cx / kMacroblockSize * kMacroblockSize : 0;
      const int xhi = local ? xlo + kMacroblockSize - 1 : width_ - 1;
      double acc = 0.0;
      for (int a = 0; a < 3; ++a) {
        const int y = std::clamp(cy + a - 1, ylo, yhi);
        for (int b = 0; b < 3; ++b) {
          const int x = std::clamp(cx + b - 1, xlo, xhi);
          acc += kBlurTaps[a] * kBlurTaps[b] * v[static_cast<std::size_t>(y) * width_ + x];
        }
      }
      out(static_cast<Eigen::Index>(r) * ow + c) = acc;
    }
  }
  return out;
}

Vector ToyFeatureExtractor::blur_apply_transposed(std::span<const double> w) const {
  const int ow = width_ / 2;
  const int oh = height_ / 2;
  Vector out = Vector::Zero(static_cast<Eigen::Index>(input_dim()));
  const bool local = kind_ == ToyKind::block_blur;
  for (int r = 0; r < oh; ++r) {
    const int cy = 2 * r;
    const int ylo = local ? cy / kMacroblockSize * kMacroblockSize : 0;
    const int yhi = local ? ylo + kMacroblockSize - 1 : height_ - 1;
    for (int c = 0; c < ow; ++c) {
      const int cx = 2 * c;
      const int xlo = local ? cx / kMacroblockSize * kMacroblockSize : 0;
      const int xhi = local ? xlo + kMacroblockSize - 1 : width_ - 1;
      const double g = w[static_cast<std::size_t>(r) * ow + c];
      for (int a = 0; a < 3; ++a) {
        const int y = std::clamp(cy + a - 1, ylo, yhi);
        for (int b = 0; b < 3; ++b) {
          const int x = std::clamp(cx + b - 1, xlo, xhi);
          out(static_cast<Eigen::Index>(y) * width_ + x) += kBlurTaps[a] * kBlurTaps[b] * g;
        }
      }
    }
  }
  return out;
}

// First convolution without bias, on a normalized-input-space vector.
std::vector<double> ToyFeatureExtractor::conv1_linear(std::span<const double> u) const {
  const std::size_t n_p = input_dim();
  std::vector<double> z(ConvWeights::kHidden * n_p, 0.0);
  for (int ch = 0; ch < ConvWeights::kHidden; ++ch) {
    const double* k = &weights_.conv1[static_cast<std::size_t>(ch) * 9];
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        double acc = 0.0;
        for (int dy = 0; dy < 3; ++dy) {
          const int yy = y + dy - 1;
          if (yy < 0 || yy >= height_) continue;
          for (int dx = 0; dx < 3; ++dx) {
            const int xx = x + dx - 1;
            if (xx < 0 || xx >= width_) continue;
            acc += k[dy * 3 + dx] * u[static_cast<std::size_t>(yy) * width_ + xx];
          }
        }
        z[ch * n_p + static_cast<std::size_t>(y) * width_ + x] = acc;
      }
    }
  }
  return z;
}

namespace {

// Second convolution (4 -> 2 channels) without bias.
Vector conv2_linear(const ConvWeights& w, std::span<const double> a, int width, int height) {
  const std::size_t n_p = static_cast<std::size_t>(width) * height;
  Vector out = Vector::Zero(static_cast<Eigen::Index>(ConvWeights::kOutputs * n_p));
  for (int o = 0; o < ConvWeights::kOutputs; ++o) {
    for (int ch = 0; ch < ConvWeights::kHidden; ++ch) {
      const double* k = &w.conv2[(static_cast<std::size_t>(o) * ConvWeights::kHidden + ch) * 9];
      const double* src = a.data() + ch * n_p;
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          double acc = 0.0;
          for (int dy = 0; dy < 3; ++dy) {
            const int yy = y + dy - 1;
            if (yy < 0 || yy >= height) continue;
            for (int dx = 0; dx < 3; ++dx) {
              const int xx = x + dx - 1;
              if (xx < 0 || xx >= width) continue;
              acc += k[dy * 3 + dx] * src[static_cast<std::size_t>(yy) * width + xx];
            }
          }
          out(static_cast<Eigen::Index>(o * n_p + static_cast<std::size_t>(y) * width + x)) += acc;
        }
      }
    }
  }
  return out;
}

// Adjoint of a zero-padded 3x3 correlation: scatter g through kernel k.
void correlate_transposed(const double* k, const double* g, double* out, int width, int height) {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double gv = g[static_cast<std::size_t>(y) * width + x];
      if (gv == 0.0) continue;
      for (int dy = 0; dy < 3; ++dy) {
        const int yy = y + dy - 1;
        if (yy < 0 || yy >= height) continue;
        for (int dx = 0; dx < 3; ++dx) {
          const int xx = x + dx - 1;
          if (xx < 0 || xx >= width) continue;
          out[static_cast<std::size_t>(yy) * width + xx] += k[dy * 3 + dx] * gv;
        }
      }
    }
  }
}

}  // namespace

std::vector<std::uint8_t> ToyFeatureExtractor::activation_mask(const ImagePlane& x) const {
  check_input(x);
  if (kind_ != ToyKind::conv_relu_conv) throw DomainError("activation mask needs conv_relu_conv");
  const std::size_t n_p = input_dim();
  auto preactivations = [&](double shift) {
    std::vector<double> u(n_p);
    const auto s = x.samples();
    for (std::size_t i = 0; i < n_p; ++i) u[i] = (s[i] + shift) * kInputScale;
    std::vector<double> z = conv1_linear(u);
    for (int ch = 0; ch < ConvWeights::kHidden; ++ch) {
      for (std::size_t i = 0; i < n_p; ++i) z[ch * n_p + i] += weights_.bias1[ch];
    }
    return z;
  };
  const std::vector<double> z = preactivations(0.0);
  std::vector<std::uint8_t> mask(z.size());
  bool on_kink = false;
  for (std::size_t i = 0; i < z.size(); ++i) {
    mask[i] = z[i] > 0.0 ? 1 : 0;
    on_kink = on_kink || z[i] == 0.0;
  }
  if (on_kink) {
    const std::vector<double> zs = preactivations(kKinkShift);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i] == 0.0) mask[i] = zs[i] > 0.0 ? 1 : 0;
    }
  }
  return mask;
}

Vector ToyFeatureExtractor::conv_forward_linear(std::span<const double> du,
                                                std::span<const std::uint8_t> mask) const {
  std::vector<double> dz = conv1_linear(du);
  for (std::size_t i = 0; i < dz.size(); ++i) {
    if (mask[i] == 0) dz[i] = 0.0;
  }
  return conv2_linear(weights_, dz, width_, height_);
}

Vector ToyFeatureExtractor::features(const ImagePlane& x) const {
  check_input(x);
  const auto s = x.samples();
  switch (kind_) {
    case ToyKind::identity: return Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
    case ToyKind::blur_down:
    case ToyKind::block_blur: return blur_apply(s);
    case ToyKind::conv_relu_conv: {
      const std::size_t n_p = input_dim();
      std::vector<double> u(n_p);
      for (std::size_t i = 0; i < n_p; ++i) u[i] = s[i] * kInputScale;
      std::vector<double> a = conv1_linear(u);
      for (int ch = 0; ch < ConvWeights::kHidden; ++ch) {
        for (std::size_t i = 0; i < n_p; ++i) {
          a[ch * n_p + i] = std::max(0.0, a[ch * n_p + i] + weights_.bias1[ch]);
        }
      }
      Vector out = conv2_linear(weights_, a, width_, height_);
      for (int o = 0; o < ConvWeights::kOutputs; ++o) {
        out.segment(static_cast<Eigen::Index>(o * n_p), static_cast<Eigen::Index>(n_p)).array() += weights_.bias2[o];
      }
      return out;
    }
  }
  throw DomainError("unknown feature extractor kind");
}

Vector ToyFeatureExtractor::jvp(const ImagePlane& x, std::span<const double> v) const {
  check_input(x);
  if (v.size() != input_dim()) throw DomainError("jvp: vector length does not match the pixel count");
  switch (kind_) {
    case ToyKind::identity: return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    case ToyKind::blur_down:
    case ToyKind::block_blur: return blur_apply(v);
    case ToyKind::conv_relu_conv: {
      std::vector<double> du(v.begin(), v.end());
      for (double& d : du) d *= kInputScale;
      return conv_forward_linear(du, activation_mask(x));
    }
  }
  throw DomainError("unknown feature extractor kind");
}

Vector ToyFeatureExtractor::vjp(const ImagePlane& x, std::span<const double> w) const {
  check_input(x);
  if (w.size() != output_dim()) throw DomainError("vjp: vector length does not match the feature count");
  switch (kind_) {
    case ToyKind::identity: return Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    case ToyKind::blur_down:
    case ToyKind::block_blur: return blur_apply_transposed(w);
    case ToyKind::conv_relu_conv: {
      const std::size_t n_p = input_dim();
      const std::vector<std::uint8_t> mask = activation_mask(x);
      std::vector<double> da(ConvWeights::kHidden * n_p, 0.0);
      for (int o = 0; o < ConvWeights::kOutputs; ++o) {
        for (int ch = 0; ch < ConvWeights::kHidden; ++ch) {
          const double* k = &weights_.conv2[(static_cast<std::size_t>(o) * ConvWeights::kHidden + ch) * 9];
          correlate_transposed(k, w.data() + o * n_p, da.data() + ch * n_p, width_, height_);
        }
      }
      for (std::size_t i = 0; i < da.size(); ++i) {
        if (mask[i] == 0) da[i] = 0.0;
      }
      Vector out = Vector::Zero(static_cast<Eigen::Index>(n_p));
      for (int ch = 0; ch < ConvWeights::kHidden; ++ch) {
        correlate_transposed(&weights_.conv1[static_cast<std::size_t>(ch) * 9], da.data() + ch * n_p, out.data(),
                             width_, height_);
      }
      return out * kInputScale;
    }
  }
  throw DomainError("unknown feature extractor kind");
}

RowMatrix ToyFeatureExtractor::dense_jacobian(const ImagePlane& x) const {
  check_input(x);
  if (kind_ == ToyKind::identity) {
    const auto n = static_cast<Eigen::Index>(input_dim());
    return RowMatrix::Identity(n, n);
  }
  return FeatureMap::dense_jacobian(x);
}

Vector ToyFeatureExtractor::column_norms_sq(const ImagePlane& x) const {
  check_input(x);
  const auto n_p = static_cast<Eigen::Index>(input_dim());
  if (kind_ == ToyKind::identity) return Vector::Ones(n_p);
  if (kind_ != ToyKind::conv_relu_conv) return FeatureMap::column_norms_sq(x);

  // A unit change at pixel (py, px) reaches hidden units in its 3x3
  // neighbourhood and outputs in its 5x5 neighbourhood.
  const std::vector<std::uint8_t> mask = activation_mask(x);
  const std::size_t np = input_dim();
  Vector out(n_p);
  for (int py = 0; py < height_; ++py) {
    for (int px = 0; px < width_; ++px) {
      std::array<double, ConvWeights::kOutputs * 25> local{};
      for (int ch = 0; ch < ConvWeights::kHidden; ++ch) {
        for (int hy = py - 1; hy <= py + 1; ++hy) {
          if (hy < 0 || hy >= height_) continue;
          for (int hx = px - 1; hx <= px + 1; ++hx) {
            if (hx < 0 || hx >= width_) continue;
            if (mask[ch * np + static_cast<std::size_t>(hy) * width_ + hx] == 0) continue;
            const double dz = weights_.conv1[static_cast<std::size_t>(ch) * 9 + (py - hy + 1) * 3 + (px - hx + 1)] *
                              kInputScale;
            for (int o = 0; o < ConvWeights::kOutputs; ++o) {
              const double* k = &weights_.conv2[(static_cast<std::size_t>(o) * ConvWeights::kHidden + ch) * 9];
              for (int oy = hy - 1; oy <= hy + 1; ++oy) {
                if (oy < 0 || oy >= height_) continue;
                for (int ox = hx - 1; ox <= hx + 1; ++ox) {
                  if (ox < 0 || ox >= width_) continue;
                  local[o * 25 + (oy - py + 2) * 5 + (ox - px + 2)] += k[(hy - oy + 1) * 3 + (hx - ox + 1)] * dz;
                }
              }
            }
          }
        }
      }
      double acc = 0.0;
      for (double v : local) acc += v * v;
      out(static_cast<Eigen::Index>(py) * width_ + px) = acc;
    }
  }
  return out;
}

double feature_distance(const FeatureMap& fe, const ImagePlane& x, const ImagePlane& x_hat) {
  if (x.width() != x_hat.width() || x.height() != x_hat.height()) {
    throw GridMismatchError("images differ in size");
  }
  return (fe.features(x_hat) - fe.features(x)).squaredNorm();
}

LipschitzTask make_lipschitz_task(std::size_t feature_dim, TaskLoss loss, double label,
                                  std::uint64_t seed) {
  Prng prng(seed);
  LipschitzTask task;
  task.head.resize(static_cast<Eigen::Index>(feature_dim));
  for (Eigen::Index i = 0; i < task.head.size(); ++i) task.head(i) = prng.normal();
  task.head /= std::sqrt(static_cast<double>(feature_dim));
  task.head_norm = task.head.norm();
  task.loss = loss;
  task.label = label;
  return task;
}

LipschitzCheck lipschitz_bound_check(const LipschitzTask& task, const FeatureMap& fe,
                                     const ImagePlane& x, const ImagePlane& x_hat) {
  const Vector f = fe.features(x);
  const Vector f_hat = fe.features(x_hat);
  if (f.size() != task.head.size()) throw DomainError("task head does not match the feature dimension");
  const double t = task.head.dot(f);
  const double t_hat = task.head.dot(f_hat);
  auto loss = [&](double logit) {
    const double r = task.label - logit;
    return task.loss == TaskLoss::absolute ? std::abs(r) : r * r;
  };
  LipschitzCheck out;
  out.loss_lipschitz = task.loss == TaskLoss::absolute
                           ? 1.0
                           : 2.0 * std::max(std::abs(t - task.label), std::abs(t_hat - task.label));
  out.feature_distance = (f_hat - f).squaredNorm();
  const double delta = loss(t_hat) - loss(t);
  out.consistency_loss = delta * delta;
  out.bound = task.head_norm * task.head_norm * out.loss_lipschitz * out.loss_lipschitz * out.feature_distance;
  // Rounding slack for perturbations aligned with the head.
  out.holds = out.consistency_loss <= out.bound * (1.0 + 1e-12) + 1e-300;
  return out;
}

}  // namespace idse
