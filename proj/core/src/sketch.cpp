#include "idse/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "idse/bytes.hpp"
#include "idse/error.hpp"

namespace idse {

RowMatrix FeatureMap::dense_jacobian(const ImagePlane& x) const {
  const std::size_t n_p = input_dim();
  RowMatrix jac(static_cast<Eigen::Index>(output_dim()), static_cast<Eigen::Index>(n_p));
  std::vector<double> unit(n_p, 0.0);
  for (std::size_t p = 0; p < n_p; ++p) {
    unit[p] = 1.0;
    jac.col(static_cast<Eigen::Index>(p)) = jvp(x, unit);
    unit[p] = 0.0;
  }
  return jac;
}

Vector FeatureMap::column_norms_sq(const ImagePlane& x) const {
  const std::size_t n_p = input_dim();
  Vector out(static_cast<Eigen::Index>(n_p));
  std::vector<double> unit(n_p, 0.0);
  for (std::size_t p = 0; p < n_p; ++p) {
    unit[p] = 1.0;
    out(static_cast<Eigen::Index>(p)) = jvp(x, unit).squaredNorm();
    unit[p] = 0.0;
  }
  return out;
}

SketchedJacobian::SketchedJacobian(int width, int height, std::uint64_t seed,
                                   std::string source_tag, RowMatrix entries)
    : width_(width),
      height_(height),
      seed_(seed),
      source_tag_(std::move(source_tag)),
      entries_(std::move(entries)) {
  const BlockGrid grid(width, height);  // validates dimensions
  if (entries_.rows() < 1) throw DomainError("sketched Jacobian needs at least one row");
  if (static_cast<std::size_t>(entries_.cols()) != grid.pixel_count()) {
    throw DomainError("sketched Jacobian column count does not match its grid");
  }
  if (source_tag_.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw DomainError("source tag too long");
  }
}

SketchedJacobian SketchedJacobian::scaled(double s) const {
  return SketchedJacobian(width_, height_, seed_, source_tag_, entries_ * s);
}

int jl_dimension(int candidate_count, double epsilon, double c_jl) {
  if (candidate_count < 1) throw DomainError("candidate count must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  if (!(c_jl > 0.0)) throw DomainError("JL constant must be positive");
  const double n = std::ceil(c_jl * std::log(static_cast<double>(candidate_count) + 1.0) /
                             (epsilon * epsilon));
  if (n > static_cast<double>(std::numeric_limits<int>::max())) {
    throw DomainError("JL dimension overflows");
  }
  return std::max(1, static_cast<int>(n));
}

SketchMatrix draw_sketch(int rows, std::size_t cols, Prng& prng) {
  if (rows < 1 || rows > kMaxSketchRows) {
    throw DomainError("sketch rows must lie in [1, " + std::to_string(kMaxSketchRows) + "]");
  }
  if (cols < 1) throw DomainError("sketch needs at least one column");
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  RowMatrix s(rows, static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index k = 0; k < s.cols(); ++k) s(i, k) = prng.sign() * scale;
  }
  return SketchMatrix(std::move(s));
}

SketchedJacobian sketch_jacobian(const FeatureMap& fe, const ImagePlane& x, const SketchMatrix& s,
                                 std::uint64_t seed, std::string source_tag) {
  if (s.cols() != fe.output_dim()) {
    throw DomainError("sketch columns do not match the feature dimension");
  }
  if (x.width() != fe.input_width() || x.height() != fe.input_height()) {
    throw GridMismatchError("image grid does not match the feature extractor");
  }
  RowMatrix rows(s.rows(), static_cast<Eigen::Index>(x.pixel_count()));
  std::vector<double> w(fe.output_dim());
  for (int i = 0; i < s.rows(); ++i) {
    Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size())) = s.entries().row(i).transpose();
    rows.row(i) = fe.vjp(x, w).transpose();
  }
  return SketchedJacobian(x.width(), x.height(), seed, std::move(source_tag), std::move(rows));
}

SketchedJacobian sketch_jacobian(const FeatureMap& fe, const ImagePlane& x, int rows,
                                 std::uint64_t seed, std::string source_tag) {
  Prng prng(seed);
  const SketchMatrix s = draw_sketch(rows, fe.output_dim(), prng);
  return sketch_jacobian(fe, x, s, seed, std::move(source_tag));
}

SketchedJacobian full_jacobian(const FeatureMap& fe, const ImagePlane& x, std::string source_tag) {
  if (x.width() != fe.input_width() || x.height() != fe.input_height()) {
    throw GridMismatchError("image grid does not match the feature extractor");
  }
  return SketchedJacobian(x.width(), x.height(), 0, std::move(source_tag), fe.dense_jacobian(x));
}

SketchedJacobian identity_jacobian(int width, int height) {
  const BlockGrid grid(width, height);
  const auto n = static_cast<Eigen::Index>(grid.pixel_count());
  return SketchedJacobian(width, height, 0, "identity", RowMatrix::Identity(n, n));
}

RowMatrix block_slice(const SketchedJacobian& j, const BlockGrid& grid, int block) {
  if (grid.width() != j.width() || grid.height() != j.height()) {
    throw GridMismatchError("block grid does not match the sketch grid");
  }
  if (block < 0 || block >= grid.block_count()) throw DomainError("block index out of range");
  RowMatrix out(j.rows(), kBlockPixels);
  const auto [x0, y0] = grid.block_origin(block);
  for (int r = 0; r < kMacroblockSize; ++r) {
    const auto first = static_cast<Eigen::Index>((y0 + r) * grid.width() + x0);
    out.middleCols(r * kMacroblockSize, kMacroblockSize) =
        j.entries().middleCols(first, kMacroblockSize);
  }
  return out;
}

std::vector<double> importance_map(const SketchedJacobian& j) {
  const Vector norms = j.entries().colwise().squaredNorm().transpose();
  return {norms.data(), norms.data() + norms.size()};
}

void export_importance_map(const std::filesystem::path& path, std::span<const double> map,
                           int width, int height) {
  if (map.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DomainError("importance map size does not match dimensions");
  }
  const double peak = map.empty() ? 0.0 : *std::max_element(map.begin(), map.end());
  std::vector<std::uint16_t> samples(map.size(), 0);
  if (peak > 0.0) {
    for (std::size_t i = 0; i < map.size(); ++i) {
      samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(map[i] / peak, 0.0, 1.0) * 65535.0));
    }
  }
  save_pgm16(path, width, height, samples);
}

double spectral_norm_sq(const RowMatrix& m, double tol, int max_iter) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0) {
    throw DomainError("spectral norm of an all-zero matrix is not estimated");
  }
  // Iterate on the smaller Gram matrix without forming it.
  const bool short_side_rows = m.rows() <= m.cols();
  const Eigen::Index n = short_side_rows ? m.rows() : m.cols();
  auto gram = [&](const Vector& v) -> Vector {
    return short_side_rows ? Vector(m * (m.transpose() * v)) : Vector(m.transpose() * (m * v));
  };

  Prng prng(0x5EEDC0DEULL);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = prng.uniform(0.5, 1.5);
  v.normalize();

  // The Rayleigh quotient rises monotonically. A stalled quotient means the
  // remaining residual lives in a cluster of near-top eigenvalues.
  double estimate = 0.0;
  double previous = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector gv = gram(v);
    estimate = v.dot(gv);
    const double residual = (gv - estimate * v).norm();
    if (residual <= tol * estimate) return estimate;
    if (it > 0 && std::abs(estimate - previous) <= 1e-3 * tol * estimate) return estimate;
    previous = estimate;
    const double len = gv.norm();
    if (len == 0.0) throw DomainError("power iteration collapsed to zero");
    v = gv / len;
  }
  throw ConvergenceError("power iteration did not converge", estimate);
}

double spectral_norm_sq(const SketchedJacobian& j, double tol, int max_iter) {
  return spectral_norm_sq(j.entries(), tol, max_iter);
}

std::vector<double> frobenius_sq_per_block(const SketchedJacobian& j, const BlockGrid& grid) {
  if (grid.width() != j.width() || grid.height() != j.height()) {
    throw GridMismatchError("block grid does not match the sketch grid");
  }
  std::vector<double> out(grid.block_count(), 0.0);
  const Vector col_norms = j.entries().colwise().squaredNorm().transpose();
  for (int b = 0; b < grid.block_count(); ++b) {
    double sum = 0.0;
    for (int k = 0; k < kBlockPixels; ++k) sum += col_norms(static_cast<Eigen::Index>(grid.pixel_index(b, k)));
    out[b] = sum;
  }
  return out;
}

void check_grid(const SketchedJacobian& j, const ImagePlane& plane) {
  if (j.width() != plane.width() || j.height() != plane.height()) {
    throw GridMismatchError("sketch grid " + std::to_string(j.width()) + "x" +
                            std::to_string(j.height()) + " does not match image grid " +
                            std::to_string(plane.width()) + "x" + std::to_string(plane.height()));
  }
}

namespace {
constexpr std::string_view kSketchMagic = "SKJ1";
constexpr std::uint8_t kSketchVersion = 1;
}  // namespace

std::vector<std::uint8_t> serialize_sketch(const SketchedJacobian& j) {
  ByteWriter w;
  w.raw(kSketchMagic);
  w.u8(kSketchVersion);
  w.u32(static_cast<std::uint32_t>(j.width()));
  w.u32(static_cast<std::uint32_t>(j.height()));
  w.u32(static_cast<std::uint32_t>(j.rows()));
  w.u64(j.seed());
  w.u16(static_cast<std::uint16_t>(j.source_tag().size()));
  w.raw(j.source_tag());
  w.bytes().reserve(w.bytes().size() + 4 * static_cast<std::size_t>(j.entries().size()));
  const RowMatrix& e = j.entries();
  for (Eigen::Index r = 0; r < e.rows(); ++r) {
    for (Eigen::Index c = 0; c < e.cols(); ++c) w.f32(static_cast<float>(e(r, c)));
  }
  return w.take();
}

SketchedJacobian parse_sketch(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "sketch file");
  if (r.str(4) != kSketchMagic) throw FormatError("sketch file: bad magic");
  const std::uint8_t version = r.u8();
  if (version != kSketchVersion) {
    throw FormatError("sketch file: unsupported version " + std::to_string(version));
  }
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  const std::uint32_t rows = r.u32();
  const std::uint64_t seed = r.u64();
  const std::uint16_t tag_len = r.u16();
  std::string tag = r.str(tag_len);
  if (width == 0 || height == 0 || width % kMacroblockSize != 0 || height % kMacroblockSize != 0 ||
      width > (1u << 16) || height > (1u << 16)) {
    throw FormatError("sketch file: invalid grid");
  }
  if (rows == 0) throw FormatError("sketch file: zero rows");
  const std::uint64_t n_p = static_cast<std::uint64_t>(width) * height;
  const std::uint64_t expected = n_p * rows * 4;
  if (r.remaining() != expected) {
    throw FormatError("sketch file: payload size " + std::to_string(r.remaining()) +
                      " does not match header (" + std::to_string(expected) + ")");
  }
  RowMatrix e(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n_p));
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index c = 0; c < e.cols(); ++c) e(i, c) = static_cast<double>(r.f32());
  }
  return SketchedJacobian(static_cast<int>(width), static_cast<int>(height), seed, std::move(tag),
                          std::move(e));
}

void write_sketch(const std::filesystem::path& path, const SketchedJacobian& j) {
  write_file(path, serialize_sketch(j));
}

SketchedJacobian read_sketch(const std::filesystem::path& path) { return parse_sketch(read_file(path)); }

}  // namespace idse
