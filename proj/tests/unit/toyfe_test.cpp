#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "idse/error.hpp"
#include "idse/toyfe.hpp"

namespace idse {
namespace {

// Direct nested-loop evaluation of the conv-relu-conv extractor.
Vector reference_conv(const ConvWeights& w, const ImagePlane& x) {
  const int W = x.width(), H = x.height();
  auto in = [&](int px, int py) {
    return px < 0 || py < 0 || px >= W || py >= H ? 0.0 : x.at(px, py) / 64.0;
  };
  std::vector<double> hidden(static_cast<std::size_t>(4 * W * H));
  for (int c = 0; c < 4; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int xx = 0; xx < W; ++xx) {
        double acc = w.bias1[c];
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) acc += w.conv1[c * 9 + ky * 3 + kx] * in(xx + kx - 1, y + ky - 1);
        }
        hidden[static_cast<std::size_t>((c * H + y) * W + xx)] = std::max(0.0, acc);
      }
    }
  }
  Vector out(2 * W * H);
  for (int o = 0; o < 2; ++o) {
    for (int y = 0; y < H; ++y) {
      for (int xx = 0; xx < W; ++xx) {
        double acc = w.bias2[o];
        for (int c = 0; c < 4; ++c) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int hx = xx + kx - 1, hy = y + ky - 1;
              if (hx < 0 || hy < 0 || hx >= W || hy >= H) continue;
              acc += w.conv2[(o * 4 + c) * 9 + ky * 3 + kx] * hidden[static_cast<std::size_t>((c * H + hy) * W + hx)];
            }
          }
        }
        out((o * H + y) * W + xx) = acc;
      }
    }
  }
  return out;
}

ImagePlane perturbed(const ImagePlane& x, std::span<const double> e, double scale) {
  std::vector<double> v(x.samples().begin(), x.samples().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += scale * e[i];
  return ImagePlane(x.width(), x.height(), std::move(v));
}

TEST(ToyKind, NamesRoundTrip) {
  for (ToyKind k : {ToyKind::identity, ToyKind::blur_down, ToyKind::block_blur, ToyKind::conv_relu_conv}) {
    EXPECT_EQ(parse_toy_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_toy_kind("resnet"), DomainError);
}

TEST(Identity, FeaturesAreTheFlattenedImage) {
  const ImagePlane x = testing::random_image(32, 16, 1);
  const auto fe = ToyFeatureExtractor::identity(32, 16);
  const Vector f = fe.features(x);
  ASSERT_EQ(f.size(), 512);
  for (int i = 0; i < 512; ++i) EXPECT_EQ(f(i), x.samples()[i]);
  EXPECT_EQ(fe.dense_jacobian(x), RowMatrix::Identity(512, 512));
}

TEST(BlurDown, ConstantImageStaysConstant) {
  const auto fe = ToyFeatureExtractor::blur_down(32, 32);
  const Vector f = fe.features(ImagePlane::filled(32, 32, 77.0));
  ASSERT_EQ(f.size(), 16 * 16);
  for (Eigen::Index i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(f(i), 77.0);
}

TEST(BlurDown, RowsHoldTheKernelTaps) {
  const auto fe = ToyFeatureExtractor::blur_down(32, 32);
  const RowMatrix j = fe.dense_jacobian(ImagePlane::filled(32, 32, 0.0));
  // output (r=3, c=5) is centred at input (6, 10)
  const auto row = j.row(3 * 16 + 5);
  const double taps[3] = {0.25, 0.5, 0.25};
  double total = 0.0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      EXPECT_DOUBLE_EQ(row((6 + dy) * 32 + 10 + dx), taps[dy + 1] * taps[dx + 1]);
      total += row((6 + dy) * 32 + 10 + dx);
    }
  }
  EXPECT_DOUBLE_EQ(row.sum(), total);
  // top-left output clamps onto the border pixels
  // clamped taps fold onto pixel 0 with weight (0.25 + 0.5) per axis
  EXPECT_DOUBLE_EQ(j(0, 0), 0.75 * 0.75);
  EXPECT_DOUBLE_EQ(j.row(0).sum(), 1.0);
}

TEST(BlockBlur, JacobianIsBlockDiagonal) {
  const auto fe = ToyFeatureExtractor::block_blur(32, 32);
  const RowMatrix j = fe.dense_jacobian(ImagePlane::filled(32, 32, 0.0));
  const BlockGrid g(32, 32);
  for (Eigen::Index r = 0; r < j.rows(); ++r) {
    const int oy = static_cast<int>(r / 16) * 2, ox = static_cast<int>(r % 16) * 2;
    const int block = (oy / 16) * 2 + ox / 16;
    for (Eigen::Index p = 0; p < j.cols(); ++p) {
      if (j(r, p) != 0.0) EXPECT_EQ(g.block_of_pixel(static_cast<std::size_t>(p)), block);
    }
    EXPECT_DOUBLE_EQ(j.row(r).sum(), 1.0);
  }
}

TEST(ConvReluConv, MatchesNestedLoopReference) {
  const ConvWeights w = generate_conv_weights();
  const auto fe = ToyFeatureExtractor::conv_relu_conv(32, 16, w);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ImagePlane x = testing::random_image(32, 16, seed);
    EXPECT_LT((fe.features(x) - reference_conv(w, x)).norm(), 1e-12 * reference_conv(w, x).norm());
  }
}

TEST(ConvReluConv, ZeroImageWithZeroBiasesGivesZeroFeatures) {
  ConvWeights w = generate_conv_weights();
  w.bias1.fill(0.0);
  w.bias2.fill(0.0);
  const Vector f = ToyFeatureExtractor::conv_relu_conv(16, 16, w).features(ImagePlane::filled(16, 16, 0.0));
  EXPECT_EQ(f.norm(), 0.0);
}

TEST(ConvWeightsFile, CheckedInFileEqualsGenerator) {
  const ConvWeights shipped = load_conv_weights(default_conv_weights_path());
  const ConvWeights generated = generate_conv_weights(0xC0FFEE);
  EXPECT_EQ(shipped.conv1, generated.conv1);
  EXPECT_EQ(shipped.bias1, generated.bias1);
  EXPECT_EQ(shipped.conv2, generated.conv2);
  EXPECT_EQ(shipped.bias2, generated.bias2);
  EXPECT_EQ(serialize_conv_weights(shipped), read_file(default_conv_weights_path()));
}

TEST(ConvWeightsFile, GeneratorRangesAndFloatRounding) {
  const ConvWeights w = generate_conv_weights();
  for (double v : w.conv1) {
    EXPECT_LE(std::abs(v), 1.0 / 3.0);
    EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
  }
  for (double v : w.conv2) EXPECT_LE(std::abs(v), 1.0 / 6.0);
  for (double v : w.bias1) EXPECT_LE(std::abs(v), 0.5);
  for (double v : w.bias2) EXPECT_LE(std::abs(v), 0.1);
}

TEST(ConvWeightsFile, RejectsCorruptFiles) {
  auto bytes = serialize_conv_weights(generate_conv_weights());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(parse_conv_weights(bad), FormatError);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  EXPECT_THROW(parse_conv_weights(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(parse_conv_weights(trailing), FormatError);
}

class JacobianProducts : public ::testing::TestWithParam<ToyKind> {};

TEST_P(JacobianProducts, JvpAndVjpAreAdjoint) {
  const auto fe = ToyFeatureExtractor::make(GetParam(), 32, 32);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ImagePlane x = testing::random_image(32, 32, seed);
    const auto v = testing::random_vector(fe.input_dim(), 10 + seed);
    const auto w = testing::random_vector(fe.output_dim(), 20 + seed);
    const Vector jv = fe.jvp(x, v);
    const Vector jtw = fe.vjp(x, w);
    const double lhs = jv.dot(Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
    const double rhs = jtw.dot(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    EXPECT_LE(testing::relative_error(lhs, rhs), 1e-12);
  }
}

TEST_P(JacobianProducts, JvpMatchesCentralDifferencesAwayFromKinks) {
  const auto fe = ToyFeatureExtractor::make(GetParam(), 32, 32);
  const ImagePlane x = testing::random_image(32, 32, 4);
  const bool linear = fe.is_linear();
  const auto mask = linear ? std::vector<std::uint8_t>{} : fe.activation_mask(x);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto v = testing::random_vector(fe.input_dim(), 50 + seed);
    const double h = 1e-3;
    const ImagePlane up = perturbed(x, v, h), dn = perturbed(x, v, -h);
    if (!linear && (fe.activation_mask(up) != mask || fe.activation_mask(dn) != mask)) continue;
    const Vector fd = (fe.features(up) - fe.features(dn)) / (2 * h);
    const Vector jv = fe.jvp(x, v);
    EXPECT_LE((fd - jv).norm(), 1e-5 * jv.norm());
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST_P(JacobianProducts, ColumnNormsMatchDenseJacobian) {
  const auto fe = ToyFeatureExtractor::make(GetParam(), 32, 16);
  const ImagePlane x = testing::random_image(32, 16, 8);
  const Vector dense = fe.dense_jacobian(x).colwise().squaredNorm().transpose();
  EXPECT_LT((fe.column_norms_sq(x) - dense).norm(), 1e-12 * dense.norm());
}

TEST_P(JacobianProducts, RejectsGridMismatch) {
  const auto fe = ToyFeatureExtractor::make(GetParam(), 32, 16);
  EXPECT_THROW(fe.features(testing::random_image(16, 16, 1)), GridMismatchError);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, JacobianProducts,
                         ::testing::Values(ToyKind::identity, ToyKind::blur_down, ToyKind::block_blur,
                                           ToyKind::conv_relu_conv),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(FeatureDistance, Examples) {
  const ImagePlane x = testing::random_image(16, 16, 1);
  const ImagePlane y = testing::random_image(16, 16, 2);
  const auto id = ToyFeatureExtractor::identity(16, 16);
  EXPECT_EQ(feature_distance(id, x, x), 0.0);
  double sse = 0.0;
  for (double e : pixel_error(y, x)) sse += e * e;
  EXPECT_DOUBLE_EQ(feature_distance(id, x, y), sse);

  const auto blur = ToyFeatureExtractor::blur_down(16, 16);
  const PixelError e = pixel_error(y, x);
  EXPECT_LE(testing::relative_error(feature_distance(blur, x, y), blur.jvp(x, e).squaredNorm()), 1e-12);
}

TEST(Linearization, GapShrinksWithPerturbationSize) {
  const auto fe = ToyFeatureExtractor::conv_relu_conv(32, 32);
  const ImagePlane x = testing::random_image(32, 32, 6);
  const auto e = testing::random_vector(x.pixel_count(), 7, 8.0);
  double previous = std::numeric_limits<double>::infinity();
  for (double s : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
    const ImagePlane xh = perturbed(x, e, s);
    const PixelError err = pixel_error(xh, x);
    const double gap = std::abs(feature_distance(fe, x, xh) - fe.jvp(x, err).squaredNorm());
    EXPECT_LT(gap, previous) << "scale " << s;
    previous = gap;
  }
}

TEST(Lipschitz, IdenticalImagesGiveZero) {
  const auto fe = ToyFeatureExtractor::blur_down(16, 16);
  const ImagePlane x = testing::random_image(16, 16, 1);
  const LipschitzCheck c = lipschitz_bound_check(make_lipschitz_task(fe.output_dim(), TaskLoss::absolute, 3.0, 1), fe, x, x);
  EXPECT_EQ(c.consistency_loss, 0.0);
  EXPECT_EQ(c.bound, 0.0);
  EXPECT_TRUE(c.holds);
}

TEST(Lipschitz, BoundHoldsOnRandomTrials) {
  const auto fe = ToyFeatureExtractor::conv_relu_conv(16, 16);
  Prng prng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const TaskLoss loss = trial % 2 == 0 ? TaskLoss::absolute : TaskLoss::squared;
    const LipschitzTask task = make_lipschitz_task(fe.output_dim(), loss, prng.uniform(-5.0, 5.0), prng.next_u64());
    const ImagePlane x = testing::random_image(16, 16, prng.next_u64());
    const auto e = testing::random_vector(x.pixel_count(), prng.next_u64(), prng.uniform(0.1, 20.0));
    const LipschitzCheck c = lipschitz_bound_check(task, fe, x, perturbed(x, e, 1.0));
    ASSERT_TRUE(c.holds) << "trial " << trial << ": " << c.consistency_loss << " > " << c.bound;
    EXPECT_LE(c.consistency_loss, c.bound * (1 + 1e-12));
  }
}

TEST(Lipschitz, HeadNormIsExactAndBoundScalesQuadratically) {
  const auto fe = ToyFeatureExtractor::blur_down(16, 16);
  LipschitzTask task = make_lipschitz_task(fe.output_dim(), TaskLoss::absolute, 0.0, 5);
  EXPECT_DOUBLE_EQ(task.head_norm, task.head.norm());
  const ImagePlane x = testing::random_image(16, 16, 1);
  const ImagePlane y = testing::random_image(16, 16, 2);
  const double b1 = lipschitz_bound_check(task, fe, x, y).bound;
  task.head *= 2.0;
  task.head_norm *= 2.0;
  EXPECT_DOUBLE_EQ(lipschitz_bound_check(task, fe, x, y).bound, 4.0 * b1);
}

}  // namespace
}  // namespace idse
