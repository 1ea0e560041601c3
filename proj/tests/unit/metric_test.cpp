#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "idse/candidates.hpp"
#include "idse/error.hpp"
#include "idse/metric.hpp"
#include "idse/quant.hpp"
#include "idse/rdo.hpp"

namespace idse {
namespace {

SketchedJacobian random_sketch(int w, int h, int rows, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(w) * h;
  const auto v = testing::random_vector(static_cast<std::size_t>(rows * n), seed, 0.1);
  RowMatrix m = Eigen::Map<const RowMatrix>(v.data(), rows, n);
  return SketchedJacobian(w, h, seed, "random", m);
}

Block random_block(std::uint64_t seed) {
  Prng prng(seed);
  Block b{};
  for (double& v : b) v = static_cast<double>(prng.below(256));
  return b;
}

std::vector<double> block_error(const CodingCandidate& c, const Block& src) {
  std::vector<double> e(kBlockPixels);
  for (int i = 0; i < kBlockPixels; ++i) e[i] = c.recon[i] - src[i];
  return e;
}

TEST(Sse, Examples) {
  const std::vector<double> e{1.0, -2.0, 3.0};
  EXPECT_DOUBLE_EQ(sse(e), 14.0);
  EXPECT_DOUBLE_EQ(sse(std::vector<double>{}), 0.0);
}

TEST(IdseBlock, MatchesDenseFormula) {
  const auto v = testing::random_vector(8 * 256, 1);
  const RowMatrix jb = Eigen::Map<const RowMatrix>(v.data(), 8, 256);
  const auto e = testing::random_vector(256, 2, 3.0);
  const Eigen::Map<const Vector> ev(e.data(), 256);
  const double expected = (jb * ev).squaredNorm() + 0.5 * ev.squaredNorm();
  EXPECT_LE(testing::relative_error(idse_block(jb, e, 0.5), expected), 1e-10);
  EXPECT_THROW(idse_block(jb, std::vector<double>(255), 0.5), DomainError);
}

TEST(IdseBlock, TauOnlyIsScaledSse) {
  const RowMatrix empty(0, 256);
  const auto e = testing::random_vector(256, 3);
  EXPECT_LE(testing::relative_error(idse_block(empty, e, 2.5), 2.5 * sse(e)), 1e-12);
}

TEST(IdseBlock, IdentityJacobianReducesToSse) {
  const SketchedJacobian id = identity_jacobian(32, 32);
  for (MetricDomain d : {MetricDomain::pixel, MetricDomain::transform}) {
    const BlockMetricState state(id, d);
    const auto blocks = split_blocks(testing::random_image(32, 32, 4));
    for (int b = 0; b < 4; ++b) {
      for (const auto& c : enumerate_candidates(blocks[b], 33)) {
        const auto e = block_error(c, blocks[b]);
        EXPECT_LE(testing::relative_error(state.idse(b, c, e), sse(e)), 1e-9);
      }
    }
  }
}

TEST(IdseBlock, TransformDomainMatchesPixelDomain) {
  const SketchedJacobian j = random_sketch(32, 16, 6, 5);
  const BlockMetricState pixel(j, MetricDomain::pixel);
  const BlockMetricState transform(j, MetricDomain::transform);
  const auto blocks = split_blocks(testing::random_image(32, 16, 6));
  for (int b = 0; b < 2; ++b) {
    for (const auto& c : enumerate_candidates(blocks[b], 27)) {
      const auto e = block_error(c, blocks[b]);
      const double dp = pixel.distortion(b, c, e, 0.3);
      const double dt = transform.distortion(b, c, {}, 0.3);
      EXPECT_LE(testing::relative_error(dp, dt), 1e-9) << "candidate " << candidate_index(c.choice.dqp, c.choice.partition);
    }
  }
}

TEST(IdseBlock, TransformJacobianUsesThePartitionTransform) {
  const auto v = testing::random_vector(3 * 256, 7);
  const RowMatrix jb = Eigen::Map<const RowMatrix>(v.data(), 3, 256);
  for (Partition p : {Partition::whole16, Partition::split4}) {
    const RowMatrix b = transform_jacobian_block(jb, p);
    const auto e = testing::random_vector(256, 8);
    Block eb{};
    std::copy(e.begin(), e.end(), eb.begin());
    const Block ey = forward_partition(eb, p);
    const Vector lhs = b * Eigen::Map<const Vector>(ey.data(), 256);
    const Vector rhs = jb * Eigen::Map<const Vector>(e.data(), 256);
    EXPECT_LT((lhs - rhs).norm(), 1e-10 * rhs.norm());
  }
}

TEST(BlockMetricState, DropsRowsThatVanishOnABlock) {
  RowMatrix m = RowMatrix::Zero(2, 512);
  m(0, 3) = 1.0;     // block 0 only
  m(1, 20) = 2.0;    // block 1 only
  const SketchedJacobian j(32, 16, 0, "", m);
  const BlockMetricState state(j, MetricDomain::pixel);
  EXPECT_EQ(state.pixel_slice(0).rows(), 1);
  EXPECT_EQ(state.pixel_slice(1).rows(), 1);
  EXPECT_DOUBLE_EQ(state.frobenius_sq(0), 1.0);
  EXPECT_DOUBLE_EQ(state.frobenius_sq(1), 4.0);
}

TEST(TauTilde, Examples) {
  EXPECT_NEAR(compute_tau_tilde(identity_jacobian(16, 16)), 1.0, 1e-9);
  EXPECT_NEAR(compute_tau_tilde(identity_jacobian(16, 16).scaled(2.0)), 4.0, 1e-9);
  const SketchedJacobian j = random_sketch(16, 16, 5, 9);
  const Eigen::SelfAdjointEigenSolver<RowMatrix> es(j.entries() * j.entries().transpose());
  EXPECT_LE(testing::relative_error(compute_tau_tilde(j), es.eigenvalues().maxCoeff()), 1e-5);
}

TEST(TauTilde, StalledIterationFallsBackToDenseSolve) {
  // two nearly equal top singular values make power iteration crawl
  RowMatrix m = RowMatrix::Zero(2, 256);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0 - 1e-9;
  m(0, 1) = m(1, 0) = 0.0;
  const SketchedJacobian j(16, 16, 0, "", m);
  EXPECT_NEAR(compute_tau_tilde(j), 1.0, 1e-6);
}

TEST(Lambda, Examples) {
  EXPECT_DOUBLE_EQ(sse_lambda(12, 0.57), 0.57);
  EXPECT_DOUBLE_EQ(sse_lambda(18, 0.57), 4 * 0.57);
  EXPECT_DOUBLE_EQ(sse_lambda(6, 1.0), 0.25);
  for (int qp = 0; qp + 3 <= 51; ++qp) EXPECT_NEAR(sse_lambda(qp + 3, 1.0) / sse_lambda(qp, 1.0), 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(compute_lambda(12, 0.57, 0.0, 1.0), 0.57);
  EXPECT_DOUBLE_EQ(compute_lambda(24, 0.5, 2.0, 1.0), 0.5 * 3.0 * 16.0);
}

TEST(Lambda, ZeroJacobianWithUnitTauGivesC) {
  const SketchedJacobian zero(32, 32, 0, "", RowMatrix::Zero(3, 1024));
  EXPECT_DOUBLE_EQ(normalized_frobenius(zero, BlockGrid(32, 32)), 0.0);
  EXPECT_DOUBLE_EQ(compute_lambda(12, 0.8, zero, BlockGrid(32, 32), 1.0), 0.8);
}

TEST(Lambda, IdentityJacobianWithoutTauEqualsSseLambda) {
  const SketchedJacobian id = identity_jacobian(48, 32);
  EXPECT_DOUBLE_EQ(normalized_frobenius(id, BlockGrid(48, 32)), 1.0);
  for (int qp : {12, 24, 36}) EXPECT_DOUBLE_EQ(compute_lambda(qp, 0.57, id, BlockGrid(48, 32), 0.0), sse_lambda(qp, 0.57));
}

TEST(Metric, ScalingTheJacobianKeepsDecisions) {
  const ImagePlane x = testing::random_image(48, 32, 12);
  const SketchedJacobian j = random_sketch(48, 32, 8, 13);
  MetricConfig cfg;
  cfg.kind = MetricKind::idse;
  const EncodeResult a = encode_with_rdo(x, 30, cfg, &j);
  const SketchedJacobian j2 = j.scaled(2.0);
  const EncodeResult b = encode_with_rdo(x, 30, cfg, &j2);
  EXPECT_EQ(a.decisions, b.decisions);
  EXPECT_DOUBLE_EQ(b.stats.lambda, 4.0 * a.stats.lambda);
  EXPECT_DOUBLE_EQ(b.stats.tau, 4.0 * a.stats.tau);
}

TEST(Metric, MeanIdseShrinksWithFinerQuantization) {
  const SketchedJacobian j = random_sketch(64, 64, 8, 21);
  const BlockMetricState state(j, MetricDomain::transform);
  const auto blocks = split_blocks(testing::random_image(64, 64, 22));
  for (Partition p : {Partition::whole16, Partition::split4}) {
    std::vector<double> mean(9, 0.0);
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
      const auto cands = enumerate_candidates(blocks[b], 30);
      for (int dqp = kMinDqp; dqp <= kMaxDqp; ++dqp) {
        mean[dqp + 4] += state.idse(b, cands[candidate_index(dqp, p)], {});
      }
    }
    for (int i = 1; i < 9; ++i) EXPECT_GE(mean[i], mean[i - 1]);
  }
}

}  // namespace
}  // namespace idse
