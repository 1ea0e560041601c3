#pragma once

#include <optional>
#include <span>
#include <vector>

#include "idse/bitstream.hpp"
#include "idse/candidates.hpp"
#include "idse/linalg.hpp"
#include "idse/sketch.hpp"

namespace idse {

/// Default Lagrangian constant c.
inline constexpr double kDefaultLambdaC = 0.57;

enum class MetricDomain { pixel, transform };

struct MetricConfig {
  MetricKind kind = MetricKind::sse;
  double alpha = 1.0;  // tau = alpha * tau_tilde
  double lambda_c = kDefaultLambdaC;
  MetricDomain domain = MetricDomain::transform;
  /// Overrides the spectral-norm estimate when set.
  std::optional<double> tau_tilde;
  /// Overrides the Lagrangian multiplier when set.
  std::optional<double> lambda;
};

double sse(std::span<const double> e);

/// ||Jb e||^2 + tau ||e||^2 in the pixel domain.
double idse_block(const RowMatrix& jb, std::span<const double> e, double tau);

/// ||B e_y||^2 + tau ||e_y||^2 with B = Jb U, e_y a transform-domain error.
double idse_block_transform(const RowMatrix& b, std::span<const double> e_y, double tau);

/// B = Jb U for a partition: every row of Jb is forward-transformed as a block.
RowMatrix transform_jacobian_block(const RowMatrix& jb, Partition partition);

/// Largest Gram side solved densely when power iteration stalls.
inline constexpr Eigen::Index kMaxDenseGram = 1024;

/// tau_tilde = ||J_s||_2^2 via power iteration, with a dense eigensolve of the
/// Gram matrix when the iteration does not converge.
double compute_tau_tilde(const SketchedJacobian& j);

/// c * 2^((QP - 12) / 3), the SSE Lagrangian.
double sse_lambda(int qp, double c);

/// c * (sum_i ||J_s^(i)||_F^2 / (n_pb n_b) + tau) * 2^((QP - 12) / 3).
double compute_lambda(int qp, double c, const SketchedJacobian& j, const BlockGrid& grid, double tau);
double compute_lambda(int qp, double c, double normalized_frobenius, double tau);

/// sum_i ||J_s^(i)||_F^2 / (n_pb n_b).
double normalized_frobenius(const SketchedJacobian& j, const BlockGrid& grid);

/// Per-block Jacobian data prepared once per image. Rows of a block slice that
/// vanish on the block are dropped; they contribute nothing to the metric.
class BlockMetricState {
 public:
  BlockMetricState(const SketchedJacobian& j, MetricDomain domain);

  MetricDomain domain() const noexcept { return domain_; }
  int block_count() const noexcept { return count_; }

  /// Pixel-domain slice (compressed rows).
  const RowMatrix& pixel_slice(int block) const { return pixel_.at(block); }
  /// Transform-domain matrix B for a partition (compressed rows).
  const RowMatrix& transform_slice(int block, Partition p) const {
    return p == Partition::whole16 ? transform16_.at(block) : transform4_.at(block);
  }
  double frobenius_sq(int block) const { return frobenius_.at(block); }

  /// Regularized IDSE of a candidate. `pixel_error` is recon - source for the
  /// block (only read in the pixel domain).
  double distortion(int block, const CodingCandidate& c, std::span<const double> pixel_error,
                    double tau) const;

  /// Unregularized ||J_s^(i) e||^2 of a candidate.
  double idse(int block, const CodingCandidate& c, std::span<const double> pixel_error) const {
    return distortion(block, c, pixel_error, 0.0);
  }

 private:
  MetricDomain domain_;
  int count_ = 0;
  std::vector<RowMatrix> pixel_;
  std::vector<RowMatrix> transform16_;
  std::vector<RowMatrix> transform4_;
  std::vector<double> frobenius_;
};

}  // namespace idse
