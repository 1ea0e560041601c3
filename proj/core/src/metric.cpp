#include "idse/metric.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "idse/error.hpp"

namespace idse {

double sse(std::span<const double> e) {
  double acc = 0.0;
  for (double v : e) acc += v * v;
  return acc;
}

double idse_block(const RowMatrix& jb, std::span<const double> e, double tau) {
  if (static_cast<std::size_t>(jb.cols()) != e.size()) throw DomainError("Jacobian block and error differ in size");
  if (tau < 0.0) throw DomainError("tau must be nonnegative");
  const Eigen::Map<const Vector> ev(e.data(), static_cast<Eigen::Index>(e.size()));
  double acc = 0.0;
  for (Eigen::Index r = 0; r < jb.rows(); ++r) {
    const double p = jb.row(r).dot(ev.transpose());
    acc += p * p;
  }
  return tau == 0.0 ? acc : acc + tau * sse(e);
}

double idse_block_transform(const RowMatrix& b, std::span<const double> e_y, double tau) {
  return idse_block(b, e_y, tau);
}

RowMatrix transform_jacobian_block(const RowMatrix& jb, Partition partition) {
  if (jb.cols() != kBlockPixels) throw DomainError("Jacobian block must have 256 columns");
  RowMatrix b(jb.rows(), kBlockPixels);
  Block row{};
  for (Eigen::Index r = 0; r < jb.rows(); ++r) {
    for (int k = 0; k < kBlockPixels; ++k) row[k] = jb(r, k);
    const Block t = forward_partition(row, partition);
    for (int k = 0; k < kBlockPixels; ++k) b(r, k) = t[k];
  }
  return b;
}

double compute_tau_tilde(const SketchedJacobian& j) {
  try {
    return spectral_norm_sq(j);
  } catch (const ConvergenceError&) {
    // Near-degenerate top eigenvalues: solve the small Gram matrix directly.
    const RowMatrix& m = j.entries();
    if (std::min(m.rows(), m.cols()) > kMaxDenseGram) throw;
    const Eigen::MatrixXd gram = m.rows() <= m.cols() ? Eigen::MatrixXd(m * m.transpose())
                                                      : Eigen::MatrixXd(m.transpose() * m);
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  }
}

double sse_lambda(int qp, double c) { return c * std::exp2((qp - 12) / 3.0); }

double normalized_frobenius(const SketchedJacobian& j, const BlockGrid& grid) {
  double sum = 0.0;
  for (double f : frobenius_sq_per_block(j, grid)) sum += f;
  return sum / (static_cast<double>(kBlockPixels) * grid.block_count());
}

double compute_lambda(int qp, double c, double normalized_frob, double tau) {
  if (!(c > 0.0)) throw DomainError("Lagrangian constant must be positive");
  return c * (normalized_frob + tau) * std::exp2((qp - 12) / 3.0);
}

double compute_lambda(int qp, double c, const SketchedJacobian& j, const BlockGrid& grid, double tau) {
  return compute_lambda(qp, c, normalized_frobenius(j, grid), tau);
}

BlockMetricState::BlockMetricState(const SketchedJacobian& j, MetricDomain domain) : domain_(domain) {
  const BlockGrid grid = j.grid();
  count_ = grid.block_count();
  frobenius_.reserve(static_cast<std::size_t>(count_));
  for (int b = 0; b < count_; ++b) {
    const RowMatrix slice = block_slice(j, grid, b);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < slice.rows(); ++r) {
      if ((slice.row(r).array() != 0.0).any()) keep.push_back(r);
    }
    RowMatrix compact(static_cast<Eigen::Index>(keep.size()), kBlockPixels);
    for (std::size_t i = 0; i < keep.size(); ++i) compact.row(static_cast<Eigen::Index>(i)) = slice.row(keep[i]);
    frobenius_.push_back(compact.squaredNorm());
    if (domain == MetricDomain::pixel) {
      pixel_.push_back(std::move(compact));
    } else {
      transform16_.push_back(transform_jacobian_block(compact, Partition::whole16));
      transform4_.push_back(transform_jacobian_block(compact, Partition::split4));
    }
  }
}

double BlockMetricState::distortion(int block, const CodingCandidate& c, std::span<const double> pixel_error,
                                    double tau) const {
  if (domain_ == MetricDomain::pixel) return idse_block(pixel_.at(block), pixel_error, tau);
  return idse_block_transform(transform_slice(block, c.choice.partition), c.coeff_error, tau);
}

}  // namespace idse
