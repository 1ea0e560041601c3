#pragma once

#include <cstddef>
#include <span>

#include "idse/image.hpp"
#include "idse/linalg.hpp"

namespace idse {

/// A differentiable map from a padded image grid to a feature vector, with
/// exact Jacobian-vector and vector-Jacobian products at any input.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;

  virtual int input_width() const = 0;
  virtual int input_height() const = 0;
  virtual std::size_t output_dim() const = 0;

  virtual Vector features(const ImagePlane& x) const = 0;

  /// J(x) v for a pixel-space vector v.
  virtual Vector jvp(const ImagePlane& x, std::span<const double> v) const = 0;

  /// J(x)^T w for a feature-space vector w.
  virtual Vector vjp(const ImagePlane& x, std::span<const double> w) const = 0;

  /// Dense n_f x n_p Jacobian. The default builds it column by column from jvp.
  virtual RowMatrix dense_jacobian(const ImagePlane& x) const;

  /// Squared column norms of J(x), i.e. diag(J^T J). Default: one jvp per pixel.
  virtual Vector column_norms_sq(const ImagePlane& x) const;

  std::size_t input_dim() const {
    return static_cast<std::size_t>(input_width()) * static_cast<std::size_t>(input_height());
  }
};

}  // namespace idse
