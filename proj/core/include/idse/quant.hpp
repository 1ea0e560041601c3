#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace idse {

inline constexpr int kMinDqp = -4;
inline constexpr int kMaxDqp = 4;
inline constexpr int kMaxQp = 51;

/// Scalar quantizer with step 2^((qp + dqp - 4) / 6): the step doubles every 6 QP.
struct QuantizerSpec {
  int qp = 30;
  int dqp = 0;

  double step() const;
};

double quant_step(int qp, int dqp = 0);

/// Round half away from zero of y / step.
std::int32_t quantize(double y, double step);
double dequantize(std::int32_t level, double step) noexcept;

std::vector<std::int32_t> quantize(std::span<const double> coeffs, const QuantizerSpec& spec);
std::vector<double> dequantize(std::span<const std::int32_t> levels, const QuantizerSpec& spec);

}  // namespace idse
