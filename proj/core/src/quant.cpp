#include "idse/quant.hpp"

#include <cmath>
#include <limits>

#include "idse/error.hpp"

namespace idse {

double quant_step(int qp, int dqp) { return std::exp2((qp + dqp - 4) / 6.0); }

double QuantizerSpec::step() const { return quant_step(qp, dqp); }

std::int32_t quantize(double y, double step) {
  if (!(step > 0.0)) throw DomainError("quantizer step must be positive");
  const double q = std::round(y / step);  // std::round rounds halves away from zero
  if (std::abs(q) > static_cast<double>(std::numeric_limits<std::int32_t>::max() / 4)) {
    throw DomainError("quantized level out of range");
  }
  return static_cast<std::int32_t>(q);
}

double dequantize(std::int32_t level, double step) noexcept { return level * step; }

std::vector<std::int32_t> quantize(std::span<const double> coeffs, const QuantizerSpec& spec) {
  const double step = spec.step();
  std::vector<std::int32_t> out(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) out[i] = quantize(coeffs[i], step);
  return out;
}

std::vector<double> dequantize(std::span<const std::int32_t> levels, const QuantizerSpec& spec) {
  const double step = spec.step();
  std::vector<double> out(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) out[i] = dequantize(levels[i], step);
  return out;
}

}  // namespace idse
