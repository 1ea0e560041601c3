#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idse/feature_map.hpp"

namespace idse {

enum class ToyKind {
  identity,        // f(x) = x
  blur_down,       // separable [1,2,1]/4, stride 2, edge-clamped
  block_blur,      // blur_down clamped inside each macroblock: block-diagonal Jacobian
  conv_relu_conv,  // 3x3 conv (1->4) -> ReLU -> 3x3 conv (4->2), zero padding
};

std::string_view to_string(ToyKind kind);
ToyKind parse_toy_kind(std::string_view name);

/// Frozen parameters of the conv_relu_conv extractor. Layout is
/// [out][in][ky][kx] for the kernels.
struct ConvWeights {
  static constexpr int kHidden = 4;
  static constexpr int kOutputs = 2;

  std::array<double, kHidden * 9> conv1{};
  std::array<double, kHidden> bias1{};
  std::array<double, kOutputs * kHidden * 9> conv2{};
  std::array<double, kOutputs> bias2{};
};

/// Weights version 1: uniform draws from Prng(seed), rounded to float32.
ConvWeights generate_conv_weights(std::uint64_t seed = 0xC0FFEEULL);

/// TFW1 weights file: "TFW1" | u32 tensor count | per tensor: u8 rank, u32
/// dims, float32 data (all little-endian). Tensors: conv1 [4,1,3,3], bias1
/// [4], conv2 [2,4,3,3], bias2 [2].
std::vector<std::uint8_t> serialize_conv_weights(const ConvWeights& w);
ConvWeights parse_conv_weights(std::span<const std::uint8_t> bytes);
ConvWeights load_conv_weights(const std::filesystem::path& path);

/// Location of the weights shipped with the library. IDSE_DATA_DIR overrides it.
std::filesystem::path default_conv_weights_path();

/// Analytic feature extractor with an exact Jacobian, used as ground truth.
class ToyFeatureExtractor final : public FeatureMap {
 public:
  /// Inputs are scaled by 1/64 before the first convolution.
  static constexpr double kInputScale = 1.0 / 64.0;

  static ToyFeatureExtractor identity(int width, int height);
  static ToyFeatureExtractor blur_down(int width, int height);
  static ToyFeatureExtractor block_blur(int width, int height);
  static ToyFeatureExtractor conv_relu_conv(int width, int height);
  static ToyFeatureExtractor conv_relu_conv(int width, int height, const ConvWeights& weights);
  static ToyFeatureExtractor make(ToyKind kind, int width, int height);

  ToyKind kind() const noexcept { return kind_; }
  bool is_linear() const noexcept { return kind_ != ToyKind::conv_relu_conv; }

  int input_width() const override { return width_; }
  int input_height() const override { return height_; }
  std::size_t output_dim() const override;

  Vector features(const ImagePlane& x) const override;
  Vector jvp(const ImagePlane& x, std::span<const double> v) const override;
  Vector vjp(const ImagePlane& x, std::span<const double> w) const override;
  RowMatrix dense_jacobian(const ImagePlane& x) const override;
  Vector column_norms_sq(const ImagePlane& x) const override;

  /// ReLU activation pattern at x (hidden-channel major). Pre-activations that
  /// are exactly zero take their sign from x + 1e-9.
  std::vector<std::uint8_t> activation_mask(const ImagePlane& x) const;

 private:
  ToyFeatureExtractor(ToyKind kind, int width, int height, ConvWeights weights = {});

  void check_input(const ImagePlane& x) const;
  Vector blur_apply(std::span<const double> v) const;
  Vector blur_apply_transposed(std::span<const double> w) const;
  std::vector<double> conv1_linear(std::span<const double> u) const;
  Vector conv_forward_linear(std::span<const double> du, std::span<const std::uint8_t> mask) const;

  ToyKind kind_;
  int width_;
  int height_;
  ConvWeights weights_;
};

/// Exact squared Euclidean feature distance ||f(x_hat) - f(x)||^2.
double feature_distance(const FeatureMap& fe, const ImagePlane& x, const ImagePlane& x_hat);

enum class TaskLoss { absolute, squared };

/// Linear head h(z) = <head, z> on the features with a scalar target label.
struct LipschitzTask {
  Vector head;
  double head_norm = 0.0;  // H, the operator norm of the head
  TaskLoss loss = TaskLoss::absolute;
  double label = 0.0;
};

LipschitzTask make_lipschitz_task(std::size_t feature_dim, TaskLoss loss, double label,
                                  std::uint64_t seed);

struct LipschitzCheck {
  double consistency_loss = 0.0;  // (loss(x_hat) - loss(x))^2
  double bound = 0.0;             // H^2 L^2 FD
  double loss_lipschitz = 0.0;    // L used for this instance
  double feature_distance = 0.0;
  bool holds = false;
};

/// For the squared loss, L is taken on the segment between the two logits:
/// L = 2 max(|t - y|, |t_hat - y|).
LipschitzCheck lipschitz_bound_check(const LipschitzTask& task, const FeatureMap& fe,
                                     const ImagePlane& x, const ImagePlane& x_hat);

}  // namespace idse
