#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "idse/bitstream.hpp"
#include "idse/candidates.hpp"
#include "idse/feature_map.hpp"
#include "idse/metric.hpp"
#include "idse/sketch.hpp"

namespace idse {

/// Chosen candidate of one block.
struct RdoChoice {
  int candidate = 0;
  double distortion = 0.0;
  int bits = 0;
  double cost = 0.0;
};

/// argmin of d + lambda * bits. Ties go to fewer bits, then the lower index.
RdoChoice select_candidate(std::span<const double> distortions, std::span<const int> bits, double lambda);

/// Evaluates every candidate of a block under the metric state (IDSE) or SSE
/// when `state` is null, and selects the best one.
RdoChoice rdo_block(const std::vector<CodingCandidate>& candidates, const Block& source,
                    const BlockMetricState* state, int block, double tau, double lambda);

struct BlockStats {
  int block = 0;
  Partition partition = Partition::whole16;
  int dqp = 0;
  double d_sse = 0.0;
  double d_idse = 0.0;  // ||J_s^(i) e||^2 without regularization; NaN without a sketch
  int bits = 0;
  double cost = 0.0;
};

struct EncodeStats {
  std::vector<BlockStats> blocks;
  std::size_t total_bits = 0;  // whole file including header and padding
  std::size_t payload_bits = 0;
  double bits_per_pixel = 0.0;  // total_bits over original-size pixels
  double psnr = 0.0;            // real-valued reconstruction against the source
  double lambda = 0.0;
  double tau = 0.0;
  double tau_tilde = 0.0;
  std::optional<double> feature_distance;  // set when a feature map is supplied
};

struct EncodeResult {
  std::vector<std::uint8_t> bitstream;
  std::vector<int> decisions;  // chosen candidate index per block
  ImagePlane reconstruction;
  EncodeStats stats;
};

struct EncodeOptions {
  int threads = 1;
  const FeatureMap* feature_map = nullptr;
};

/// Block-wise RDO encoder. For MetricKind::idse the sketch is required and must
/// be on the plane's grid; for SSE an optional sketch only feeds d_idse stats.
EncodeResult encode_with_rdo(const ImagePlane& x, int qp, const MetricConfig& config,
                             const SketchedJacobian* sketch, const EncodeOptions& options = {});

/// Line-delimited stats: a '#' header line, then one record per block with
/// fields "block partition dqp d_sse d_idse bits cost".
void write_stats(std::ostream& out, const EncodeStats& stats);

/// Largest image side accepted by fd_rdo_reference.
inline constexpr int kMaxReferenceSide = 64;

struct ReferenceResult {
  std::vector<int> decisions;
  ImagePlane reconstruction;
};

/// Feature-distance RDO by one greedy raster sweep: each block tries all 18
/// candidates with the true FD of the whole image, earlier blocks fixed at their
/// choice and later blocks still at the source pixels. Exact when the Jacobian
/// is block diagonal and the extractor linear.
ReferenceResult fd_rdo_reference(const ImagePlane& x, int qp, const FeatureMap& fe, double lambda);

struct Percentiles {
  std::size_t count = 0;
  double median = 0.0;
  double p15 = 0.0;
  double p85 = 0.0;
};

/// Linear-interpolation percentile (q in [0, 100]).
double percentile(std::vector<double> values, double q);
Percentiles summarize(std::vector<double> values);

struct DiagonalDominance {
  Percentiles diagonal;           // b_i^T b_i
  Percentiles off_diagonal;       // b_j^T b_i, i < j, signed
  Percentiles off_diagonal_abs;   // |b_j^T b_i|, all pairs
  Percentiles adjacent_abs;       // |b_j^T b_i| for 8-neighbour blocks only
};

/// b_i = J^(i) e_i / (||e_i|| ||J||_F) over SSE-RDO residuals at every QP of the
/// ladder. Blocks with zero residual are skipped.
DiagonalDominance diagonal_dominance_stats(const FeatureMap& fe, std::span<const ImagePlane> images,
                                           std::span<const int> qps);

}  // namespace idse
