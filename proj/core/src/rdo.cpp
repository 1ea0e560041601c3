#include "idse/rdo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "idse/error.hpp"
#include "idse/parallel.hpp"
#include "idse/toyfe.hpp"
#include "idse/quant.hpp"

namespace idse {

RdoChoice select_candidate(std::span<const double> distortions, std::span<const int> bits, double lambda) {
  if (distortions.empty() || distortions.size() != bits.size()) {
    throw DomainError("RDO needs at least one candidate with matching rates");
  }
  RdoChoice best;
  for (std::size_t i = 0; i < distortions.size(); ++i) {
    // lambda * 0 must not produce NaN when lambda is infinite
    const double rate_term = bits[i] == 0 ? 0.0 : lambda * bits[i];
    const double cost = distortions[i] + rate_term;
    const bool better = i == 0 || cost < best.cost || (cost == best.cost && bits[i] < best.bits);
    if (better) best = RdoChoice{static_cast<int>(i), distortions[i], bits[i], cost};
  }
  return best;
}

namespace {

Block block_error(const CodingCandidate& c, const Block& source) {
  Block e{};
  for (int k = 0; k < kBlockPixels; ++k) e[k] = c.recon[k] - source[k];
  return e;
}

double sse_distortion(const CodingCandidate& c, const Block& pixel_error, MetricDomain domain) {
  return domain == MetricDomain::pixel ? sse(pixel_error) : sse(c.coeff_error);
}

}  // namespace

RdoChoice rdo_block(const std::vector<CodingCandidate>& candidates, const Block& source,
                    const BlockMetricState* state, int block, double tau, double lambda) {
  std::vector<double> d(candidates.size());
  std::vector<int> r(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Block e = block_error(candidates[i], source);
    d[i] = state != nullptr ? state->distortion(block, candidates[i], e, tau) : sse(e);
    r[i] = candidates[i].bits;
  }
  return select_candidate(d, r, lambda);
}

EncodeResult encode_with_rdo(const ImagePlane& x, int qp, const MetricConfig& config,
                             const SketchedJacobian* sketch, const EncodeOptions& options) {
  if (qp < 0 || qp > kMaxQp) throw DomainError("QP must lie in [0, 51]");
  if (config.alpha < 0.0) throw DomainError("alpha must be nonnegative");
  if (config.kind == MetricKind::idse && sketch == nullptr) {
    throw DomainError("IDSE-RDO requires a sketched Jacobian");
  }
  if (sketch != nullptr) check_grid(*sketch, x);

  const BlockGrid grid(x);
  const int n_b = grid.block_count();
  const std::vector<Block> blocks = split_blocks(x);

  EncodeStats stats;
  std::optional<BlockMetricState> state;
  if (sketch != nullptr) state.emplace(*sketch, config.domain);

  if (config.kind == MetricKind::idse) {
    if (config.tau_tilde) {
      stats.tau_tilde = *config.tau_tilde;
    } else if (config.alpha > 0.0) {
      stats.tau_tilde = compute_tau_tilde(*sketch);
    }
    stats.tau = config.alpha * stats.tau_tilde;
    stats.lambda = compute_lambda(qp, config.lambda_c, *sketch, grid, stats.tau);
  } else {
    stats.lambda = sse_lambda(qp, config.lambda_c);
  }
  if (config.lambda) {
    if (!(*config.lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
    stats.lambda = *config.lambda;
  }

  std::vector<MacroblockChoice> chosen(static_cast<std::size_t>(n_b));
  std::vector<Block> recon(static_cast<std::size_t>(n_b));
  std::vector<int> decisions(static_cast<std::size_t>(n_b));
  stats.blocks.resize(static_cast<std::size_t>(n_b));

  parallel_for(n_b, options.threads, [&](int b) {
    const Block& source = blocks[b];
    std::vector<CodingCandidate> candidates = enumerate_candidates(source, qp);
    std::vector<double> d(candidates.size());
    std::vector<int> r(candidates.size());
    std::vector<Block> errors(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      errors[i] = block_error(candidates[i], source);
      d[i] = config.kind == MetricKind::idse ? state->distortion(b, candidates[i], errors[i], stats.tau)
                                             : sse_distortion(candidates[i], errors[i], config.domain);
      r[i] = candidates[i].bits;
    }
    const RdoChoice best = select_candidate(d, r, stats.lambda);
    const CodingCandidate& c = candidates[static_cast<std::size_t>(best.candidate)];
    BlockStats& s = stats.blocks[static_cast<std::size_t>(b)];
    s.block = b;
    s.partition = c.choice.partition;
    s.dqp = c.choice.dqp;
    s.d_sse = sse(errors[static_cast<std::size_t>(best.candidate)]);
    s.d_idse = state ? state->idse(b, c, errors[static_cast<std::size_t>(best.candidate)])
                     : std::numeric_limits<double>::quiet_NaN();
    s.bits = best.bits;
    s.cost = best.cost;
    decisions[static_cast<std::size_t>(b)] = best.candidate;
    recon[static_cast<std::size_t>(b)] = c.recon;
    chosen[static_cast<std::size_t>(b)] = c.choice;
  });

  BitstreamHeader header;
  header.width = x.width();
  header.height = x.height();
  header.original_width = x.original_width();
  header.original_height = x.original_height();
  header.base_qp = qp;
  header.metric = config.kind;

  EncodeResult result{mux(header, chosen), std::move(decisions),
                      assemble_blocks(recon, x.width(), x.height(), x.original_width(), x.original_height()),
                      std::move(stats)};
  EncodeStats& st = result.stats;
  st.total_bits = result.bitstream.size() * 8;
  for (const BlockStats& s : st.blocks) st.payload_bits += static_cast<std::size_t>(s.bits);
  st.bits_per_pixel = static_cast<double>(st.total_bits) /
                      (static_cast<double>(x.original_width()) * x.original_height());
  double err = 0.0;
  for (int y = 0; y < x.original_height(); ++y) {
    for (int xx = 0; xx < x.original_width(); ++xx) {
      const double e = result.reconstruction.at(xx, y) - x.at(xx, y);
      err += e * e;
    }
  }
  const double mse = err / (static_cast<double>(x.original_width()) * x.original_height());
  st.psnr = mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(255.0 * 255.0 / mse);
  if (options.feature_map != nullptr) {
    st.feature_distance = feature_distance(*options.feature_map, x, result.reconstruction);
  }
  return result;
}

void write_stats(std::ostream& out, const EncodeStats& stats) {
  out << "# block partition dqp d_sse d_idse bits cost\n";
  out << "# lambda=" << stats.lambda << " tau=" << stats.tau << " tau_tilde=" << stats.tau_tilde
      << " total_bits=" << stats.total_bits << " bpp=" << stats.bits_per_pixel << " psnr=" << stats.psnr;
  if (stats.feature_distance) out << " fd=" << *stats.feature_distance;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const BlockStats& s : stats.blocks) {
    out << s.block << ' ' << (s.partition == Partition::whole16 ? "whole16" : "split4") << ' ' << s.dqp << ' '
        << s.d_sse << ' ' << s.d_idse << ' ' << s.bits << ' ' << s.cost << '\n';
  }
  out.precision(old_precision);
}

ReferenceResult fd_rdo_reference(const ImagePlane& x, int qp, const FeatureMap& fe, double lambda) {
  if (x.width() > kMaxReferenceSide || x.height() > kMaxReferenceSide) {
    throw DomainError("exhaustive FD-RDO is limited to 64x64 images");
  }
  if (x.width() != fe.input_width() || x.height() != fe.input_height()) {
    throw GridMismatchError("image grid does not match the feature extractor");
  }
  const BlockGrid grid(x);
  const std::vector<Block> blocks = split_blocks(x);
  const Vector f_source = fe.features(x);
  std::vector<double> current(x.samples().begin(), x.samples().end());
  ReferenceResult out{std::vector<int>(static_cast<std::size_t>(grid.block_count())), x};

  for (int b = 0; b < grid.block_count(); ++b) {
    const std::vector<CodingCandidate> candidates = enumerate_candidates(blocks[b], qp);
    std::vector<double> d(candidates.size());
    std::vector<int> r(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      for (int k = 0; k < kBlockPixels; ++k) current[grid.pixel_index(b, k)] = candidates[i].recon[k];
      const ImagePlane trial(x.width(), x.height(), current, x.original_width(), x.original_height());
      d[i] = (fe.features(trial) - f_source).squaredNorm();
      r[i] = candidates[i].bits;
    }
    const RdoChoice best = select_candidate(d, r, lambda);
    out.decisions[static_cast<std::size_t>(b)] = best.candidate;
    for (int k = 0; k < kBlockPixels; ++k) {
      current[grid.pixel_index(b, k)] = candidates[static_cast<std::size_t>(best.candidate)].recon[k];
    }
  }
  out.reconstruction = ImagePlane(x.width(), x.height(), std::move(current), x.original_width(), x.original_height());
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Percentiles summarize(std::vector<double> values) {
  Percentiles p;
  p.count = values.size();
  if (values.empty()) return p;
  std::sort(values.begin(), values.end());
  p.median = percentile(values, 50.0);
  p.p15 = percentile(values, 15.0);
  p.p85 = percentile(values, 85.0);
  return p;
}

DiagonalDominance diagonal_dominance_stats(const FeatureMap& fe, std::span<const ImagePlane> images,
                                           std::span<const int> qps) {
  std::vector<double> diag;
  std::vector<double> off;
  std::vector<double> off_abs;
  std::vector<double> adjacent;
  MetricConfig sse_config;
  for (const ImagePlane& x : images) {
    const BlockGrid grid(x);
    const double jac_frobenius = std::sqrt(fe.column_norms_sq(x).sum());
    if (jac_frobenius == 0.0) continue;
    for (int qp : qps) {
      const EncodeResult enc = encode_with_rdo(x, qp, sse_config, nullptr);
      const PixelError e = pixel_error(enc.reconstruction, x);
      std::vector<Vector> b;
      std::vector<int> ids;
      for (int i = 0; i < grid.block_count(); ++i) {
        std::vector<double> ei(e.size(), 0.0);
        double norm_sq = 0.0;
        for (int k = 0; k < kBlockPixels; ++k) {
          const std::size_t p = grid.pixel_index(i, k);
          ei[p] = e[p];
          norm_sq += e[p] * e[p];
        }
        if (norm_sq == 0.0) continue;
        b.push_back(fe.jvp(x, ei) / (std::sqrt(norm_sq) * jac_frobenius));
        ids.push_back(i);
      }
      for (std::size_t i = 0; i < b.size(); ++i) {
        diag.push_back(b[i].squaredNorm());
        const auto [xi, yi] = grid.block_origin(ids[i]);
        for (std::size_t j = i + 1; j < b.size(); ++j) {
          const double v = b[j].dot(b[i]);
          off.push_back(v);
          off_abs.push_back(std::abs(v));
          const auto [xj, yj] = grid.block_origin(ids[j]);
          if (std::abs(xi - xj) <= kMacroblockSize && std::abs(yi - yj) <= kMacroblockSize) {
            adjacent.push_back(std::abs(v));
          }
        }
      }
    }
  }
  return DiagonalDominance{summarize(std::move(diag)), summarize(std::move(off)), summarize(std::move(off_abs)),
                           summarize(std::move(adjacent))};
}

}  // namespace idse
