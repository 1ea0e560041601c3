#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "idse/eval.hpp"
#include "idse/rdo.hpp"
#include "idse/toyfe.hpp"

namespace idse {

/// Numeric result table. Written as CSV and as a whitespace-separated gnuplot
/// data file; both start with '#' lines carrying the name, seed and notes.
struct Table {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> notes;

  void write_csv(const std::filesystem::path& path) const;
  void write_dat(const std::filesystem::path& path) const;
};

struct TaylorRow {
  int qp = 0;
  double mean_fd = 0.0;
  double mean_idse = 0.0;           // ||J e||^2 with the full Jacobian
  double mean_sketched_idse = 0.0;  // ||S J e||^2 with an n_s-row sketch
  double mean_gap = 0.0;            // mean |FD - IDSE|
  double mean_relative_gap = 0.0;   // mean |FD - IDSE| / FD over images with FD > 0
};

/// FD against the frame-level linearization on SSE-RDO reconstructions, one
/// row per QP in ladder order.
std::vector<TaylorRow> taylor_convergence(const FeatureMap& fe, const std::vector<ImagePlane>& images,
                                          const std::vector<int>& qps, int sketch_rows, std::uint64_t seed,
                                          int threads = 1);
Table taylor_table(const std::vector<TaylorRow>& rows, std::uint64_t seed);

struct OracleAgreement {
  std::size_t exact_matches = 0;
  std::size_t sketched_matches = 0;
  std::size_t blocks = 0;

  double exact_rate() const { return blocks ? static_cast<double>(exact_matches) / blocks : 0.0; }
  double sketched_rate() const { return blocks ? static_cast<double>(sketched_matches) / blocks : 0.0; }
};

/// IDSE-RDO (tau = 0) against fd_rdo_reference. The reference uses the lambda
/// of the full-Jacobian encode; the sketched encode derives its own from the
/// sketch as the codec would.
OracleAgreement oracle_rdo(const FeatureMap& fe, const std::vector<ImagePlane>& images, const std::vector<int>& qps,
                           int sketch_rows, std::uint64_t seed, int threads = 1);

enum class RdQuality { psnr, fd, idse, weighted_mse };
std::string_view to_string(RdQuality q);

struct RdSweepResult {
  /// Curves keyed by quality, then by "sse" / "idse".
  std::map<RdQuality, std::map<std::string, RdCurve>> curves;
  /// BD-rate of IDSE-RDO against SSE-RDO per quality.
  std::map<RdQuality, double> bd_rates;
};

struct RdSweepConfig {
  std::vector<int> qps{27, 30, 33, 36, 39};
  int sketch_rows = kDefaultSketchRows;
  double alpha = 1.0;
  double lambda_c = kDefaultLambdaC;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Encodes every image with SSE-RDO and IDSE-RDO along the QP ladder. Rates
/// and distortions are averaged over images; distortions become qualities as
/// -10 log10(d). The weighted MSE uses the exact squared Jacobian column norms.
RdSweepResult rd_sweep(const FeatureMap& fe, const std::vector<ImagePlane>& images, const RdSweepConfig& config);

/// Named experiments for the CLI: taylor_convergence, diag_dominance, rd_sweep,
/// oracle_rdo, flop_model. Writes <name>.csv and <name>.dat (rd_sweep also
/// writes one curve file per quality and metric) and returns summary lines.
std::vector<std::string> experiment_names();
std::vector<std::string> run_experiment(const std::string& name, std::uint64_t seed,
                                        const std::filesystem::path& out_dir, int threads = 1);

}  // namespace idse
