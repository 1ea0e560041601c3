#include "idse/experiments.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "idse/error.hpp"
#include "idse/parallel.hpp"

namespace idse {

namespace {

void write_header(std::ostream& out, const Table& t) {
  out << "# " << t.name << "\n# seed=" << t.seed << '\n';
  for (const std::string& n : t.notes) out << "# " << n << '\n';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  return out;
}

std::uint64_t image_seed(std::uint64_t seed, std::size_t index) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (index + 1));
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return s;
}

}  // namespace

void Table::write_csv(const std::filesystem::path& path) const {
  std::ofstream out = open_out(path);
  write_header(out, *this);
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
}

void Table::write_dat(const std::filesystem::path& path) const {
  std::ofstream out = open_out(path);
  write_header(out, *this);
  out << '#';
  for (const std::string& c : columns) out << ' ' << c;
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << row[c];
    out << '\n';
  }
}

std::vector<TaylorRow> taylor_convergence(const FeatureMap& fe, const std::vector<ImagePlane>& images,
                                          const std::vector<int>& qps, int sketch_rows, std::uint64_t seed,
                                          int threads) {
  struct Sample {
    double fd, idse, sketched;
  };
  const std::size_t nq = qps.size();
  std::vector<std::vector<Sample>> samples(images.size(), std::vector<Sample>(nq));
  parallel_for(static_cast<int>(images.size()), threads, [&](int i) {
    const ImagePlane& x = images[static_cast<std::size_t>(i)];
    const SketchedJacobian sketch = sketch_jacobian(fe, x, sketch_rows, image_seed(seed, i), "taylor");
    const Vector f = fe.features(x);
    for (std::size_t q = 0; q < nq; ++q) {
      const EncodeResult enc = encode_with_rdo(x, qps[q], MetricConfig{}, nullptr);
      const PixelError e = pixel_error(enc.reconstruction, x);
      const Eigen::Map<const Vector> ev(e.data(), static_cast<Eigen::Index>(e.size()));
      Sample& s = samples[static_cast<std::size_t>(i)][q];
      s.fd = (fe.features(enc.reconstruction) - f).squaredNorm();
      s.idse = fe.jvp(x, e).squaredNorm();
      s.sketched = (sketch.entries() * ev).squaredNorm();
    }
  });
  std::vector<TaylorRow> rows;
  for (std::size_t q = 0; q < nq; ++q) {
    TaylorRow r;
    r.qp = qps[q];
    std::size_t nonzero = 0;
    for (const auto& per_image : samples) {
      const Sample& s = per_image[q];
      r.mean_fd += s.fd;
      r.mean_idse += s.idse;
      r.mean_sketched_idse += s.sketched;
      r.mean_gap += std::abs(s.fd - s.idse);
      if (s.fd > 0.0) {
        r.mean_relative_gap += std::abs(s.fd - s.idse) / s.fd;
        ++nonzero;
      }
    }
    const double n = static_cast<double>(images.size());
    r.mean_fd /= n;
    r.mean_idse /= n;
    r.mean_sketched_idse /= n;
    r.mean_gap /= n;
    if (nonzero) r.mean_relative_gap /= static_cast<double>(nonzero);
    rows.push_back(r);
  }
  return rows;
}

Table taylor_table(const std::vector<TaylorRow>& rows, std::uint64_t seed) {
  Table t{"taylor_convergence", seed, {"qp", "mean_fd", "mean_idse", "mean_sketched_idse", "mean_gap", "relative_gap"},
          {}, {"idse is the full-Jacobian linearization; relative_gap = mean |fd - idse| / fd"}};
  for (const TaylorRow& r : rows) {
    t.rows.push_back({static_cast<double>(r.qp), r.mean_fd, r.mean_idse, r.mean_sketched_idse, r.mean_gap,
                      r.mean_relative_gap});
  }
  return t;
}

OracleAgreement oracle_rdo(const FeatureMap& fe, const std::vector<ImagePlane>& images, const std::vector<int>& qps,
                           int sketch_rows, std::uint64_t seed, int threads) {
  std::vector<OracleAgreement> per_image(images.size());
  parallel_for(static_cast<int>(images.size()), threads, [&](int i) {
    const ImagePlane& x = images[static_cast<std::size_t>(i)];
    const SketchedJacobian full = full_jacobian(fe, x, "oracle");
    const SketchedJacobian sketch = sketch_jacobian(fe, x, sketch_rows, image_seed(seed, i), "oracle");
    MetricConfig config;
    config.kind = MetricKind::idse;
    config.alpha = 0.0;
    OracleAgreement& a = per_image[static_cast<std::size_t>(i)];
    for (int qp : qps) {
      const EncodeResult exact = encode_with_rdo(x, qp, config, &full);
      const EncodeResult sketched = encode_with_rdo(x, qp, config, &sketch);
      const ReferenceResult ref = fd_rdo_reference(x, qp, fe, exact.stats.lambda);
      for (std::size_t b = 0; b < ref.decisions.size(); ++b) {
        a.exact_matches += exact.decisions[b] == ref.decisions[b];
        a.sketched_matches += sketched.decisions[b] == ref.decisions[b];
        ++a.blocks;
      }
    }
  });
  OracleAgreement total;
  for (const OracleAgreement& a : per_image) {
    total.exact_matches += a.exact_matches;
    total.sketched_matches += a.sketched_matches;
    total.blocks += a.blocks;
  }
  return total;
}

std::string_view to_string(RdQuality q) {
  switch (q) {
    case RdQuality::psnr: return "psnr";
    case RdQuality::fd: return "fd";
    case RdQuality::idse: return "idse";
    case RdQuality::weighted_mse: return "weighted_mse";
  }
  return "unknown";
}

RdSweepResult rd_sweep(const FeatureMap& fe, const std::vector<ImagePlane>& images, const RdSweepConfig& config) {
  constexpr std::array<RdQuality, 4> kQualities{RdQuality::psnr, RdQuality::fd, RdQuality::idse,
                                                RdQuality::weighted_mse};
  const std::array<std::string, 2> metrics{"sse", "idse"};
  const std::size_t nq = config.qps.size();
  // [image][metric][qp] -> rate, psnr, fd, idse, wmse
  using Sample = std::array<double, 5>;
  std::vector<std::array<std::vector<Sample>, 2>> samples(images.size());
  parallel_for(static_cast<int>(images.size()), config.threads, [&](int i) {
    const ImagePlane& x = images[static_cast<std::size_t>(i)];
    const SketchedJacobian sketch = sketch_jacobian(fe, x, config.sketch_rows, image_seed(config.seed, i), "rd_sweep");
    const Vector weights = fe.column_norms_sq(x);
    const double weight_sum = weights.sum();
    const Vector f = fe.features(x);
    for (int m = 0; m < 2; ++m) {
      MetricConfig mc;
      mc.kind = m == 0 ? MetricKind::sse : MetricKind::idse;
      mc.alpha = config.alpha;
      mc.lambda_c = config.lambda_c;
      auto& out = samples[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
      out.resize(nq);
      for (std::size_t q = 0; q < nq; ++q) {
        const EncodeResult enc = encode_with_rdo(x, config.qps[q], mc, m == 0 ? nullptr : &sketch);
        const PixelError e = pixel_error(enc.reconstruction, x);
        const Eigen::Map<const Vector> ev(e.data(), static_cast<Eigen::Index>(e.size()));
        double wmse = 0.0;
        for (std::size_t p = 0; p < e.size(); ++p) wmse += weights[static_cast<Eigen::Index>(p)] * e[p] * e[p];
        out[q] = {enc.stats.bits_per_pixel, enc.stats.psnr, (fe.features(enc.reconstruction) - f).squaredNorm(),
                  (sketch.entries() * ev).squaredNorm(), weight_sum > 0.0 ? wmse / weight_sum : squared_norm(e)};
      }
    }
  });
  RdSweepResult result;
  for (std::size_t qi = 0; qi < kQualities.size(); ++qi) {
    for (std::size_t m = 0; m < 2; ++m) {
      std::vector<RdPoint> points;
      for (std::size_t q = 0; q < nq; ++q) {
        double rate = 0.0, value = 0.0;
        for (const auto& per_image : samples) {
          rate += per_image[m][q][0];
          value += per_image[m][q][qi + 1];
        }
        rate /= static_cast<double>(images.size());
        value /= static_cast<double>(images.size());
        points.push_back({rate, kQualities[qi] == RdQuality::psnr ? value : distortion_db(value)});
      }
      result.curves[kQualities[qi]].emplace(metrics[m], RdCurve(metrics[m], std::move(points)));
    }
    const auto& c = result.curves.at(kQualities[qi]);
    result.bd_rates[kQualities[qi]] = bd_rate(c.at("sse"), c.at("idse"));
  }
  return result;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"taylor_convergence", "diag_dominance", "rd_sweep", "oracle_rdo", "flop_model"};
}

std::vector<std::string> run_experiment(const std::string& name, std::uint64_t seed,
                                        const std::filesystem::path& out_dir, int threads) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> lines;
  auto emit = [&](const Table& t) {
    t.write_csv(out_dir / (name + ".csv"));
    t.write_dat(out_dir / (name + ".dat"));
  };
  if (name == "taylor_convergence") {
    const auto images = synthetic_corpus(10, 64, 64, seed);
    const auto fe = ToyFeatureExtractor::conv_relu_conv(64, 64);
    const auto rows = taylor_convergence(fe, images, {47, 43, 39, 35, 31}, kDefaultSketchRows, seed, threads);
    emit(taylor_table(rows, seed));
    for (const TaylorRow& r : rows) lines.push_back("qp " + std::to_string(r.qp) + " relative_gap " + fmt(r.mean_relative_gap));
  } else if (name == "diag_dominance") {
    const auto images = synthetic_corpus(7, 64, 64, seed);
    const auto fe = ToyFeatureExtractor::blur_down(64, 64);
    const std::vector<int> qps{27, 31, 35, 39, 43};
    const DiagonalDominance d = diagonal_dominance_stats(fe, images, qps);
    Table t{name, seed, {"term", "count", "median", "p15", "p85"}, {}, {"terms: 0 diagonal, 1 off-diagonal, 2 |off-diagonal|, 3 |adjacent off-diagonal|", "qps 27 31 35 39 43, blur_down"}};
    const std::array<const Percentiles*, 4> terms{&d.diagonal, &d.off_diagonal, &d.off_diagonal_abs, &d.adjacent_abs};
    for (std::size_t i = 0; i < terms.size(); ++i) {
      t.rows.push_back({static_cast<double>(i), static_cast<double>(terms[i]->count), terms[i]->median, terms[i]->p15,
                        terms[i]->p85});
    }
    emit(t);
    lines.push_back("diagonal median " + fmt(d.diagonal.median) + " |off-diagonal| median " + fmt(d.off_diagonal_abs.median) +
                    " |adjacent| median " + fmt(d.adjacent_abs.median));
  } else if (name == "rd_sweep") {
    const auto images = synthetic_corpus(10, 64, 64, seed);
    const auto fe = ToyFeatureExtractor::conv_relu_conv(64, 64);
    RdSweepConfig config;
    config.seed = seed;
    config.threads = threads;
    const RdSweepResult r = rd_sweep(fe, images, config);
    Table t{name, seed, {"quality", "bd_rate_percent"}, {}, {"quality: 0 psnr, 1 fd, 2 idse, 3 weighted_mse; idse-rdo vs sse-rdo"}};
    for (const auto& [q, bd] : r.bd_rates) {
      t.rows.push_back({static_cast<double>(q), bd});
      lines.push_back(std::string(to_string(q)) + " bd_rate " + fmt(bd) + "%");
      for (const auto& [label, curve] : r.curves.at(q)) {
        write_curve(out_dir / (name + "_" + std::string(to_string(q)) + "_" + label + ".csv"), curve);
      }
    }
    emit(t);
  } else if (name == "oracle_rdo") {
    const auto images = synthetic_corpus(10, 32, 32, seed);
    const auto fe = ToyFeatureExtractor::block_blur(32, 32);
    const std::vector<int> qps{27, 33, 39};
    const OracleAgreement a = oracle_rdo(fe, images, qps, kDefaultSketchRows, seed, threads);
    emit(Table{name, seed, {"blocks", "exact_agreement", "sketched_agreement"},
               {{static_cast<double>(a.blocks), a.exact_rate(), a.sketched_rate()}}, {"block_blur, qps 27 33 39"}});
    lines.push_back("exact agreement " + fmt(a.exact_rate()) + " sketched agreement " + fmt(a.sketched_rate()));
  } else if (name == "flop_model") {
    const double r = flop_model(768, 768, 224, 224, 18, 4);
    emit(Table{name, seed, {"h", "w", "h_resized", "w_resized", "candidates", "sketch_rows", "ratio"},
               {{768, 768, 224, 224, 18, 4, r}}, {}});
    lines.push_back("flop ratio " + fmt(r));
  } else {
    throw DomainError("unknown experiment '" + name + "'");
  }
  return lines;
}

}  // namespace idse
