#include "idse_cli/cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "idse/bitstream.hpp"
#include "idse/error.hpp"
#include "idse/eval.hpp"
#include "idse/experiments.hpp"
#include "idse/image.hpp"
#include "idse/metric.hpp"
#include "idse/parallel.hpp"
#include "idse/rdo.hpp"
#include "idse/sketch.hpp"
#include "idse/toyfe.hpp"

namespace idse::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SketchArgs {
  std::string input;
  std::string fe = "identity";
  int ns = kDefaultSketchRows;
  std::uint64_t seed = 0;
  std::string out;
};

struct EncodeArgs {
  std::string input;
  int qp = 30;
  std::string metric = "sse";
  std::string sketch;
  double alpha = 1.0;
  double lambda_c = kDefaultLambdaC;
  std::string domain = "transform";
  std::string out;
  std::string stats;
  int threads = 0;
};

struct DecodeArgs {
  std::string input;
  std::string out;
};

struct AnalyzeArgs {
  std::string sketch;
  std::string out_map;
};

struct ExperimentArgs {
  std::string name;
  std::uint64_t seed = 1;
  std::string out_dir = "results";
  int threads = 0;
};

struct BdrateArgs {
  std::string ref;
  std::string test;
};

int cmd_sketch(const SketchArgs& a, std::ostream& out) {
  const ImagePlane x = load_pgm(a.input);
  const ToyFeatureExtractor fe = ToyFeatureExtractor::make(parse_toy_kind(a.fe), x.width(), x.height());
  const SketchedJacobian j = sketch_jacobian(fe, x, a.ns, a.seed, a.fe);
  write_sketch(a.out, j);
  out << "sketch " << j.rows() << "x" << j.cols() << " fe=" << a.fe << " seed=" << a.seed << " -> " << a.out << '\n';
  return kOk;
}

int cmd_encode(const EncodeArgs& a, std::ostream& out) {
  if (a.metric == "idse" && a.sketch.empty()) throw UsageError("--metric idse requires --sketch");
  const ImagePlane x = load_pgm(a.input);
  std::optional<SketchedJacobian> sketch;
  if (!a.sketch.empty()) sketch = read_sketch(a.sketch);

  MetricConfig config;
  config.kind = a.metric == "idse" ? MetricKind::idse : MetricKind::sse;
  config.alpha = a.alpha;
  config.lambda_c = a.lambda_c;
  config.domain = a.domain == "pixel" ? MetricDomain::pixel : MetricDomain::transform;
  EncodeOptions options;
  options.threads = resolve_threads(a.threads);

  const EncodeResult r = encode_with_rdo(x, a.qp, config, sketch ? &*sketch : nullptr, options);
  write_file(a.out, r.bitstream);
  if (!a.stats.empty()) {
    std::ofstream s(a.stats);
    if (!s) throw IoError("cannot write " + a.stats);
    write_stats(s, r.stats);
  }
  out << "encoded " << a.input << " qp=" << a.qp << " metric=" << a.metric << " bytes=" << r.bitstream.size()
      << " bpp=" << r.stats.bits_per_pixel << " psnr=" << r.stats.psnr << '\n';
  return kOk;
}

int cmd_decode(const DecodeArgs& a, std::ostream& out) {
  const DecodedStream d = read_bitstream(a.input);
  save_pgm(a.out, d.reconstruction);
  out << "decoded " << d.header.original_width << "x" << d.header.original_height << " qp=" << d.header.base_qp
      << " -> " << a.out << '\n';
  return kOk;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const SketchedJacobian j = read_sketch(a.sketch);
  const std::vector<double> map = importance_map(j);
  double total = 0.0;
  for (double v : map) total += v;
  out << "sketch " << j.rows() << "x" << j.cols() << " grid " << j.width() << "x" << j.height()
      << " tag=" << j.source_tag() << " seed=" << j.seed() << '\n';
  out << "frobenius_sq " << total << " normalized " << normalized_frobenius(j, j.grid()) << '\n';
  if (total > 0.0) {
    const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
    out << "importance min " << *lo << " max " << *hi << '\n';
  }
  if (!a.out_map.empty()) {
    export_importance_map(a.out_map, map, j.width(), j.height());
    out << "map -> " << a.out_map << '\n';
  }
  return kOk;
}

int cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  const auto names = experiment_names();
  if (std::find(names.begin(), names.end(), a.name) == names.end()) throw UsageError("unknown experiment '" + a.name + "'");
  for (const std::string& line : run_experiment(a.name, a.seed, a.out_dir, resolve_threads(a.threads))) {
    out << a.name << ": " << line << '\n';
  }
  return kOk;
}

int cmd_bdrate(const BdrateArgs& a, std::ostream& out) {
  const double bd = bd_rate(read_curve(a.ref), read_curve(a.test));
  out << "bd_rate " << bd << " %\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block image codec with IDSE rate-distortion optimization", "idse"};
  app.require_subcommand(1);

  SketchArgs sk;
  auto* sketch = app.add_subcommand("sketch", "Sketch the Jacobian of a toy extractor into an SKJ1 file");
  sketch->add_option("--input", sk.input, "8-bit PGM image")->required()->check(CLI::ExistingFile);
  sketch->add_option("--fe", sk.fe, "identity | blur_down | block_blur | conv_relu_conv")
      ->check(CLI::IsMember({"identity", "blur_down", "block_blur", "conv_relu_conv"}))
      ->capture_default_str();
  sketch->add_option("--ns", sk.ns, "sketch rows")->check(CLI::Range(1, kMaxSketchRows))->capture_default_str();
  sketch->add_option("--seed", sk.seed, "sketch seed")->capture_default_str();
  sketch->add_option("--out", sk.out, "output SKJ1 file")->required();

  EncodeArgs en;
  auto* encode = app.add_subcommand("encode", "Encode a PGM image to an IDS1 bitstream");
  encode->add_option("--input", en.input, "8-bit PGM image")->required()->check(CLI::ExistingFile);
  encode->add_option("--qp", en.qp, "base QP")->check(CLI::Range(0, 51))->capture_default_str();
  encode->add_option("--metric", en.metric, "sse | idse")->check(CLI::IsMember({"sse", "idse"}))->capture_default_str();
  encode->add_option("--sketch", en.sketch, "SKJ1 sketch (required for idse)")->check(CLI::ExistingFile);
  encode->add_option("--alpha", en.alpha, "tau = alpha * tau_tilde")->check(CLI::NonNegativeNumber)->capture_default_str();
  encode->add_option("--lambda-c", en.lambda_c, "Lagrangian constant c")->check(CLI::PositiveNumber)->capture_default_str();
  encode->add_option("--domain", en.domain, "pixel | transform")->check(CLI::IsMember({"pixel", "transform"}))->capture_default_str();
  encode->add_option("--out", en.out, "output bitstream")->required();
  encode->add_option("--stats", en.stats, "per-block statistics file");
  encode->add_option("--threads", en.threads, "worker cap (0: IDSE_THREADS or all cores)")->check(CLI::NonNegativeNumber);

  DecodeArgs de;
  auto* decode = app.add_subcommand("decode", "Decode an IDS1 bitstream to PGM");
  decode->add_option("--input", de.input, "IDS1 bitstream")->required()->check(CLI::ExistingFile);
  decode->add_option("--out", de.out, "output PGM")->required();

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Summarize a sketch and export its importance map");
  analyze->add_option("--sketch", an.sketch, "SKJ1 sketch")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out-map", an.out_map, "16-bit PGM importance map");

  ExperimentArgs ex;
  auto* experiment = app.add_subcommand("experiment", "Run a named desk-scale experiment");
  experiment->add_option("--name", ex.name, "taylor_convergence | diag_dominance | rd_sweep | oracle_rdo | flop_model")
      ->required();
  experiment->add_option("--seed", ex.seed, "experiment seed")->capture_default_str();
  experiment->add_option("--out-dir", ex.out_dir, "output directory")->capture_default_str();
  experiment->add_option("--threads", ex.threads, "worker cap (0: IDSE_THREADS or all cores)")->check(CLI::NonNegativeNumber);

  BdrateArgs bd;
  auto* bdrate = app.add_subcommand("bdrate", "BD-rate of two rate,quality curve files");
  bdrate->add_option("--ref", bd.ref, "reference curve")->required()->check(CLI::ExistingFile);
  bdrate->add_option("--test", bd.test, "test curve")->required()->check(CLI::ExistingFile);

  // CLI11 consumes arguments from the back of the vector.
  std::vector<std::string> pending(args.begin(), args.end());
  std::reverse(pending.begin(), pending.end());
  try {
    app.parse(pending);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sketch) return cmd_sketch(sk, out);
    if (*encode) return cmd_encode(en, out);
    if (*decode) return cmd_decode(de, out);
    if (*analyze) return cmd_analyze(an, out);
    if (*experiment) return cmd_experiment(ex, out);
    if (*bdrate) return cmd_bdrate(bd, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kFormat;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kFormat;
  }
  return kUsage;
}

}  // namespace idse::cli
