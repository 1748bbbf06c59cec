#include "patchsr/cli.hpp"

#include "patchsr/dictionary.hpp"
#include "patchsr/errors.hpp"
#include "patchsr/image_io.hpp"
#include "patchsr/metrics.hpp"
#include "patchsr/operators.hpp"
#include "patchsr/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

namespace patchsr::cli {

namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << v;
  return os.str();
}

std::string shape(const Image& img) {
  return std::to_string(img.rows()) + "x" + std::to_string(img.cols());
}

std::vector<double> parse_lambda_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0' || !(v > 0.0) || !std::isfinite(v)) {
      throw ParameterError("--lambda: '" + item + "' is not a positive number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ParameterError("--lambda: empty list");
  return out;
}

struct PsfArgs {
  int size = 3;
  double sigma = 0.85;
  std::string file;

  void attach(CLI::App* cmd) {
    cmd->add_option("--psf-size", size, "Gaussian PSF side length (odd)")->capture_default_str();
    cmd->add_option("--psf-sigma", sigma, "Gaussian PSF standard deviation")->capture_default_str();
    cmd->add_option("--psf-file", file, "PSF text file; overrides --psf-size/--psf-sigma");
  }

  Psf make() const { return file.empty() ? gaussian_psf(size, sigma) : load_psf(file); }

  std::string describe() const {
    return file.empty() ? "psf_size=" + std::to_string(size) + " psf_sigma=" + fmt(sigma)
                        : "psf_file=" + file;
  }
};

struct DegradeArgs {
  std::string input, output;
  PsfArgs psf;
  int q = 4;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

int cmd_degrade(const DegradeArgs& a, std::ostream& out) {
  const Image x = read_image(a.input);
  const Image y = degrade(x, a.psf.make(), a.q, a.noise_sigma, a.seed);
  write_image(y, a.output);
  out << "degrade " << a.psf.describe() << " q=" << a.q << " noise_sigma=" << fmt(a.noise_sigma)
      << " seed=" << a.seed << " in=" << shape(x) << " out=" << shape(y) << '\n';
  return kExitOk;
}

struct SrArgs {
  std::string input, dict, output, report, reference;
  std::string penalty = "cauchy";
  std::string lambda = "0.001";
  double tau = 1.01;
  std::optional<double> mu;
  int q = 4;
  int stride = 1;
  double tol = 1e-5;
  int max_iters = 300;
  PsfArgs psf;
  unsigned threads = 0;
  double peak = 1.0;
};

int cmd_sr(const SrArgs& a, std::ostream& out, std::ostream& err) {
  const Image y = read_image(a.input);
  Dictionary dict = load_dictionary(a.dict, &err);
  const Psf psf = a.psf.make();
  const std::vector<double> lambdas = parse_lambda_list(a.lambda);
  std::optional<Image> reference;
  if (!a.reference.empty()) reference = read_image(a.reference);
  if (lambdas.size() > 1 && !reference) {
    throw ParameterError("--lambda with several values needs --reference to select the best");
  }

  SrConfig cfg(std::move(dict), psf);
  cfg.q = a.q;
  cfg.lr_stride = a.stride;
  cfg.penalty = parse_penalty_kind(a.penalty);
  cfg.solver.tau = a.tau;
  cfg.solver.mu = a.mu;
  cfg.solver.tol = a.tol;
  cfg.solver.max_iters = a.max_iters;
  cfg.validate();

  struct Run {
    double lambda;
    SrResult result;
    double psnr = 0.0;
    double ssim = 0.0;
  };
  std::vector<Run> runs;
  std::size_t best = 0;
  for (double lam : lambdas) {
    cfg.solver.lambda = lam;
    Run r{lam, super_resolve(y, cfg, SrOptions{a.threads, false})};
    if (reference) {
      r.psnr = psnr(r.result.image, *reference, a.peak);
      r.ssim = ssim(r.result.image, *reference, a.peak);
      out << "lambda=" << fmt(lam) << " psnr=" << fixed6(r.psnr) << " ssim=" << fixed6(r.ssim)
          << '\n';
    }
    runs.push_back(std::move(r));
    if (reference && runs.back().psnr > runs[best].psnr) best = runs.size() - 1;
  }

  const Run& chosen = runs[best];
  const SrReport& rep = chosen.result.report;
  write_image(chosen.result.image, a.output);

  const auto& its = rep.iterations;
  const double mean_its =
      its.empty() ? 0.0
                  : std::accumulate(its.begin(), its.end(), 0.0) / static_cast<double>(its.size());
  const int max_its = its.empty() ? 0 : *std::max_element(its.begin(), its.end());

  std::ostringstream r;
  r << "command=sr\n"
    << "input=" << a.input << "\n"
    << "dictionary=" << a.dict << "\n"
    << "output=" << a.output << "\n"
    << "penalty=" << to_string(cfg.penalty) << "\n"
    << "lambda=" << fmt(chosen.lambda) << "\n"
    << "tau=" << fmt(cfg.solver.tau) << "\n"
    << "tol=" << fmt(cfg.solver.tol) << "\n"
    << "max_iters=" << cfg.solver.max_iters << "\n"
    << "q=" << cfg.q << "\n"
    << "lr_stride=" << cfg.lr_stride << "\n"
    << "lr_patch_side=" << rep.lr_patch_side << "\n"
    << "dict_np=" << cfg.dict.patch_dim() << "\n"
    << "dict_nd=" << cfg.dict.atom_count() << "\n";
  if (a.psf.file.empty()) {
    r << "psf_size=" << a.psf.size << "\n" << "psf_sigma=" << fmt(a.psf.sigma) << "\n";
  } else {
    r << "psf_file=" << a.psf.file << "\n";
  }
  r << "L=" << fmt(rep.plan.lipschitz) << "\n"
    << "mu=" << fmt(rep.plan.mu) << "\n"
    << "gamma_bar=" << fmt(rep.plan.gamma_bar) << "\n"
    << "gamma=" << fmt(rep.plan.gamma) << "\n"
    << "input_shape=" << shape(y) << "\n"
    << "output_shape=" << shape(chosen.result.image) << "\n"
    << "patches=" << rep.patch_count << "\n"
    << "converged_patches=" << rep.converged_count << "\n"
    << "failed_patches=" << rep.failures.size() << "\n"
    << "mean_iterations=" << fmt(mean_its) << "\n"
    << "max_iterations=" << max_its << "\n"
    << "mean_sparsity=" << fmt(rep.mean_sparsity) << "\n"
    << "threads=" << rep.threads << "\n";
  for (const auto& f : rep.failures) {
    r << "failure=" << f.index << " at=" << f.anchor.row << "," << f.anchor.col
      << " iteration=" << f.iteration << "\n";
  }
  if (reference) {
    const SsimParams sp;
    r << "ssim_window=" << sp.window << "\n"
      << "ssim_sigma=" << fmt(sp.sigma) << "\n"
      << "peak=" << fmt(a.peak) << "\n"
      << "psnr=" << fixed6(chosen.psnr) << "\n"
      << "ssim=" << fixed6(chosen.ssim) << "\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      r << "sweep." << i << ".lambda=" << fmt(runs[i].lambda) << "\n"
        << "sweep." << i << ".psnr=" << fixed6(runs[i].psnr) << "\n"
        << "sweep." << i << ".ssim=" << fixed6(runs[i].ssim) << "\n";
    }
  }
  double wall = 0.0;
  for (const auto& run : runs) wall += run.result.report.wall_seconds;
  r << "wall_time_s=" << fmt(wall) << "\n";

  if (!a.report.empty()) {
    std::ofstream f(a.report);
    if (!f) throw IoError("cannot write report '" + a.report + "'");
    f << r.str();
  }
  out << "sr penalty=" << to_string(cfg.penalty) << " lambda=" << fmt(chosen.lambda)
      << " tau=" << fmt(cfg.solver.tau) << " q=" << cfg.q << " L=" << fmt(rep.plan.lipschitz)
      << " gamma=" << fmt(rep.plan.gamma) << " patches=" << rep.patch_count
      << " converged=" << rep.converged_count << " failed=" << rep.failures.size()
      << " out=" << shape(chosen.result.image) << '\n';
  return rep.failures.empty() ? kExitOk : kExitNumeric;
}

struct EvalArgs {
  std::string recon, reference;
  double peak = 1.0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Image x = read_image(a.recon);
  const Image ref = read_image(a.reference);
  const double p = psnr(x, ref, a.peak);
  const double s = ssim(x, ref, a.peak);
  out << "psnr=" << fixed6(p) << " ssim=" << fixed6(s) << '\n';
  return kExitOk;
}

struct SegmentArgs {
  std::string input, output;
  int k = 3;
  std::uint64_t seed = 0;
  int max_iters = 100;
};

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
  const Image x = read_image(a.input);
  const KMeansResult km = kmeans_segment(x, a.k, a.seed, a.max_iters);
  const double scale = a.k > 1 ? 1.0 / static_cast<double>(a.k - 1) : 0.0;
  write_image(Image(Matrix(km.labels.cast<double>() * scale)), a.output);
  out << "segment k=" << a.k << " seed=" << a.seed << " centroids=";
  for (std::size_t i = 0; i < km.centroids.size(); ++i) out << (i ? "," : "") << fmt(km.centroids[i]);
  out << " within_ss=" << fmt(km.within_ss) << " iterations=" << km.iterations << '\n';
  return kExitOk;
}

struct GendictArgs {
  std::string output;
  long long np = 64;
  long long nd = 256;
  bool text = false;
};

int cmd_gendict(const GendictArgs& a, std::ostream& out) {
  const Eigen::Index side = exact_sqrt(a.np);
  if (a.np <= 0 || side <= 0) {
    throw ParameterError("--np " + std::to_string(a.np) + " is not a perfect square");
  }
  if (a.nd <= 0 || exact_sqrt(a.nd) < side) {
    const auto root = static_cast<long long>(std::floor(std::sqrt(static_cast<double>(std::max(0LL, a.nd)))));
    long long lo = std::max<long long>(root, side);
    long long hi = std::max<long long>(root + 1, side);
    const long long nearest = std::llabs(lo * lo - a.nd) <= std::llabs(hi * hi - a.nd) ? lo * lo : hi * hi;
    throw ParameterError("--nd " + std::to_string(a.nd) + " must be a perfect square m^2 with m >= " +
                         std::to_string(side) + "; nearest valid value is " +
                         std::to_string(nearest));
  }
  const Dictionary d = overcomplete_dct(a.np, a.nd);
  save_dictionary(d, a.output, a.text ? DictionaryEncoding::Text : DictionaryEncoding::Binary);
  out << "gendict np=" << a.np << " nd=" << a.nd << " format=" << (a.text ? "DICTT" : "DICT1")
      << " out=" << a.output << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patch-based sparse super-resolution with non-convex penalties", "patchsr"};
  app.require_subcommand(1);

  DegradeArgs dg;
  auto* degrade_cmd = app.add_subcommand("degrade", "Blur, decimate and add noise to an image");
  degrade_cmd->add_option("input", dg.input, "High-resolution image (PGM or IMGF)")->required();
  degrade_cmd->add_option("output", dg.output, "Low-resolution output")->required();
  dg.psf.attach(degrade_cmd);
  degrade_cmd->add_option("--q", dg.q, "Decimation factor")->capture_default_str();
  degrade_cmd->add_option("--noise-sigma", dg.noise_sigma, "Gaussian noise std")->capture_default_str();
  degrade_cmd->add_option("--seed", dg.seed, "Noise generator seed")->capture_default_str();

  SrArgs sr;
  auto* sr_cmd = app.add_subcommand("sr", "Super-resolve a low-resolution image");
  sr_cmd->add_option("input", sr.input, "Low-resolution image")->required();
  sr_cmd->add_option("dict", sr.dict, "Dictionary file (DICT1 or DICTT)")->required();
  sr_cmd->add_option("output", sr.output, "Reconstruction output")->required();
  sr_cmd->add_option("--penalty", sr.penalty, "cauchy | mcp | l1")
      ->check(CLI::IsMember({"cauchy", "mcp", "l1"}))
      ->capture_default_str();
  sr_cmd->add_option("--lambda", sr.lambda, "Regularization weight, or comma-separated sweep")
      ->capture_default_str();
  sr_cmd->add_option("--tau", sr.tau, "Convexity margin, gamma = tau * gamma_bar")->capture_default_str();
  sr_cmd->add_option("--mu", sr.mu, "Step size (default 1/L)");
  sr_cmd->add_option("--q", sr.q, "Magnification factor")->capture_default_str();
  sr_cmd->add_option("--stride", sr.stride, "Patch stride on the low-resolution grid")->capture_default_str();
  sr_cmd->add_option("--tol", sr.tol, "Relative iterate-change tolerance")->capture_default_str();
  sr_cmd->add_option("--max-iters", sr.max_iters, "Iteration cap per patch")->capture_default_str();
  sr.psf.attach(sr_cmd);
  sr_cmd->add_option("--threads", sr.threads, "Worker threads, 0 = auto")->capture_default_str();
  sr_cmd->add_option("--report", sr.report, "Write key=value run report here");
  sr_cmd->add_option("--reference", sr.reference, "Reference image for PSNR/SSIM");
  sr_cmd->add_option("--peak", sr.peak, "Peak value for PSNR and SSIM range")->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR and SSIM of a reconstruction");
  eval_cmd->add_option("recon", ev.recon, "Reconstructed image")->required();
  eval_cmd->add_option("reference", ev.reference, "Reference image")->required();
  eval_cmd->add_option("--peak", ev.peak, "Peak value / dynamic range")->capture_default_str();

  SegmentArgs sg;
  auto* seg_cmd = app.add_subcommand("segment", "1-D k-means segmentation of intensities");
  seg_cmd->add_option("input", sg.input, "Input image")->required();
  seg_cmd->add_option("output", sg.output, "Label image, scaled to gray levels")->required();
  seg_cmd->add_option("--k", sg.k, "Number of classes")->capture_default_str();
  seg_cmd->add_option("--seed", sg.seed, "Initialization seed")->capture_default_str();
  seg_cmd->add_option("--max-iters", sg.max_iters, "Lloyd iteration cap")->capture_default_str();

  GendictArgs gd;
  auto* gen_cmd = app.add_subcommand("gendict", "Write an overcomplete DCT dictionary");
  gen_cmd->add_option("output", gd.output, "Dictionary file")->required();
  gen_cmd->add_option("--np", gd.np, "Patch dimension (perfect square)")->capture_default_str();
  gen_cmd->add_option("--nd", gd.nd, "Atom count (perfect square >= np)")->capture_default_str();
  gen_cmd->add_flag("--text", gd.text, "Write the DICTT text variant");

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (degrade_cmd->parsed()) return cmd_degrade(dg, out);
    if (sr_cmd->parsed()) return cmd_sr(sr, out, err);
    if (eval_cmd->parsed()) return cmd_eval(ev, out);
    if (seg_cmd->parsed()) return cmd_segment(sg, out);
    if (gen_cmd->parsed()) return cmd_gendict(gd, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConvexityGateError& e) {
    err << "convexity gate: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace patchsr::cli
