#include "patchsr/pipeline.hpp"

#include "patchsr/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

namespace patchsr {

namespace {

constexpr std::size_t kBatchSize = 1024;
constexpr double kNonzeroThreshold = 1e-8;

class Accumulator {
 public:
  Accumulator(Eigen::Index rows, Eigen::Index cols)
      : sum_(Matrix::Zero(rows, cols)), count_(Eigen::MatrixXi::Zero(rows, cols)) {}

  void add(const PatchAnchor& at, const Matrix& patch) {
    if (at.row < 0 || at.col < 0 || at.row + patch.rows() > sum_.rows() ||
        at.col + patch.cols() > sum_.cols()) {
      throw DimensionError("patch at (" + std::to_string(at.row) + ", " + std::to_string(at.col) +
                           ") exceeds " + std::to_string(sum_.rows()) + "x" +
                           std::to_string(sum_.cols()) + " canvas");
    }
    sum_.block(at.row, at.col, patch.rows(), patch.cols()) += patch;
    count_.block(at.row, at.col, patch.rows(), patch.cols()).array() += 1;
  }

  Image finish() const {
    for (Eigen::Index c = 0; c < count_.cols(); ++c) {
      for (Eigen::Index r = 0; r < count_.rows(); ++r) {
        if (count_(r, c) == 0) {
          throw CoverageError("pixel (" + std::to_string(r) + ", " + std::to_string(c) +
                              ") is not covered by any patch");
        }
      }
    }
    return Image(Matrix(sum_.array() / count_.cast<double>().array()));
  }

 private:
  Matrix sum_;
  Eigen::MatrixXi count_;
};

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  pool.reserve(count);
  for (unsigned t = 0; t < count; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace

Image degrade(const Image& x, const Psf& psf, Eigen::Index q, double noise_sigma,
              std::uint64_t seed) {
  if (q <= 0) throw ParameterError("degrade: q must be positive");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ParameterError("degrade: noise_sigma must be nonnegative");
  }
  if (x.rows() % q != 0 || x.cols() % q != 0) {
    throw DimensionError("degrade: image " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + " not divisible by q=" + std::to_string(q));
  }
  Matrix low = downsample(q, blur_patch(psf, x.pixels()));
  if (noise_sigma > 0.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (Eigen::Index r = 0; r < low.rows(); ++r) {
      for (Eigen::Index c = 0; c < low.cols(); ++c) low(r, c) += noise(gen);
    }
  }
  return Image(std::move(low));
}

void SrConfig::validate() const {
  if (q <= 0) throw ParameterError("q must be positive");
  if (dict.patch_side() % q != 0) {
    throw DimensionError("dictionary patch side " + std::to_string(dict.patch_side()) +
                         " is not divisible by q=" + std::to_string(q));
  }
  const Eigen::Index lr_side = dict.patch_side() / q;
  if (lr_stride < 1 || lr_stride > lr_side) {
    throw ParameterError("lr_stride must be in [1, " + std::to_string(lr_side) + "], got " +
                         std::to_string(lr_stride));
  }
  solver.validate();
}

SrResult super_resolve(const Image& y, const SrConfig& cfg, const SrOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  if (y.empty()) throw DimensionError("super_resolve: empty input");

  const Eigen::Index q = cfg.q;
  const Eigen::Index hr_side = cfg.dict.patch_side();
  const Eigen::Index lr_side = hr_side / q;
  const PatchGrid grid = build_patch_grid(y.rows(), y.cols(), lr_side, cfg.lr_stride);

  const DenseOperator op(PatchOperator(cfg.dict, cfg.psf, q));
  const StepPlan plan = plan_step(op, cfg.penalty, cfg.solver);
  const Matrix& atoms = cfg.dict.atoms();

  SrResult out;
  SrReport& rep = out.report;
  rep.plan = plan;
  rep.lr_patch_side = lr_side;
  rep.patch_count = grid.positions.size();
  rep.iterations.assign(grid.positions.size(), 0);
  rep.threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  if (opts.keep_coefficients) out.coefficients.resize(grid.positions.size());

  struct PatchOutcome {
    Vector coeffs;
    int iterations = 0;
    bool converged = false;
    bool failed = false;
    int fail_iteration = 0;
    std::string message;
  };

  Accumulator acc(y.rows() * q, y.cols() * q);
  std::vector<PatchOutcome> batch;
  std::size_t nonzeros = 0;

  for (std::size_t start = 0; start < grid.positions.size(); start += kBatchSize) {
    const std::size_t n = std::min(kBatchSize, grid.positions.size() - start);
    batch.assign(n, PatchOutcome{});
    parallel_for(n, rep.threads, [&](std::size_t i) {
      const PatchAnchor at = grid.positions[start + i];
      const Vector obs = vectorize_patch(y.pixels().block(at.row, at.col, lr_side, lr_side));
      PatchOutcome& o = batch[i];
      try {
        SolveResult s = fb_solve(op, plan, cfg.solver, obs);
        o.coeffs = std::move(s.coefficients);
        o.iterations = s.iterations;
        o.converged = s.converged;
      } catch (const NumericError& e) {
        o.coeffs = Vector::Zero(op.input_size());
        o.failed = true;
        o.fail_iteration = e.iteration();
        o.message = e.what();
      }
    });

    // Fixed anchor order keeps the reduction independent of scheduling.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t idx = start + i;
      const PatchAnchor at = grid.positions[idx];
      PatchOutcome& o = batch[i];
      rep.iterations[idx] = o.iterations;
      if (o.converged) ++rep.converged_count;
      if (o.failed) rep.failures.push_back({idx, at, o.fail_iteration, o.message});
      nonzeros += static_cast<std::size_t>((o.coeffs.array().abs() > kNonzeroThreshold).count());
      const Vector hr = atoms * o.coeffs;
      acc.add({at.row * q, at.col * q}, devectorize_patch(hr, hr_side));
      if (opts.keep_coefficients) out.coefficients[idx] = std::move(o.coeffs);
    }
  }

  out.image = acc.finish();
  rep.mean_sparsity =
      static_cast<double>(nonzeros) / static_cast<double>(std::max<std::size_t>(1, rep.patch_count));
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Image aggregate(const std::vector<std::pair<PatchAnchor, Matrix>>& patches, Eigen::Index rows,
                Eigen::Index cols) {
  if (rows <= 0 || cols <= 0) throw DimensionError("aggregate: canvas must be nonempty");
  Accumulator acc(rows, cols);
  for (const auto& [at, patch] : patches) acc.add(at, patch);
  return acc.finish();
}

}  // namespace patchsr
