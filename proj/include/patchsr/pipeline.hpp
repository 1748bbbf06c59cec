#pragma once

#include "patchsr/dictionary.hpp"
#include "patchsr/image.hpp"
#include "patchsr/operators.hpp"
#include "patchsr/solver.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace patchsr {

/// Blur the whole image with symmetric boundaries, block-average by q and
/// add white Gaussian noise of standard deviation noise_sigma drawn from a
/// generator seeded with `seed` (pixels visited in row-major order).
Image degrade(const Image& x, const Psf& psf, Eigen::Index q, double noise_sigma,
              std::uint64_t seed);

struct SrConfig {
  SrConfig(Dictionary d, Psf p) : dict(std::move(d)), psf(std::move(p)) {}

  Eigen::Index q = 4;
  // Anchor spacing on the low-resolution grid.
  Eigen::Index lr_stride = 1;
  SolverConfig solver;
  PenaltyKind penalty = PenaltyKind::Cauchy;
  Dictionary dict;
  Psf psf;

  /// Throws DimensionError/ParameterError when sqrt(n_p) is not divisible
  /// by q or lr_stride is outside [1, sqrt(n_p)/q].
  void validate() const;
};

struct PatchFailure {
  std::size_t index = 0;
  PatchAnchor anchor;
  int iteration = 0;
  std::string message;
};

struct SrReport {
  StepPlan plan;
  Eigen::Index lr_patch_side = 0;
  std::size_t patch_count = 0;
  std::size_t converged_count = 0;
  std::vector<int> iterations;
  std::vector<PatchFailure> failures;
  // Mean number of coefficients with |a_i| > 1e-8 per patch.
  double mean_sparsity = 0.0;
  double wall_seconds = 0.0;
  unsigned threads = 1;
};

struct SrResult {
  Image image;
  SrReport report;
  // Per-patch coefficients in anchor order; filled only when requested.
  std::vector<Vector> coefficients;
};

struct SrOptions {
  // 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
  bool keep_coefficients = false;
};

/// Solve every low-resolution patch independently, synthesize D a and
/// average the high-resolution patches over their overlaps. The output is
/// bit-identical for any thread count. Patches whose solve raises a
/// NumericError contribute zeros and are listed in the report.
SrResult super_resolve(const Image& y, const SrConfig& cfg, const SrOptions& opts = {});

/// Pixelwise mean of the given patches. Throws CoverageError if any pixel
/// of the rows x cols canvas is uncovered and DimensionError if a patch
/// falls outside it.
Image aggregate(const std::vector<std::pair<PatchAnchor, Matrix>>& patches, Eigen::Index rows,
                Eigen::Index cols);

}  // namespace patchsr
