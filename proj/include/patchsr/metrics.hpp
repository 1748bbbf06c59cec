#pragma once

#include "patchsr/image.hpp"

#include <cstdint>
#include <vector>

namespace patchsr {

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Image& x, const Image& ref, double peak = 1.0);

struct SsimParams {
  Eigen::Index window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean SSIM over all window positions fully inside the image, Gaussian
/// weighted, with C1 = (k1 range)^2 and C2 = (k2 range)^2.
double ssim(const Image& x, const Image& ref, double dynamic_range = 1.0,
            const SsimParams& params = {});

using LabelImage = Eigen::MatrixXi;

struct KMeansResult {
  // Label 0 is the darkest class.
  LabelImage labels;
  // Ascending.
  std::vector<double> centroids;
  double within_ss = 0.0;
  int iterations = 0;
};

/// 1-D Lloyd iterations on pixel intensities with k-means++ seeding drawn
/// from a generator seeded with `seed`. When the image has fewer distinct
/// intensities than k, the surplus clusters stay empty.
KMeansResult kmeans_segment(const Image& x, int k, std::uint64_t seed, int max_iters = 100);

}  // namespace patchsr
