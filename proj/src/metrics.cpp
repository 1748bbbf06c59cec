#include "patchsr/metrics.hpp"

#include "patchsr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace patchsr {

namespace {

void require_same_shape(const Image& x, const Image& ref, const char* what) {
  if (x.rows() != ref.rows() || x.cols() != ref.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(x.rows()) +
                         "x" + std::to_string(x.cols()) + " vs " + std::to_string(ref.rows()) +
                         "x" + std::to_string(ref.cols()));
  }
}

Vector gaussian_window(Eigen::Index size, double sigma) {
  Vector w(size);
  const double c = 0.5 * static_cast<double>(size - 1);
  for (Eigen::Index i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return w / w.sum();
}

// Separable "valid" filtering with a normalized 1-D window.
Matrix filter_valid(const Matrix& m, const Vector& w) {
  const Eigen::Index n = w.size();
  const Eigen::Index rows = m.rows() - n + 1;
  const Eigen::Index cols = m.cols() - n + 1;
  Matrix tmp = Matrix::Zero(rows, m.cols());
  for (Eigen::Index i = 0; i < n; ++i) tmp += w[i] * m.middleRows(i, rows);
  Matrix out = Matrix::Zero(rows, cols);
  for (Eigen::Index j = 0; j < n; ++j) out += w[j] * tmp.middleCols(j, cols);
  return out;
}

}  // namespace

double psnr(const Image& x, const Image& ref, double peak) {
  require_same_shape(x, ref, "psnr");
  if (!(peak > 0.0)) throw ParameterError("psnr: peak must be positive");
  const double mse = (x.pixels() - ref.pixels()).squaredNorm() / static_cast<double>(x.pixels().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& x, const Image& ref, double dynamic_range, const SsimParams& params) {
  require_same_shape(x, ref, "ssim");
  if (!(dynamic_range > 0.0)) throw ParameterError("ssim: dynamic range must be positive");
  if (x.rows() < params.window || x.cols() < params.window) {
    throw DimensionError("ssim: image " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + " smaller than the " +
                         std::to_string(params.window) + "x" + std::to_string(params.window) +
                         " window");
  }
  const double c1 = std::pow(params.k1 * dynamic_range, 2);
  const double c2 = std::pow(params.k2 * dynamic_range, 2);
  const Vector w = gaussian_window(params.window, params.sigma);

  const Matrix& a = x.pixels();
  const Matrix& b = ref.pixels();
  const Matrix mu_a = filter_valid(a, w);
  const Matrix mu_b = filter_valid(b, w);
  const Matrix aa = filter_valid(a.cwiseProduct(a), w);
  const Matrix bb = filter_valid(b.cwiseProduct(b), w);
  const Matrix ab = filter_valid(a.cwiseProduct(b), w);

  const auto ma = mu_a.array();
  const auto mb = mu_b.array();
  const auto var_a = aa.array() - ma.square();
  const auto var_b = bb.array() - mb.square();
  const auto cov = ab.array() - ma * mb;
  const Eigen::ArrayXXd map = ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                              ((ma.square() + mb.square() + c1) * (var_a + var_b + c2));
  return map.mean();
}

KMeansResult kmeans_segment(const Image& x, int k, std::uint64_t seed, int max_iters) {
  if (k < 1) throw ParameterError("kmeans_segment: k must be >= 1, got " + std::to_string(k));
  if (max_iters < 1) throw ParameterError("kmeans_segment: max_iters must be >= 1");
  const Eigen::Index n = x.pixels().size();
  if (static_cast<Eigen::Index>(k) > n) {
    throw ParameterError("kmeans_segment: k=" + std::to_string(k) + " exceeds pixel count " +
                         std::to_string(n));
  }
  const Eigen::Map<const Vector> v(x.pixels().data(), n);

  // k-means++ seeding.
  std::mt19937_64 gen(seed);
  std::vector<double> centers;
  centers.reserve(static_cast<std::size_t>(k));
  centers.push_back(v[std::uniform_int_distribution<Eigen::Index>(0, n - 1)(gen)]);
  Vector d2(n);
  while (static_cast<int>(centers.size()) < k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (v[i] - c) * (v[i] - c));
      d2[i] = best;
    }
    const double total = d2.sum();
    if (!(total > 0.0)) {
      // Fewer distinct intensities than k.
      centers.push_back(centers.back());
      continue;
    }
    double target = std::uniform_real_distribution<double>(0.0, total)(gen);
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      target -= d2[i];
      if (target < 0.0 && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    if (d2[pick] == 0.0) {
      for (Eigen::Index i = n - 1; i >= 0; --i) {
        if (d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(v[pick]);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  KMeansResult res;
  for (int it = 1; it <= max_iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::abs(v[i] - centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = std::abs(v[i] - centers[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best = c;
          best_d = d;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    res.iterations = it;
    if (!changed) break;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<Eigen::Index> cnt(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] += v[i];
      ++cnt[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (cnt[c] > 0) centers[c] = sum[c] / static_cast<double>(cnt[c]);
    }
  }

  // Canonical labels: ascending centroid, ties by original index.
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return centers[static_cast<std::size_t>(a)] < centers[static_cast<std::size_t>(b)];
  });
  std::vector<int> rank(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;

  res.labels.resize(x.rows(), x.cols());
  res.centroids.resize(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) {
    res.centroids[static_cast<std::size_t>(r)] = centers[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int lbl = rank[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    res.labels.data()[i] = lbl;
    const double d = v[i] - res.centroids[static_cast<std::size_t>(lbl)];
    res.within_ss += d * d;
  }
  return res;
}

}  // namespace patchsr
