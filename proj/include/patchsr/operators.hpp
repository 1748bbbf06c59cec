#pragma once

#include "patchsr/dictionary.hpp"
#include "patchsr/image.hpp"

#include <cmath>
#include <filesystem>

namespace patchsr {

/// Odd-sized, nonnegative blur kernel summing to one.
class Psf {
 public:
  /// Throws ParameterError on even/non-square size, negative or non-finite
  /// entries, or a sum further than 1e-12 from one.
  explicit Psf(Matrix kernel);

  static Psf identity() { return Psf(Matrix::Ones(1, 1)); }

  Eigen::Index size() const { return kernel_.rows(); }
  Eigen::Index radius() const { return kernel_.rows() / 2; }
  const Matrix& kernel() const { return kernel_; }

 private:
  Matrix kernel_;
};

Psf gaussian_psf(Eigen::Index size, double sigma);

/// Text format: "PSF <size>" then size rows of size decimals. Entries are
/// rescaled to sum to one on load; negative or all-zero kernels are
/// rejected with FormatError.
Psf load_psf(const std::filesystem::path& path);
void save_psf(const Psf& psf, const std::filesystem::path& path);

/// Half-sample symmetric reflection of an index into [0, n).
inline Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  const Eigen::Index period = 2 * n;
  Eigen::Index m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

/// 2-D correlation with the kernel under symmetric boundary extension.
/// Works on any rectangular input; used per patch and on whole images.
Matrix blur_patch(const Psf& psf, const Matrix& patch);

/// Exact adjoint of blur_patch, including the folding of reflected
/// contributions back onto boundary pixels.
Matrix blur_adjoint(const Psf& psf, const Matrix& patch);

/// Mean over non-overlapping q x q blocks. Throws DimensionError when a
/// side is not divisible by q.
Matrix downsample(Eigen::Index q, const Matrix& patch);

/// Adjoint of downsample: replicate into q x q blocks scaled by 1/q^2.
Matrix upsample_adjoint(Eigen::Index q, const Matrix& patch);

/// Composite per-patch forward model a -> S_q(H(D a)) acting on column-major
/// vectorized patches.
class PatchOperator {
 public:
  PatchOperator(Dictionary dict, Psf psf, Eigen::Index q);

  Eigen::Index input_size() const { return dict_.atom_count(); }
  Eigen::Index output_size() const { return lr_side_ * lr_side_; }
  Eigen::Index hr_side() const { return dict_.patch_side(); }
  Eigen::Index lr_side() const { return lr_side_; }
  Eigen::Index factor() const { return q_; }
  const Dictionary& dictionary() const { return dict_; }
  const Psf& psf() const { return psf_; }

  Vector apply_forward(const Vector& a) const;
  Vector apply_adjoint(const Vector& r) const;

  /// Explicit (n_p/q^2) x n_d matrix, built column by column through
  /// apply_forward.
  Matrix materialize() const;

 private:
  Dictionary dict_;
  Psf psf_;
  Eigen::Index q_;
  Eigen::Index lr_side_;
};

/// A linear map stored as an explicit matrix.
class DenseOperator {
 public:
  explicit DenseOperator(Matrix a) : a_(std::move(a)) {}
  explicit DenseOperator(const PatchOperator& op) : a_(op.materialize()) {}

  Eigen::Index input_size() const { return a_.cols(); }
  Eigen::Index output_size() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }

  Vector apply_forward(const Vector& a) const;
  Vector apply_adjoint(const Vector& r) const;

 private:
  Matrix a_;
};

struct LipschitzEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  // A^T A annihilated the iterate; value is 0 and no step size exists.
  bool zero_operator = false;
};

/// Largest eigenvalue of A^T A by power iteration on
/// v -> apply_adjoint(apply_forward(v)), started from the normalized
/// all-ones vector. Stops when the Rayleigh quotient changes by less than
/// tol relative.
template <typename Op>
LipschitzEstimate lipschitz_constant(const Op& op, double tol = 1e-12, int max_iters = 20000) {
  LipschitzEstimate est;
  const Eigen::Index n = op.input_size();
  Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  double prev = 0.0;
  for (int k = 1; k <= max_iters; ++k) {
    Vector w = op.apply_adjoint(op.apply_forward(v));
    const double rayleigh = v.dot(w);
    const double norm = w.norm();
    est.iterations = k;
    if (norm == 0.0) {
      est.value = 0.0;
      est.zero_operator = true;
      est.converged = true;
      return est;
    }
    est.value = rayleigh;
    v = w / norm;
    if (k > 1 && std::abs(rayleigh - prev) <= tol * std::abs(rayleigh)) {
      est.converged = true;
      break;
    }
    prev = rayleigh;
  }
  return est;
}

}  // namespace patchsr
