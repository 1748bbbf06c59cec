#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace patchsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Grayscale image with finite real intensities. Pixel (r, c) is row r,
/// column c; storage order is an implementation detail of Eigen.
class Image {
 public:
  Image() = default;
  Image(Eigen::Index rows, Eigen::Index cols, double fill = 0.0);
  /// Throws DimensionError on an empty matrix and ParameterError on a
  /// non-finite entry.
  explicit Image(Matrix pixels);

  Eigen::Index rows() const { return pixels_.rows(); }
  Eigen::Index cols() const { return pixels_.cols(); }
  bool empty() const { return pixels_.size() == 0; }

  double operator()(Eigen::Index r, Eigen::Index c) const { return pixels_(r, c); }
  double& operator()(Eigen::Index r, Eigen::Index c) { return pixels_(r, c); }

  const Matrix& pixels() const { return pixels_; }
  Matrix& pixels() { return pixels_; }

  bool operator==(const Image& other) const {
    return rows() == other.rows() && cols() == other.cols() && pixels_ == other.pixels_;
  }

 private:
  Matrix pixels_;
};

/// Affine rescale to [0, 1]. A constant image maps to all zeros.
Image normalize_image(const Image& img);

struct PatchAnchor {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  bool operator==(const PatchAnchor&) const = default;
};

/// Overlapping square-patch layout over an image. Anchors are top-left
/// corners in row-major order; trailing anchors are clamped so the last
/// row and column bands are always covered.
struct PatchGrid {
  Eigen::Index image_rows = 0;
  Eigen::Index image_cols = 0;
  Eigen::Index patch_size = 0;
  Eigen::Index stride = 0;
  std::vector<PatchAnchor> positions;
  Eigen::MatrixXi overlap_count;
};

PatchGrid build_patch_grid(Eigen::Index rows, Eigen::Index cols, Eigen::Index patch_size,
                           Eigen::Index stride);

/// 1-D anchor sequence 0, stride, 2*stride, ... plus the clamped last
/// position extent - patch_size.
std::vector<Eigen::Index> anchor_offsets(Eigen::Index extent, Eigen::Index patch_size,
                                         Eigen::Index stride);

// Patches are vectorized column-major: element (r, c) of a side-s patch
// lands at index r + c * s.
template <typename Derived>
Vector vectorize_patch(const Eigen::MatrixBase<Derived>& patch) {
  Vector v(patch.size());
  Eigen::Map<Matrix>(v.data(), patch.rows(), patch.cols()) = patch;
  return v;
}

inline Matrix devectorize_patch(const Vector& v, Eigen::Index side) {
  return Eigen::Map<const Matrix>(v.data(), side, side);
}

}  // namespace patchsr
