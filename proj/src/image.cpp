#include "patchsr/image.hpp"

#include "patchsr/errors.hpp"

#include <string>

namespace patchsr {

Image::Image(Eigen::Index rows, Eigen::Index cols, double fill) {
  if (rows <= 0 || cols <= 0) {
    throw DimensionError("image dimensions must be positive, got " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  pixels_ = Matrix::Constant(rows, cols, fill);
}

Image::Image(Matrix pixels) : pixels_(std::move(pixels)) {
  if (pixels_.size() == 0) throw DimensionError("image must be nonempty");
  if (!pixels_.allFinite()) throw ParameterError("image contains non-finite intensities");
}

Image normalize_image(const Image& img) {
  if (img.empty()) throw DimensionError("normalize_image: empty image");
  const double lo = img.pixels().minCoeff();
  const double hi = img.pixels().maxCoeff();
  if (hi == lo) return Image(img.rows(), img.cols(), 0.0);
  return Image(Matrix((img.pixels().array() - lo) / (hi - lo)));
}

std::vector<Eigen::Index> anchor_offsets(Eigen::Index extent, Eigen::Index patch_size,
                                         Eigen::Index stride) {
  std::vector<Eigen::Index> out;
  const Eigen::Index last = extent - patch_size;
  for (Eigen::Index p = 0; p <= last; p += stride) out.push_back(p);
  if (out.back() != last) out.push_back(last);
  return out;
}

PatchGrid build_patch_grid(Eigen::Index rows, Eigen::Index cols, Eigen::Index patch_size,
                           Eigen::Index stride) {
  if (rows <= 0 || cols <= 0 || patch_size <= 0) {
    throw DimensionError("build_patch_grid: sizes must be positive");
  }
  if (stride <= 0) throw ParameterError("build_patch_grid: stride must be >= 1");
  // Larger strides leave gaps between patches.
  if (stride > patch_size) {
    throw ParameterError("build_patch_grid: stride " + std::to_string(stride) +
                         " exceeds patch size " + std::to_string(patch_size));
  }
  if (patch_size > rows || patch_size > cols) {
    throw DimensionError("build_patch_grid: patch " + std::to_string(patch_size) +
                         " larger than image " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }

  PatchGrid grid;
  grid.image_rows = rows;
  grid.image_cols = cols;
  grid.patch_size = patch_size;
  grid.stride = stride;
  grid.overlap_count = Eigen::MatrixXi::Zero(rows, cols);

  const auto row_offsets = anchor_offsets(rows, patch_size, stride);
  const auto col_offsets = anchor_offsets(cols, patch_size, stride);
  grid.positions.reserve(row_offsets.size() * col_offsets.size());
  for (auto r : row_offsets) {
    for (auto c : col_offsets) {
      grid.positions.push_back({r, c});
      grid.overlap_count.block(r, c, patch_size, patch_size).array() += 1;
    }
  }
  return grid;
}

}  // namespace patchsr
