#include "patchsr/operators.hpp"

#include "patchsr/errors.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace patchsr {

Psf::Psf(Matrix kernel) : kernel_(std::move(kernel)) {
  if (kernel_.rows() != kernel_.cols() || kernel_.rows() % 2 == 0) {
    throw ParameterError("PSF must be square with odd side, got " +
                         std::to_string(kernel_.rows()) + "x" + std::to_string(kernel_.cols()));
  }
  if (!kernel_.allFinite() || (kernel_.array() < 0.0).any()) {
    throw ParameterError("PSF entries must be finite and nonnegative");
  }
  if (std::abs(kernel_.sum() - 1.0) > 1e-12) {
    throw ParameterError("PSF must sum to 1, sum is " + std::to_string(kernel_.sum()));
  }
}

Psf gaussian_psf(Eigen::Index size, double sigma) {
  if (size <= 0 || size % 2 == 0) {
    throw ParameterError("gaussian_psf: size must be odd and positive, got " +
                         std::to_string(size));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("gaussian_psf: sigma must be positive");
  }
  const Eigen::Index r = size / 2;
  Matrix k(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j < size; ++j) {
      const double di = static_cast<double>(i - r);
      const double dj = static_cast<double>(j - r);
      k(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  }
  k /= k.sum();
  return Psf(std::move(k));
}

Psf load_psf(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open PSF file '" + path.string() + "'");
  std::string magic;
  long long size = 0;
  if (!(in >> magic) || magic != "PSF") {
    throw FormatError(path.string() + ": header: expected 'PSF <size>'");
  }
  if (!(in >> size) || size <= 0 || size % 2 == 0) {
    throw FormatError(path.string() + ": size: expected odd positive integer");
  }
  Matrix k(size, size);
  for (long long i = 0; i < size; ++i) {
    for (long long j = 0; j < size; ++j) {
      if (!(in >> k(i, j))) {
        throw FormatError(path.string() + ": entry (" + std::to_string(i) + ", " +
                          std::to_string(j) + ") missing or unparsable");
      }
      if (!std::isfinite(k(i, j)) || k(i, j) < 0.0) {
        throw FormatError(path.string() + ": entry (" + std::to_string(i) + ", " +
                          std::to_string(j) + ") must be finite and nonnegative");
      }
    }
  }
  const double total = k.sum();
  if (!(total > 0.0)) throw FormatError(path.string() + ": kernel sums to zero");
  if (std::abs(total - 1.0) > 1e-12) k /= total;
  return Psf(std::move(k));
}

void save_psf(const Psf& psf, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write PSF file '" + path.string() + "'");
  out << "PSF " << psf.size() << '\n'
      << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < psf.size(); ++i) {
    for (Eigen::Index j = 0; j < psf.size(); ++j) {
      out << (j ? " " : "") << psf.kernel()(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Matrix blur_patch(const Psf& psf, const Matrix& patch) {
  const Eigen::Index rows = patch.rows();
  const Eigen::Index cols = patch.cols();
  const Eigen::Index r = psf.radius();
  const Matrix& k = psf.kernel();
  Matrix out = Matrix::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (Eigen::Index b = 0; b < psf.size(); ++b) {
        const Eigen::Index sj = reflect_index(j + b - r, cols);
        for (Eigen::Index a = 0; a < psf.size(); ++a) {
          acc += k(a, b) * patch(reflect_index(i + a - r, rows), sj);
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix blur_adjoint(const Psf& psf, const Matrix& patch) {
  const Eigen::Index rows = patch.rows();
  const Eigen::Index cols = patch.cols();
  const Eigen::Index r = psf.radius();
  const Matrix& k = psf.kernel();
  Matrix out = Matrix::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double v = patch(i, j);
      if (v == 0.0) continue;
      for (Eigen::Index b = 0; b < psf.size(); ++b) {
        const Eigen::Index sj = reflect_index(j + b - r, cols);
        for (Eigen::Index a = 0; a < psf.size(); ++a) {
          out(reflect_index(i + a - r, rows), sj) += k(a, b) * v;
        }
      }
    }
  }
  return out;
}

Matrix downsample(Eigen::Index q, const Matrix& patch) {
  if (q <= 0) throw ParameterError("downsample: factor must be positive");
  if (patch.rows() % q != 0 || patch.cols() % q != 0) {
    throw DimensionError("downsample: " + std::to_string(patch.rows()) + "x" +
                         std::to_string(patch.cols()) + " not divisible by q=" +
                         std::to_string(q));
  }
  const Eigen::Index rows = patch.rows() / q;
  const Eigen::Index cols = patch.cols() / q;
  const double scale = 1.0 / static_cast<double>(q * q);
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      out(i, j) = patch.block(i * q, j * q, q, q).sum() * scale;
    }
  }
  return out;
}

Matrix upsample_adjoint(Eigen::Index q, const Matrix& patch) {
  if (q <= 0) throw ParameterError("upsample_adjoint: factor must be positive");
  const double scale = 1.0 / static_cast<double>(q * q);
  Matrix out(patch.rows() * q, patch.cols() * q);
  for (Eigen::Index j = 0; j < patch.cols(); ++j) {
    for (Eigen::Index i = 0; i < patch.rows(); ++i) {
      out.block(i * q, j * q, q, q).setConstant(patch(i, j) * scale);
    }
  }
  return out;
}

PatchOperator::PatchOperator(Dictionary dict, Psf psf, Eigen::Index q)
    : dict_(std::move(dict)), psf_(std::move(psf)), q_(q) {
  if (q_ <= 0) throw ParameterError("PatchOperator: q must be positive");
  if (dict_.patch_side() % q_ != 0) {
    throw DimensionError("PatchOperator: patch side " + std::to_string(dict_.patch_side()) +
                         " not divisible by q=" + std::to_string(q_));
  }
  lr_side_ = dict_.patch_side() / q_;
}

Vector PatchOperator::apply_forward(const Vector& a) const {
  if (a.size() != input_size()) {
    throw DimensionError("apply_forward: expected " + std::to_string(input_size()) +
                         " coefficients, got " + std::to_string(a.size()));
  }
  const Vector hr = dict_.atoms() * a;
  return vectorize_patch(downsample(q_, blur_patch(psf_, devectorize_patch(hr, hr_side()))));
}

Vector PatchOperator::apply_adjoint(const Vector& r) const {
  if (r.size() != output_size()) {
    throw DimensionError("apply_adjoint: expected " + std::to_string(output_size()) +
                         " residual entries, got " + std::to_string(r.size()));
  }
  const Matrix hr = blur_adjoint(psf_, upsample_adjoint(q_, devectorize_patch(r, lr_side_)));
  return dict_.atoms().transpose() * vectorize_patch(hr);
}

Matrix PatchOperator::materialize() const {
  Matrix a(output_size(), input_size());
  Vector e = Vector::Zero(input_size());
  for (Eigen::Index j = 0; j < input_size(); ++j) {
    e[j] = 1.0;
    a.col(j) = apply_forward(e);
    e[j] = 0.0;
  }
  return a;
}

Vector DenseOperator::apply_forward(const Vector& a) const {
  if (a.size() != a_.cols()) {
    throw DimensionError("apply_forward: expected " + std::to_string(a_.cols()) +
                         " coefficients, got " + std::to_string(a.size()));
  }
  return a_ * a;
}

Vector DenseOperator::apply_adjoint(const Vector& r) const {
  if (r.size() != a_.rows()) {
    throw DimensionError("apply_adjoint: expected " + std::to_string(a_.rows()) +
                         " residual entries, got " + std::to_string(r.size()));
  }
  return a_.transpose() * r;
}

}  // namespace patchsr
