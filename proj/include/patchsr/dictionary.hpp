#pragma once

#include "patchsr/image.hpp"

#include <filesystem>
#include <iosfwd>

namespace patchsr {

/// n_p x n_d matrix of column atoms, each a column-major vectorized
/// sqrt(n_p) x sqrt(n_p) patch. Columns are unit-norm.
class Dictionary {
 public:
  /// Rescales every column to unit l2 norm. Columns already within 1e-12
  /// of unit norm are left bit-identical. Throws DimensionError when n_p is
  /// not a perfect square, ParameterError on non-finite or zero columns.
  explicit Dictionary(Matrix atoms);

  Eigen::Index patch_dim() const { return atoms_.rows(); }
  Eigen::Index atom_count() const { return atoms_.cols(); }
  Eigen::Index patch_side() const { return side_; }
  const Matrix& atoms() const { return atoms_; }

  /// Largest |norm - 1| seen before normalization.
  double max_norm_deviation() const { return max_norm_deviation_; }

  bool operator==(const Dictionary& other) const { return atoms_ == other.atoms_; }

 private:
  Matrix atoms_;
  Eigen::Index side_ = 0;
  double max_norm_deviation_ = 0.0;
};

/// Integer square root of n if n is a perfect square, else -1.
Eigen::Index exact_sqrt(Eigen::Index n);

/// Separable overcomplete DCT dictionary. n_d must equal m^2 with
/// m >= sqrt(n_p). The 1-D factor is V(i, k) = cos(pi (2i + 1) k / (2m)),
/// i < sqrt(n_p), k < m; atoms are the Kronecker product V (x) V with
/// every column except the DC one mean-removed, then normalized. For
/// m = sqrt(n_p) this is the orthonormal 2-D DCT-II basis.
Dictionary overcomplete_dct(Eigen::Index n_p, Eigen::Index n_d);

enum class DictionaryEncoding { Binary, Text };

/// Binary: "DICT1 <n_p> <n_d>\n" then n_p*n_d little-endian float64,
/// column-major. Text: "DICTT <n_p> <n_d>\n" then whitespace-separated
/// decimals, column-major.
void save_dictionary(const Dictionary& d, const std::filesystem::path& path,
                     DictionaryEncoding enc = DictionaryEncoding::Binary);

/// Reads either encoding (detected from the magic). Throws IoError when the
/// file cannot be opened and FormatError naming the offending field
/// otherwise. Writes a warning to `warn` if any column norm deviates from 1
/// by more than 1e-6.
Dictionary load_dictionary(const std::filesystem::path& path, std::ostream* warn = nullptr);

}  // namespace patchsr
