#include "patchsr/dictionary.hpp"

#include "patchsr/errors.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace patchsr {

namespace {

constexpr double kUnitNormSlack = 1e-12;
constexpr double kWarnNormSlack = 1e-6;

std::string entry_name(Eigen::Index row, Eigen::Index col) {
  return "entry (" + std::to_string(row) + ", " + std::to_string(col) + ")";
}

void write_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

Eigen::Index exact_sqrt(Eigen::Index n) {
  if (n < 0) return -1;
  auto r = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r * r == n ? r : -1;
}

Dictionary::Dictionary(Matrix atoms) : atoms_(std::move(atoms)) {
  if (atoms_.rows() == 0 || atoms_.cols() == 0) {
    throw DimensionError("dictionary must have at least one atom and one row");
  }
  side_ = exact_sqrt(atoms_.rows());
  if (side_ <= 0) {
    throw DimensionError("dictionary patch dimension n_p=" + std::to_string(atoms_.rows()) +
                         " is not a perfect square");
  }
  for (Eigen::Index j = 0; j < atoms_.cols(); ++j) {
    for (Eigen::Index i = 0; i < atoms_.rows(); ++i) {
      if (!std::isfinite(atoms_(i, j))) {
        throw ParameterError("dictionary " + entry_name(i, j) + " is not finite");
      }
    }
    const double norm = atoms_.col(j).norm();
    if (!(norm > 0.0)) {
      throw ParameterError("dictionary atom " + std::to_string(j) + " has zero norm");
    }
    const double dev = std::abs(norm - 1.0);
    max_norm_deviation_ = std::max(max_norm_deviation_, dev);
    if (dev > kUnitNormSlack) atoms_.col(j) /= norm;
  }
}

Dictionary overcomplete_dct(Eigen::Index n_p, Eigen::Index n_d) {
  const Eigen::Index s = exact_sqrt(n_p);
  if (n_p <= 0 || s <= 0) {
    throw ParameterError("overcomplete_dct: n_p=" + std::to_string(n_p) +
                         " is not a perfect square");
  }
  const Eigen::Index m = exact_sqrt(n_d);
  if (n_d <= 0 || m <= 0 || m < s) {
    throw ParameterError("overcomplete_dct: n_d=" + std::to_string(n_d) +
                         " must be a perfect square m^2 with m >= " + std::to_string(s));
  }

  Matrix v(s, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index i = 0; i < s; ++i) {
      v(i, k) = std::cos(std::numbers::pi * static_cast<double>((2 * i + 1) * k) /
                         static_cast<double>(2 * m));
    }
  }

  Matrix atoms(n_p, n_d);
  for (Eigen::Index k2 = 0; k2 < m; ++k2) {
    for (Eigen::Index k1 = 0; k1 < m; ++k1) {
      const Eigen::Index col = k1 + k2 * m;
      for (Eigen::Index c = 0; c < s; ++c) {
        for (Eigen::Index r = 0; r < s; ++r) atoms(r + c * s, col) = v(r, k1) * v(c, k2);
      }
      if (col != 0) atoms.col(col).array() -= atoms.col(col).mean();
      atoms.col(col).normalize();
    }
  }
  return Dictionary(std::move(atoms));
}

void save_dictionary(const Dictionary& d, const std::filesystem::path& path,
                     DictionaryEncoding enc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dictionary file '" + path.string() + "'");
  const Matrix& a = d.atoms();
  if (enc == DictionaryEncoding::Binary) {
    out << "DICT1 " << a.rows() << ' ' << a.cols() << '\n';
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      for (Eigen::Index i = 0; i < a.rows(); ++i) write_le(out, a(i, j));
    }
  } else {
    out << "DICTT " << a.rows() << ' ' << a.cols() << '\n'
        << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      for (Eigen::Index i = 0; i < a.rows(); ++i) out << (i ? " " : "") << a(i, j);
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dictionary load_dictionary(const std::filesystem::path& path, std::ostream* warn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dictionary file '" + path.string() + "'");
  const std::string where = path.string() + ": ";

  std::string header;
  if (!std::getline(in, header)) throw FormatError(where + "header: file is empty");
  std::istringstream hs(header);
  std::string magic;
  long long n_p = 0;
  long long n_d = 0;
  hs >> magic;
  if (magic != "DICT1" && magic != "DICTT") {
    throw FormatError(where + "header: expected magic DICT1 or DICTT, got '" + magic + "'");
  }
  if (!(hs >> n_p) || n_p <= 0) throw FormatError(where + "n_p: missing or not positive");
  if (!(hs >> n_d) || n_d <= 0) throw FormatError(where + "n_d: missing or not positive");
  std::string extra;
  if (hs >> extra) throw FormatError(where + "header: unexpected token '" + extra + "'");
  if (exact_sqrt(n_p) < 0) {
    throw FormatError(where + "n_p: " + std::to_string(n_p) + " is not a perfect square");
  }

  const long long count = n_p * n_d;
  Matrix a(n_p, n_d);
  auto check = [&](double v, long long idx) {
    if (!std::isfinite(v)) {
      throw FormatError(where + entry_name(idx % n_p, idx / n_p) + " is not finite");
    }
  };

  if (magic == "DICT1") {
    std::vector<unsigned char> buf(static_cast<std::size_t>(count) * 8);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got != static_cast<std::streamsize>(buf.size())) {
      throw FormatError(where + "data: truncated, expected " + std::to_string(count) +
                        " values, got " + std::to_string(got / 8));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw FormatError(where + "data: trailing bytes after " + std::to_string(count) + " values");
    }
    for (long long idx = 0; idx < count; ++idx) {
      const double v = read_le(buf.data() + 8 * idx);
      check(v, idx);
      a(idx % n_p, idx / n_p) = v;
    }
  } else {
    std::string tok;
    for (long long idx = 0; idx < count; ++idx) {
      if (!(in >> tok)) {
        throw FormatError(where + "data: truncated, expected " + std::to_string(count) +
                          " values, got " + std::to_string(idx));
      }
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw FormatError(where + entry_name(idx % n_p, idx / n_p) + " is not a number: '" +
                          tok + "'");
      }
      check(v, idx);
      a(idx % n_p, idx / n_p) = v;
    }
    if (in >> tok) throw FormatError(where + "data: trailing token '" + tok + "'");
  }

  std::optional<Dictionary> d;
  try {
    d.emplace(std::move(a));
  } catch (const ParameterError& e) {
    throw FormatError(where + e.what());
  }
  if (warn && d->max_norm_deviation() > kWarnNormSlack) {
    *warn << "warning: " << path.string() << ": atom norms deviate from 1 by up to "
          << d->max_norm_deviation() << "; columns renormalized\n";
  }
  return std::move(*d);
}

}  // namespace patchsr
