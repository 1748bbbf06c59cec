#include "patchsr/image_io.hpp"

#include "patchsr/errors.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace patchsr {

namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::string& header,
          const std::vector<unsigned char>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Header tokenizer for PNM: whitespace separated, '#' starts a comment
// running to end of line.
class HeaderReader {
 public:
  HeaderReader(const std::vector<unsigned char>& buf, std::string where)
      : buf_(buf), where_(std::move(where)) {}

  std::string token(const char* field) {
    skip_space_and_comments();
    std::string t;
    while (pos_ < buf_.size() && !std::isspace(buf_[pos_]) && buf_[pos_] != '#') {
      t.push_back(static_cast<char>(buf_[pos_++]));
    }
    if (t.empty()) throw FormatError(where_ + field + ": missing");
    return t;
  }

  long long number(const char* field) {
    const std::string t = token(field);
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw FormatError(where_ + field + ": not a decimal integer: '" + t + "'");
    }
    try {
      return std::stoll(t);
    } catch (const std::exception&) {
      throw FormatError(where_ + field + ": out of range: '" + t + "'");
    }
  }

  // Exactly one whitespace byte separates the last header field from data.
  std::size_t data_start(const char* field) {
    if (pos_ >= buf_.size() || !std::isspace(buf_[pos_])) {
      throw FormatError(where_ + field + ": expected single whitespace before data");
    }
    return pos_ + 1;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < buf_.size()) {
      if (std::isspace(buf_[pos_])) {
        ++pos_;
      } else if (buf_[pos_] == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n' && buf_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& buf_;
  std::string where_;
  std::size_t pos_ = 0;
};

Image parse_pgm(const std::vector<unsigned char>& buf, const std::string& where) {
  HeaderReader h(buf, where);
  if (h.token("magic") != "P5") throw FormatError(where + "magic: expected P5");
  const long long width = h.number("width");
  const long long height = h.number("height");
  const long long maxval = h.number("maxval");
  if (width <= 0 || height <= 0) throw FormatError(where + "width/height: must be positive");
  if (maxval <= 0 || maxval > 65535) throw FormatError(where + "maxval: must be in [1, 65535]");
  const std::size_t start = h.data_start("maxval");
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(width * height) * bytes_per;
  if (buf.size() - start < need) {
    throw FormatError(where + "data: truncated, expected " + std::to_string(need) +
                      " bytes, got " + std::to_string(buf.size() - start));
  }
  Matrix m(height, width);
  const double scale = 1.0 / static_cast<double>(maxval);
  const unsigned char* p = buf.data() + start;
  for (long long r = 0; r < height; ++r) {
    for (long long c = 0; c < width; ++c) {
      unsigned v = *p++;
      if (bytes_per == 2) v = (v << 8) | *p++;
      if (v > static_cast<unsigned>(maxval)) {
        throw FormatError(where + "sample (" + std::to_string(r) + ", " + std::to_string(c) +
                          ") exceeds maxval");
      }
      m(r, c) = static_cast<double>(v) * scale;
    }
  }
  return Image(std::move(m));
}

Image parse_imgf(const std::vector<unsigned char>& buf, const std::string& where) {
  HeaderReader h(buf, where);
  if (h.token("magic") != "IMGF") throw FormatError(where + "magic: expected IMGF");
  const long long rows = h.number("rows");
  const long long cols = h.number("cols");
  if (rows <= 0 || cols <= 0) throw FormatError(where + "rows/cols: must be positive");
  const std::size_t start = h.data_start("cols");
  const std::size_t need = static_cast<std::size_t>(rows * cols) * 8;
  if (buf.size() - start != need) {
    throw FormatError(where + "data: expected " + std::to_string(need) + " bytes, got " +
                      std::to_string(buf.size() - start));
  }
  Matrix m(rows, cols);
  const unsigned char* p = buf.data() + start;
  for (long long r = 0; r < rows; ++r) {
    for (long long c = 0; c < cols; ++c) {
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
      p += 8;
      const double v = std::bit_cast<double>(bits);
      if (!std::isfinite(v)) {
        throw FormatError(where + "pixel (" + std::to_string(r) + ", " + std::to_string(c) +
                          ") is not finite");
      }
      m(r, c) = v;
    }
  }
  return Image(std::move(m));
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  return parse_pgm(slurp(path), path.string() + ": ");
}

void write_pgm(const Image& img, const std::filesystem::path& path, int bits) {
  if (bits != 8 && bits != 16) throw ParameterError("write_pgm: bits must be 8 or 16");
  const unsigned maxval = bits == 8 ? 255u : 65535u;
  std::vector<unsigned char> body;
  body.reserve(static_cast<std::size_t>(img.rows() * img.cols()) * (bits / 8));
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double v = std::clamp(img(r, c), 0.0, 1.0);
      const auto s = static_cast<unsigned>(std::lround(v * maxval));
      if (bits == 16) body.push_back(static_cast<unsigned char>(s >> 8));
      body.push_back(static_cast<unsigned char>(s & 0xffu));
    }
  }
  dump(path,
       "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n" +
           std::to_string(maxval) + "\n",
       body);
}

Image read_imgf(const std::filesystem::path& path) {
  return parse_imgf(slurp(path), path.string() + ": ");
}

void write_imgf(const Image& img, const std::filesystem::path& path) {
  std::vector<unsigned char> body;
  body.reserve(static_cast<std::size_t>(img.rows() * img.cols()) * 8);
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint64_t>(img(r, c));
      for (int i = 0; i < 8; ++i) body.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xffu));
    }
  }
  dump(path, "IMGF " + std::to_string(img.rows()) + " " + std::to_string(img.cols()) + "\n", body);
}

Image read_image(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  const std::string where = path.string() + ": ";
  if (buf.size() >= 2 && buf[0] == 'P' && buf[1] == '5') return parse_pgm(buf, where);
  if (buf.size() >= 4 && std::equal(buf.begin(), buf.begin() + 4, "IMGF")) {
    return parse_imgf(buf, where);
  }
  throw FormatError(where + "magic: unrecognized image format (expected P5 or IMGF)");
}

void write_image(const Image& img, const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") {
    write_pgm(img, path, 8);
  } else {
    write_imgf(img, path);
  }
}

}  // namespace patchsr
