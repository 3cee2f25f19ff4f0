#pragma once

// Binary matrix format ("TGM1"):
//   bytes 0..3   magic "TGM1"
//   u64 LE       rows
//   u64 LE       cols
//   u8           dtype (0 = f32, 1 = f64)
//   payload      rows*cols little-endian values, row-major

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/matrix.hpp"

namespace graphtp {

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

inline constexpr std::array<char, 4> kMatrixMagic{'T', 'G', 'M', '1'};

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw MalformedInput("binary matrix: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline std::ifstream open_in(const std::filesystem::path& p, bool binary) {
  std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
  if (!in) throw MalformedInput("cannot open " + p.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw MalformedInput("cannot write " + p.string());
  return out;
}

inline double parse_double(std::string_view tok, const std::string& where) {
  double v = 0.0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw MalformedInput(where + ": cannot parse number '" + std::string(tok) + "'");
  return v;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline void write_matrix(std::ostream& os, const DenseMatrix& m, DType dtype = DType::F64) {
  os.write(kMatrixMagic.data(), kMatrixMagic.size());
  detail::put_le<std::uint64_t>(os, m.rows());
  detail::put_le<std::uint64_t>(os, m.cols());
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(dtype));
  for (double v : m.data()) {
    if (dtype == DType::F32)
      detail::put_le<float>(os, static_cast<float>(v));
    else
      detail::put_le<double>(os, v);
  }
}

inline void write_matrix(const std::filesystem::path& p, const DenseMatrix& m, DType dtype = DType::F64) {
  auto out = detail::open_out(p, true);
  write_matrix(out, m, dtype);
  if (!out) throw MalformedInput("write failed: " + p.string());
}

struct LoadedMatrix {
  DenseMatrix matrix;
  DType dtype = DType::F64;
};

inline LoadedMatrix read_matrix_typed(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMatrixMagic)
    throw MalformedInput("binary matrix: bad magic (expected TGM1)");
  const auto rows = detail::get_le<std::uint64_t>(is);
  const auto cols = detail::get_le<std::uint64_t>(is);
  const auto tag = detail::get_le<std::uint8_t>(is);
  if (tag > 1) throw MalformedInput("binary matrix: unknown dtype tag " + std::to_string(tag));
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols)
    throw MalformedInput("binary matrix: implausible shape");
  LoadedMatrix out{DenseMatrix(rows, cols), static_cast<DType>(tag)};
  for (double& v : out.matrix.data()) {
    if (out.dtype == DType::F32)
      v = detail::get_le<float>(is);
    else
      v = detail::get_le<double>(is);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw MalformedInput("binary matrix: trailing bytes");
  return out;
}

inline DenseMatrix read_matrix(const std::filesystem::path& p) {
  auto in = detail::open_in(p, true);
  return read_matrix_typed(in).matrix;
}

/// CSV without header, one row per line.
inline DenseMatrix read_csv(const std::filesystem::path& p) {
  auto in = detail::open_in(p, false);
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = detail::trim(line);
    if (body.empty()) continue;
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      auto tok = detail::trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      data.push_back(detail::parse_double(tok, p.string() + ":" + std::to_string(lineno)));
      ++n;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0)
      cols = n;
    else if (n != cols)
      throw MalformedInput(p.string() + ":" + std::to_string(lineno) + ": ragged CSV row");
    ++rows;
  }
  return DenseMatrix(rows, cols, std::move(data));
}

inline void write_csv(const std::filesystem::path& p, const DenseMatrix& m) {
  auto out = detail::open_out(p, false);
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      // Shortest round-trip representation.
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j));
      if (j) out.put(',');
      out.write(buf, end - buf);
    }
    out.put('\n');
  }
}

/// Features are CSV when the extension is .csv, otherwise binary.
inline DenseMatrix read_features(const std::filesystem::path& p) {
  return p.extension() == ".csv" ? read_csv(p) : read_matrix(p);
}

inline void write_features(const std::filesystem::path& p, const DenseMatrix& m) {
  if (p.extension() == ".csv")
    write_csv(p, m);
  else
    write_matrix(p, m, DType::F64);
}

}  // namespace graphtp
