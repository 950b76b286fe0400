// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary matrix container: magic "LRSM1", flags byte (0), dtype byte
// (1 = float64 little-endian), u64 rows, u64 cols, then row-major float64
// payload. 23-byte header, explicit little-endian layout on every platform.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lrsd/common.hpp"

namespace lrsd {

namespace detail {

inline void put_u64_le(std::vector<char>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64_le(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace detail

inline constexpr char kMatrixMagic[5] = {'L', 'R', 'S', 'M', '1'};
inline constexpr std::size_t kMatrixHeaderBytes = 23;

inline void write_matrix(const std::filesystem::path& path, const Matrix& M) {
  if (M.rows() < 1 || M.cols() < 1)
    throw ArgumentError("write_matrix: refusing to write an empty matrix");
  if (!M.allFinite()) throw ArgumentError("write_matrix: non-finite entries");
  std::vector<char> buf;
  buf.reserve(kMatrixHeaderBytes + static_cast<std::size_t>(M.size()) * 8);
  buf.insert(buf.end(), kMatrixMagic, kMatrixMagic + 5);
  buf.push_back(0);  // flags
  buf.push_back(1);  // dtype: float64 LE
  detail::put_u64_le(buf, static_cast<std::uint64_t>(M.rows()));
  detail::put_u64_le(buf, static_cast<std::uint64_t>(M.cols()));
  for (Index i = 0; i < M.rows(); ++i)
    for (Index k = 0; k < M.cols(); ++k)
      detail::put_u64_le(buf, std::bit_cast<std::uint64_t>(M(i, k)));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("write_matrix: cannot open " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ParseError("write_matrix: write failed for " + path.string());
}

inline Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("read_matrix: cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kMatrixHeaderBytes)
    throw ParseError("read_matrix: " + path.string() + ": truncated header, file is " +
                     std::to_string(buf.size()) + " bytes, need " +
                     std::to_string(kMatrixHeaderBytes));
  if (std::memcmp(buf.data(), kMatrixMagic, 5) != 0)
    throw ParseError("read_matrix: " + path.string() + ": bad magic");
  if (buf[5] != 0)
    throw ParseError("read_matrix: " + path.string() + ": unsupported flags byte at offset 5");
  if (buf[6] != 1)
    throw ParseError("read_matrix: " + path.string() +
                     ": unsupported dtype at offset 6 (expected 1 = float64)");
  const std::uint64_t rows = detail::get_u64_le(buf.data() + 7);
  const std::uint64_t cols = detail::get_u64_le(buf.data() + 15);
  if (rows < 1 || cols < 1)
    throw ParseError("read_matrix: " + path.string() + ": degenerate dimensions " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  if (rows > (1ULL << 31) || cols > (1ULL << 31) || rows * cols > (1ULL << 40))
    throw ParseError("read_matrix: " + path.string() + ": implausible dimensions");
  const std::size_t expected = kMatrixHeaderBytes + rows * cols * 8;
  if (buf.size() < expected)
    throw ParseError("read_matrix: " + path.string() + ": payload truncated at byte " +
                     std::to_string(buf.size()) + ", expected " + std::to_string(expected) +
                     " bytes");
  if (buf.size() > expected)
    throw ParseError("read_matrix: " + path.string() + ": trailing bytes after payload (" +
                     std::to_string(buf.size() - expected) + ")");
  Matrix M(static_cast<Index>(rows), static_cast<Index>(cols));
  const char* p = buf.data() + kMatrixHeaderBytes;
  for (Index i = 0; i < M.rows(); ++i)
    for (Index k = 0; k < M.cols(); ++k, p += 8) {
      const double v = std::bit_cast<double>(detail::get_u64_le(p));
      if (!std::isfinite(v))
        throw ParseError("read_matrix: " + path.string() + ": non-finite value at entry (" +
                         std::to_string(i) + "," + std::to_string(k) + ")");
      M(i, k) = v;
    }
  return M;
}

}  // namespace lrsd
