// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrsd {

// Dense double matrices, row-major to match the on-disk layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Dimension mismatches between operands.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid scalar arguments or configuration fields.
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failure (non-finite values, failed factorizations, violated
// internal cross-checks).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed serialized inputs (matrix files, config files).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Violations of the simulated multi-node message protocol.
class ProtocolError : public std::logic_error {
 public:
  explicit ProtocolError(const std::string& what) : std::logic_error(what) {}
};

// Frobenius inner product <A, B> = sum_ij A_ij B_ij.
inline double fdot(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw ShapeError("fdot: operands " + std::to_string(A.rows()) + "x" +
                     std::to_string(A.cols()) + " vs " + std::to_string(B.rows()) + "x" +
                     std::to_string(B.cols()));
  return A.cwiseProduct(B).sum();
}

inline double l1_norm(const Matrix& A) { return A.cwiseAbs().sum(); }

inline bool all_finite(const Matrix& A) { return A.allFinite(); }

inline void require_finite(const Matrix& A, const char* name) {
  if (!A.allFinite()) throw ArgumentError(std::string(name) + ": non-finite entries");
}

inline void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) throw ArgumentError(std::string(name) + ": non-finite value");
}

}  // namespace lrsd
