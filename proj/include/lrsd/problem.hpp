// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Problem data and objective for sparsity-regularized low-rank decomposition:
//
//   minimize  F(P,Q,S) = f(P,Q,S) + g(S)
//   f(P,Q,S)  = 0.5*||P*Q + D*S - Y||_F^2 + (lambda/2)*(||P||_F^2 + ||Q||_F^2)
//   g(S)      = mu*||S||_1
//
// over P (N x rho), Q (rho x K), S (I x K). Y (N x K) is the observation
// matrix and D (N x I) the sparse-component dictionary.
#pragma once

#include <string>
#include <utility>

#include "lrsd/common.hpp"

namespace lrsd {

struct ProblemData {
  Matrix Y;       // N x K observations
  Matrix D;       // N x I dictionary
  double lambda;  // factor ridge weight, > 0 (>= 0 with allow_degenerate)
  double mu;      // sparsity weight, > 0 (>= 0 with allow_degenerate)
  Index rho;      // factorization rank, 1 <= rho <= min(N, K)
  Vector ddiag;   // diag(D^T D), strictly positive (no zero column in D)

  ProblemData(Matrix Y_in, Matrix D_in, double lambda_in, double mu_in, Index rho_in,
              bool allow_degenerate = false)
      : Y(std::move(Y_in)), D(std::move(D_in)), lambda(lambda_in), mu(mu_in), rho(rho_in) {
    if (Y.rows() < 1 || Y.cols() < 1) throw ShapeError("ProblemData: Y must be nonempty");
    if (D.rows() != Y.rows())
      throw ShapeError("ProblemData: D has " + std::to_string(D.rows()) + " rows, Y has " +
                       std::to_string(Y.rows()));
    if (D.cols() < 1) throw ShapeError("ProblemData: D must have at least one column");
    require_finite(Y, "ProblemData: Y");
    require_finite(D, "ProblemData: D");
    require_finite(lambda, "ProblemData: lambda");
    require_finite(mu, "ProblemData: mu");
    if (!(lambda > 0.0 || (allow_degenerate && lambda == 0.0)))
      throw ArgumentError("ProblemData: lambda must be > 0");
    if (!(mu > 0.0 || (allow_degenerate && mu == 0.0)))
      throw ArgumentError("ProblemData: mu must be > 0");
    if (rho < 1 || rho > std::min(Y.rows(), Y.cols()))
      throw ArgumentError("ProblemData: rho must satisfy 1 <= rho <= min(N, K)");
    ddiag = D.colwise().squaredNorm();
    for (Index i = 0; i < ddiag.size(); ++i)
      if (ddiag[i] <= 0.0)
        throw ArgumentError("ProblemData: D column " + std::to_string(i) + " is zero");
  }

  Index n() const { return Y.rows(); }
  Index k() const { return Y.cols(); }
  Index i() const { return D.cols(); }
};

// One iterate Z = (P, Q, S).
struct FactorState {
  Matrix P;  // N x rho
  Matrix Q;  // rho x K
  Matrix S;  // I x K

  static FactorState zeros(const ProblemData& data) {
    FactorState z;
    z.P = Matrix::Zero(data.n(), data.rho);
    z.Q = Matrix::Zero(data.rho, data.k());
    z.S = Matrix::Zero(data.i(), data.k());
    return z;
  }
};

struct Gradient {
  Matrix gP;  // N x rho
  Matrix gQ;  // rho x K
  Matrix gS;  // I x K
};

inline void check_shapes(const ProblemData& data, const FactorState& z) {
  if (z.P.rows() != data.n() || z.P.cols() != data.rho)
    throw ShapeError("state: P is " + std::to_string(z.P.rows()) + "x" +
                     std::to_string(z.P.cols()) + ", expected " + std::to_string(data.n()) +
                     "x" + std::to_string(data.rho));
  if (z.Q.rows() != data.rho || z.Q.cols() != data.k())
    throw ShapeError("state: Q is " + std::to_string(z.Q.rows()) + "x" +
                     std::to_string(z.Q.cols()) + ", expected " + std::to_string(data.rho) +
                     "x" + std::to_string(data.k()));
  if (z.S.rows() != data.i() || z.S.cols() != data.k())
    throw ShapeError("state: S is " + std::to_string(z.S.rows()) + "x" +
                     std::to_string(z.S.cols()) + ", expected " + std::to_string(data.i()) +
                     "x" + std::to_string(data.k()));
  if (!all_finite(z.P)) throw ArgumentError("state: P has non-finite entries");
  if (!all_finite(z.Q)) throw ArgumentError("state: Q has non-finite entries");
  if (!all_finite(z.S)) throw ArgumentError("state: S has non-finite entries");
}

// Fitting residual R = P*Q + D*S - Y. All modules derive R with this exact
// expression so that block-partitioned evaluations reproduce it bit for bit.
inline Matrix residual(const ProblemData& data, const FactorState& z) {
  return z.P * z.Q + data.D * z.S - data.Y;
}

// Smooth part evaluated from a precomputed residual.
inline double eval_f_from_residual(const ProblemData& data, const FactorState& z,
                                   const Matrix& R) {
  return 0.5 * R.squaredNorm() + 0.5 * data.lambda * z.P.squaredNorm() +
         0.5 * data.lambda * z.Q.squaredNorm();
}

inline double eval_f(const ProblemData& data, const FactorState& z) {
  check_shapes(data, z);
  return eval_f_from_residual(data, z, residual(data, z));
}

inline double eval_g(const ProblemData& data, const Matrix& S) {
  if (S.rows() != data.i() || S.cols() != data.k())
    throw ShapeError("eval_g: S is " + std::to_string(S.rows()) + "x" +
                     std::to_string(S.cols()));
  return data.mu * l1_norm(S);
}

inline double eval_objective_from_residual(const ProblemData& data, const FactorState& z,
                                           const Matrix& R) {
  return eval_f_from_residual(data, z, R) + data.mu * l1_norm(z.S);
}

inline double eval_objective(const ProblemData& data, const FactorState& z) {
  check_shapes(data, z);
  return eval_objective_from_residual(data, z, residual(data, z));
}

// Gradient of f from precomputed R and D^T R.
inline Gradient grad_f_from_residual(const ProblemData& data, const FactorState& z,
                                     const Matrix& R, const Matrix& DtR) {
  Gradient g;
  g.gP = R * z.Q.transpose() + data.lambda * z.P;
  g.gQ = z.P.transpose() * R + data.lambda * z.Q;
  g.gS = DtR;
  return g;
}

inline Gradient grad_f(const ProblemData& data, const FactorState& z) {
  check_shapes(data, z);
  const Matrix R = residual(data, z);
  return grad_f_from_residual(data, z, R, data.D.transpose() * R);
}

// Separable approximation of f at the anchor state: each block's partial
// objective is evaluated with the other blocks frozen at the anchor, and the
// constant is chosen so the approximation is tight at the anchor. The S part
// uses the per-entry quadratic 0.5*ddiag[i]*S[i,k]^2 - S[i,k]*r[i,k] with
// r = ddiag(.)*Sa - D^T(D*Sa - Y + Pa*Qa), which matches f up to a constant
// when only S varies.
inline double eval_approx(const ProblemData& data, const FactorState& z,
                          const FactorState& anchor) {
  check_shapes(data, z);
  check_shapes(data, anchor);
  const double f_anchor = eval_f(data, anchor);

  FactorState vary_p{z.P, anchor.Q, anchor.S};
  FactorState vary_q{anchor.P, z.Q, anchor.S};
  const double fp = eval_f(data, vary_p);
  const double fq = eval_f(data, vary_q);

  const Matrix arg = data.ddiag.asDiagonal() * anchor.S -
                     data.D.transpose() * (data.D * anchor.S - data.Y + anchor.P * anchor.Q);
  const auto raw_s = [&](const Matrix& S) {
    double acc = 0.0;
    for (Index i = 0; i < data.i(); ++i)
      for (Index k = 0; k < data.k(); ++k)
        acc += 0.5 * data.ddiag[i] * S(i, k) * S(i, k) - S(i, k) * arg(i, k);
    return acc;
  };
  const double fs = raw_s(z.S) - raw_s(anchor.S) + f_anchor;

  return fp + fq + fs - 2.0 * f_anchor;
}

}  // namespace lrsd
