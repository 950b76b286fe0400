// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-block best responses: each block's exact minimizer of the separable
// approximation with the other blocks held at the current iterate. P and Q
// solve ridge-regularized least squares through a rho x rho Cholesky solve;
// S is an elementwise soft-thresholding step.
#pragma once

#include <algorithm>
#include <cmath>

#include "lrsd/common.hpp"
#include "lrsd/problem.hpp"

namespace lrsd {

struct BestResponse {
  Matrix bP;  // N x rho
  Matrix bQ;  // rho x K
  Matrix bS;  // I x K
};

// S_tau(x) = sign(x) * max(|x| - tau, 0).
inline double soft_threshold(double x, double tau) {
  if (tau < 0.0) throw ArgumentError("soft_threshold: tau must be >= 0");
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

// Cholesky solver for (gram + shift*I) systems, factored once.
class GramSolver {
 public:
  GramSolver(Matrix gram, double shift) {
    if (gram.rows() != gram.cols()) throw ShapeError("GramSolver: gram must be square");
    gram.diagonal().array() += shift;
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success)
      throw NumericError("GramSolver: Cholesky factorization failed");
  }

  // X with (gram + shift*I) X = rhs.
  Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }

  // X with X (gram + shift*I) = rhs.
  Matrix solve_right(const Matrix& rhs) const {
    return llt_.solve(rhs.transpose()).transpose();
  }

 private:
  Eigen::LLT<Matrix> llt_;
};

// bP = (Y - D*S) Q^T (Q Q^T + lambda I)^{-1}, given the precomputed D*S.
inline Matrix best_response_P_from_products(const ProblemData& data, const FactorState& z,
                                            const Matrix& DS) {
  const GramSolver gram(z.Q * z.Q.transpose(), data.lambda);
  return gram.solve_right((data.Y - DS) * z.Q.transpose());
}

inline Matrix best_response_P(const ProblemData& data, const FactorState& z) {
  check_shapes(data, z);
  return best_response_P_from_products(data, z, data.D * z.S);
}

// bQ = (P^T P + lambda I)^{-1} P^T (Y - D*S).
inline Matrix best_response_Q_from_products(const ProblemData& data, const FactorState& z,
                                            const Matrix& DS) {
  const GramSolver gram(z.P.transpose() * z.P, data.lambda);
  return gram.solve(z.P.transpose() * (data.Y - DS));
}

inline Matrix best_response_Q(const ProblemData& data, const FactorState& z) {
  check_shapes(data, z);
  return best_response_Q_from_products(data, z, data.D * z.S);
}

// bS[i,k] = S_mu(arg[i,k]) / ddiag[i].
inline Matrix best_response_S_from_arg(const Matrix& arg, const Vector& ddiag, double mu) {
  if (arg.rows() != ddiag.size()) throw ShapeError("best_response_S: arg/ddiag mismatch");
  Matrix bS(arg.rows(), arg.cols());
  for (Index i = 0; i < arg.rows(); ++i) {
    const double inv = 1.0 / ddiag[i];
    for (Index k = 0; k < arg.cols(); ++k) bS(i, k) = soft_threshold(arg(i, k), mu) * inv;
  }
  return bS;
}

// arg = ddiag(.) * S - D^T R with R = P*Q + D*S - Y.
inline Matrix best_response_S_arg(const ProblemData& data, const FactorState& z,
                                  const Matrix& DtR) {
  return data.ddiag.asDiagonal() * z.S - DtR;
}

inline Matrix best_response_S(const ProblemData& data, const FactorState& z) {
  check_shapes(data, z);
  const Matrix R = residual(data, z);
  return best_response_S_from_arg(best_response_S_arg(data, z, data.D.transpose() * R),
                                  data.ddiag, data.mu);
}

inline BestResponse compute_best_response_from_products(const ProblemData& data,
                                                        const FactorState& z, const Matrix& DS,
                                                        const Matrix& DtR) {
  BestResponse br;
  br.bP = best_response_P_from_products(data, z, DS);
  br.bQ = best_response_Q_from_products(data, z, DS);
  br.bS = best_response_S_from_arg(best_response_S_arg(data, z, DtR), data.ddiag, data.mu);
  return br;
}

// The three block responses are mutually independent (each reads only the
// current iterate), so they may be evaluated in any order or concurrently.
inline BestResponse compute_best_response(const ProblemData& data, const FactorState& z) {
  check_shapes(data, z);
  const Matrix DS = data.D * z.S;
  const Matrix R = z.P * z.Q + DS - data.Y;
  return compute_best_response_from_products(data, z, DS, data.D.transpose() * R);
}

// |tr((BZ - Z)^T grad f(Z))|, the stationarity measure driving the stop test.
inline double stationarity_gap(const FactorState& z, const BestResponse& br,
                               const Gradient& g) {
  const double t = fdot(br.bP - z.P, g.gP) + fdot(br.bQ - z.Q, g.gQ) +
                   fdot(br.bS - z.S, g.gS);
  return std::abs(t);
}

inline double stationarity_gap(const ProblemData& data, const FactorState& z,
                               const BestResponse& br) {
  check_shapes(data, z);
  return stationarity_gap(z, br, grad_f(data, z));
}

// Signed descent measure T(Z) = tr((BZ - Z)^T grad f(Z)) + g(BS) - g(S),
// nonpositive for a genuine best response and zero exactly at stationarity.
inline double descent_gap(const ProblemData& data, const FactorState& z,
                          const BestResponse& br, const Gradient& g) {
  return fdot(br.bP - z.P, g.gP) + fdot(br.bQ - z.Q, g.gQ) + fdot(br.bS - z.S, g.gS) +
         data.mu * (l1_norm(br.bS) - l1_norm(z.S));
}

}  // namespace lrsd
