// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Comparison baselines: classical block-coordinate descent (sequential exact
// block updates, elementwise for S) and ADMM on the variable-split problem
// with an auxiliary copy A of S and scaled multiplier Pi.
#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "lrsd/best_response.hpp"
#include "lrsd/common.hpp"
#include "lrsd/solver.hpp"

namespace lrsd {

// ---------------------------------------------------------------------------
// Block-coordinate descent
// ---------------------------------------------------------------------------

struct BcdState {
  Matrix P;
  Matrix Q;
  Matrix S;
  Matrix E;  // running residual P*Q + D*S - Y, refreshed at every sweep end
};

inline BcdState bcd_init(const ProblemData& data, const FactorState& z0) {
  check_shapes(data, z0);
  BcdState st;
  st.P = z0.P;
  st.Q = z0.Q;
  st.S = z0.S;
  st.E = residual(data, z0);
  return st;
}

inline double bcd_objective(const ProblemData& data, const BcdState& st) {
  FactorState z{st.P, st.Q, st.S};
  return eval_objective_from_residual(data, z, st.E);
}

// One full cycle: exact P block, exact Q block, then every S entry in
// row-major order. The residual is maintained by rank-one column updates
// during the S pass and recomputed from scratch at the end; drift beyond
// 1e-10 (relative) trips a NumericError. The observer, when set, runs after
// the P block, the Q block, and each S element update.
inline void bcd_sweep(const ProblemData& data, BcdState& st,
                      const std::function<void(const BcdState&)>& observer = {}) {
  const Matrix DS = data.D * st.S;
  FactorState z{st.P, st.Q, st.S};
  st.P = best_response_P_from_products(data, z, DS);
  st.E = st.P * st.Q + DS - data.Y;
  if (observer) observer(st);

  z.P = st.P;
  st.Q = best_response_Q_from_products(data, z, DS);
  st.E = st.P * st.Q + DS - data.Y;
  if (observer) observer(st);

  for (Index i = 0; i < data.i(); ++i) {
    const double delta_i = data.ddiag[i];
    for (Index k = 0; k < data.k(); ++k) {
      const double s_old = st.S(i, k);
      const double r = delta_i * s_old - data.D.col(i).dot(st.E.col(k));
      const double s_new = soft_threshold(r, data.mu) / delta_i;
      if (s_new != s_old) {
        st.E.col(k) += data.D.col(i) * (s_new - s_old);
        st.S(i, k) = s_new;
      }
      if (observer) observer(st);
    }
  }

  FactorState zf{st.P, st.Q, st.S};
  const Matrix fresh = residual(data, zf);
  const double drift = (st.E - fresh).norm();
  if (!(drift <= 1e-10 * std::max(1.0, fresh.norm())))
    throw NumericError("bcd_sweep: residual drift exceeds tolerance");
  st.E = fresh;
}

// ---------------------------------------------------------------------------
// ADMM
// ---------------------------------------------------------------------------

struct AdmmState {
  Matrix P;
  Matrix Q;
  Matrix A;   // auxiliary copy of the sparse block (data-fit side)
  Matrix B;   // thresholded copy (regularizer side), reported as S
  Matrix Pi;  // scaled dual variable
  double c = 100.0;
};

struct AdmmDiag {
  double primal_residual = 0.0;  // ||A - B||_F
  double objective_at_A = 0.0;   // F evaluated with S = A instead of B
};

inline AdmmState admm_init(const ProblemData& data, const FactorState& z0, double c = 100.0) {
  check_shapes(data, z0);
  if (!(c > 0.0)) throw ArgumentError("admm_init: c must be > 0");
  AdmmState st;
  st.P = z0.P;
  st.Q = z0.Q;
  st.A = Matrix::Zero(data.i(), data.k());
  st.B = st.A;
  st.Pi = st.A;
  st.c = c;
  return st;
}

// Factorization of D^T D + c I, computed once per run.
class AdmmWorkspace {
 public:
  AdmmWorkspace(const ProblemData& data, double c)
      : solver_(data.D.transpose() * data.D, c) {}
  const GramSolver& solver() const { return solver_; }

 private:
  GramSolver solver_;
};

inline void admm_step(const ProblemData& data, AdmmState& st, const AdmmWorkspace& ws) {
  const Matrix YDA = data.Y - data.D * st.A;
  {
    const GramSolver gq(st.P.transpose() * st.P, data.lambda);
    st.Q = gq.solve(st.P.transpose() * YDA);
  }
  {
    const double tau = data.mu / st.c;
    const Matrix arg = st.A + st.Pi / st.c;
    st.B = arg.unaryExpr([tau](double x) { return soft_threshold(x, tau); });
  }
  {
    const GramSolver gp(st.Q * st.Q.transpose(), data.lambda);
    st.P = gp.solve_right(YDA * st.Q.transpose());
  }
  st.A = ws.solver().solve(data.D.transpose() * (data.Y - st.P * st.Q) - st.Pi + st.c * st.B);
  st.Pi += st.c * (st.A - st.B);
  if (!st.A.allFinite() || !st.Pi.allFinite())
    throw NumericError("admm_step: iterate diverged to non-finite values");
}

inline void admm_step(const ProblemData& data, AdmmState& st) {
  admm_step(data, st, AdmmWorkspace(data, st.c));
}

// ---------------------------------------------------------------------------
// Shared runner
// ---------------------------------------------------------------------------

enum class BaselineAlgo { Bcd, Admm };

struct BaselineBudget {
  int max_iters = 0;
  double max_seconds = std::numeric_limits<double>::infinity();
};

struct BaselineOptions {
  double admm_c = 100.0;
  bool trace_timing = true;
  // The stationarity column costs extra matrix products per iteration; long
  // diagnostic runs can disable it (the column is then 0).
  bool trace_stationarity = true;
};

struct BaselineResult {
  FactorState state;
  std::vector<IterationTrace> trace;
  std::vector<AdmmDiag> admm_diag;  // one entry per iteration, ADMM only
};

// Runs the chosen baseline from z0 until the iteration or wall-clock budget
// is exhausted. Trace rows mirror the PBR solver: one row per completed
// iteration (BCD: full sweep; ADMM: one round of updates) with the objective
// at the post-update state; gamma has no meaning here and is logged as 0.
inline BaselineResult run_baseline(const ProblemData& data, const FactorState& z0,
                                   BaselineAlgo algo, const BaselineBudget& budget,
                                   const BaselineOptions& opts = {}) {
  check_shapes(data, z0);
  if (budget.max_iters < 0) throw ArgumentError("run_baseline: max_iters must be >= 0");
  BaselineResult res;
  res.state = z0;
  const auto t0 = std::chrono::steady_clock::now();
  const auto seconds = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const auto log_row = [&](int iter, const FactorState& z, double objective) {
    IterationTrace row;
    row.iter = iter;
    row.objective = objective;
    if (opts.trace_stationarity)
      row.stationarity = stationarity_gap(data, z, compute_best_response(data, z));
    row.gamma = 0.0;
    row.elapsed_seconds = opts.trace_timing ? seconds() : 0.0;
    row.surrogate_gap = 0.0;
    res.trace.push_back(row);
  };

  if (algo == BaselineAlgo::Bcd) {
    BcdState st = bcd_init(data, z0);
    for (int iter = 1; iter <= budget.max_iters; ++iter) {
      bcd_sweep(data, st);
      res.state = FactorState{st.P, st.Q, st.S};
      log_row(iter, res.state, bcd_objective(data, st));
      if (seconds() >= budget.max_seconds) break;
    }
    return res;
  }

  AdmmState st = admm_init(data, z0, opts.admm_c);
  const AdmmWorkspace ws(data, st.c);
  for (int iter = 1; iter <= budget.max_iters; ++iter) {
    admm_step(data, st, ws);
    res.state = FactorState{st.P, st.Q, st.B};
    log_row(iter, res.state, eval_objective(data, res.state));
    AdmmDiag diag;
    diag.primal_residual = (st.A - st.B).norm();
    diag.objective_at_A = eval_objective(data, FactorState{st.P, st.Q, st.A});
    res.admm_diag.push_back(diag);
    if (seconds() >= budget.max_seconds) break;
  }
  return res;
}

}  // namespace lrsd
