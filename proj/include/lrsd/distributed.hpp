// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Simulated multi-node solve over a row partition of Y and D. Each node owns
// its row block of P plus the matching rows of Y and D; Q and S live at the
// coordinator. One iteration exchanges two rounds of messages:
//
//   phase 1: node l sends gram_l = P_l^T P_l, rhs_q_l = P_l^T (Y_l - D_l S),
//            s_arg_l = ddiag_l(.) S - D_l^T R_l; the coordinator reduces them
//            into the exact Q and S best responses.
//   phase 2: node l sends the four scalars (a_l, b_l, c_l, d_l); their sums
//            are the exact line-search coefficients, so the step size costs
//            4L scalars of traffic per iteration.
//
// All node kernels evaluate the same expressions as the monolithic solver on
// copied row blocks, and reductions run in fixed node order, so an L = 1 run
// reproduces the monolithic trace bit for bit.
#pragma once

#include <atomic>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "lrsd/best_response.hpp"
#include "lrsd/common.hpp"
#include "lrsd/line_search.hpp"
#include "lrsd/problem.hpp"
#include "lrsd/solver.hpp"

namespace lrsd {

struct Partition {
  int num_nodes = 1;
  std::vector<std::pair<Index, Index>> row_ranges;  // half-open [begin, end)
};

// Balanced contiguous split of N rows over L nodes: the first N mod L ranges
// get one extra row.
inline Partition partition_rows(Index n_rows, int num_nodes) {
  if (num_nodes < 1) throw ArgumentError("partition_rows: need at least one node");
  if (static_cast<Index>(num_nodes) > n_rows)
    throw ArgumentError("partition_rows: more nodes than rows");
  Partition part;
  part.num_nodes = num_nodes;
  const Index base = n_rows / num_nodes;
  const Index extra = n_rows % num_nodes;
  Index begin = 0;
  for (int l = 0; l < num_nodes; ++l) {
    const Index len = base + (static_cast<Index>(l) < extra ? 1 : 0);
    part.row_ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  return part;
}

// Node-owned copies of the static row blocks.
struct NodeData {
  int node = 0;
  Index row_begin = 0;
  Index row_end = 0;
  Matrix Y;      // N_l x K
  Matrix D;      // N_l x I
  Vector ddiag;  // node share of diag(D^T D), sent once at setup
};

inline std::vector<NodeData> make_node_data(const ProblemData& data, const Partition& part) {
  std::vector<NodeData> nodes;
  nodes.reserve(part.row_ranges.size());
  for (int l = 0; l < part.num_nodes; ++l) {
    const auto [b, e] = part.row_ranges[l];
    NodeData nd;
    nd.node = l;
    nd.row_begin = b;
    nd.row_end = e;
    nd.Y = data.Y.middleRows(b, e - b);
    nd.D = data.D.middleRows(b, e - b);
    nd.ddiag = nd.D.colwise().squaredNorm();
    nodes.push_back(std::move(nd));
  }
  return nodes;
}

// Message schema.
struct IterationBroadcast {
  int iter = 0;
  Matrix Q;
  Matrix S;
};

struct NodeShare {
  int iter = 0;
  int node = 0;
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;  // phase-2 scalars
  Matrix gram;                                // rho x rho
  Matrix rhs_q;                               // rho x K
  Matrix s_arg;                               // I x K
};

struct StepDecision {
  int iter = 0;
  double gamma = 0.0;
};

// Phase-1 kernel. Also returns the node residual block R_l, which phase 2
// reuses. Every product is materialized by construction, exactly like the
// monolithic evaluation path; Eigen can produce bit-different results for
// the same product depending on how the destination is initialized, and
// single-node runs promise bit equality with the monolithic solver.
inline NodeShare node_share_phase1(const NodeData& nd, const Matrix& P_l,
                                   const IterationBroadcast& bcast, Matrix& R_l) {
  const Matrix DS = nd.D * bcast.S;
  Matrix R = P_l * bcast.Q + DS - nd.Y;
  NodeShare share;
  share.iter = bcast.iter;
  share.node = nd.node;
  Matrix gram = P_l.transpose() * P_l;
  Matrix rhs_q = P_l.transpose() * (nd.Y - DS);
  Matrix s_arg = nd.ddiag.asDiagonal() * bcast.S - nd.D.transpose() * R;
  share.gram = std::move(gram);
  share.rhs_q = std::move(rhs_q);
  share.s_arg = std::move(s_arg);
  R_l = std::move(R);
  return share;
}

// Node block of the P best response; the Q-side Gram factorization depends
// only on broadcast data, so every node forms the same one.
inline Matrix node_best_response_P_block(const NodeData& nd, const IterationBroadcast& bcast,
                                         const GramSolver& q_gram) {
  return q_gram.solve_right((nd.Y - nd.D * bcast.S) * bcast.Q.transpose());
}

// Standalone variant matching the monolithic operation's signature.
inline Matrix node_best_response_P(const ProblemData& data, const FactorState& z,
                                   const Partition& part, int node) {
  check_shapes(data, z);
  if (node < 0 || node >= part.num_nodes)
    throw ArgumentError("node_best_response_P: node index out of range");
  const NodeData nd = make_node_data(data, part)[node];
  const GramSolver q_gram(z.Q * z.Q.transpose(), data.lambda);
  IterationBroadcast bcast{0, z.Q, z.S};
  return node_best_response_P_block(nd, bcast, q_gram);
}

// Phase-2 kernel: the node's additive share of the line-search coefficients.
// Terms that do not decompose over rows (those involving only Q, dQ, or the
// S-regularizer difference) are carried with weight 1/L so the shares sum to
// the monolithic coefficients. Term order matches ls_coefficients exactly.
inline void node_ls_share(const NodeData& nd, const Matrix& P_l, const Matrix& bP_l,
                          const Matrix& R_l, const IterationBroadcast& bcast,
                          const Matrix& dQ, const Matrix& dS, double lambda, double mu,
                          double l1_diff, int num_nodes, NodeShare& share) {
  const Matrix dP = bP_l - P_l;
  const Matrix U = dP * dQ;
  const Matrix W = P_l * dQ + dP * bcast.Q + nd.D * dS;
  const double inv_l = 1.0 / static_cast<double>(num_nodes);
  share.a = 2.0 * U.squaredNorm();
  share.b = 3.0 * fdot(U, W);
  share.c = 2.0 * fdot(U, R_l) + W.squaredNorm() + lambda * dP.squaredNorm() +
            (lambda * inv_l) * dQ.squaredNorm();
  share.d = fdot(W, R_l) + lambda * fdot(P_l, dP) + (lambda * inv_l) * fdot(bcast.Q, dQ) +
            (mu * inv_l) * l1_diff;
}

namespace detail {

// Orders shares by their node field; rejects duplicates, gaps, or iteration
// mismatches. Reductions over the result are independent of the order in
// which shares arrived.
inline std::vector<const NodeShare*> slot_shares(const std::vector<NodeShare>& shares,
                                                 int num_nodes, int iter) {
  if (static_cast<int>(shares.size()) != num_nodes)
    throw ProtocolError("reduce: expected " + std::to_string(num_nodes) + " shares, got " +
                        std::to_string(shares.size()));
  std::vector<const NodeShare*> slots(num_nodes, nullptr);
  for (const NodeShare& s : shares) {
    if (s.node < 0 || s.node >= num_nodes)
      throw ProtocolError("reduce: share from unknown node " + std::to_string(s.node));
    if (slots[s.node]) throw ProtocolError("reduce: duplicate share from node " +
                                           std::to_string(s.node));
    if (s.iter != iter)
      throw ProtocolError("reduce: share iteration " + std::to_string(s.iter) +
                          " does not match " + std::to_string(iter));
    slots[s.node] = &s;
  }
  return slots;
}

}  // namespace detail

struct ReducedResponse {
  Matrix bQ;
  Matrix bS;
};

// Fixed-order reduction of the phase-1 shares into the exact Q and S best
// responses. ddiag_sum is the setup-time sum of the node ddiag vectors;
// num_nodes is the coordinator's node count, checked against the shares.
inline ReducedResponse reduce_and_compute(const ProblemData& data,
                                          const std::vector<NodeShare>& shares,
                                          const Vector& ddiag_sum, int num_nodes, int iter) {
  const auto slots = detail::slot_shares(shares, num_nodes, iter);
  Matrix gram = slots[0]->gram;
  Matrix rhs = slots[0]->rhs_q;
  Matrix arg = slots[0]->s_arg;
  for (size_t l = 1; l < slots.size(); ++l) {
    gram += slots[l]->gram;
    rhs += slots[l]->rhs_q;
    arg += slots[l]->s_arg;
  }
  ReducedResponse out;
  out.bQ = GramSolver(std::move(gram), data.lambda).solve(rhs);
  out.bS = best_response_S_from_arg(arg, ddiag_sum, data.mu);
  return out;
}

inline LineSearchPoly reduce_poly(const std::vector<NodeShare>& shares, int num_nodes,
                                  int iter) {
  const auto slots = detail::slot_shares(shares, num_nodes, iter);
  LineSearchPoly poly{slots[0]->a, slots[0]->b, slots[0]->c, slots[0]->d};
  for (size_t l = 1; l < slots.size(); ++l) {
    poly.a += slots[l]->a;
    poly.b += slots[l]->b;
    poly.c += slots[l]->c;
    poly.d += slots[l]->d;
  }
  return poly;
}

struct DistributedStats {
  Partition partition;
  long shares_sent = 0;          // phase-1 + phase-2 messages, L per phase per iteration
  int ls_scalars_per_iter = 0;   // line-search traffic: 4 scalars per node
  int iterations = 0;            // loop passes, counting the converged probe
};

struct DistributedResult {
  FactorState state;
  std::vector<IterationTrace> trace;
  StopReason reason = StopReason::Budget;
  DistributedStats stats;
};

namespace detail {

// Runs fn(l) for every node, on max_workers threads when more than one is
// requested. Results land in per-node slots, so scheduling cannot affect
// values.
template <typename Fn>
void for_each_node(int num_nodes, unsigned max_workers, const Fn& fn) {
  if (max_workers <= 1 || num_nodes <= 1) {
    for (int l = 0; l < num_nodes; ++l) fn(l);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  const unsigned n_threads = std::min<unsigned>(max_workers, num_nodes);
  for (unsigned t = 0; t < n_threads; ++t)
    pool.emplace_back([&]() {
      for (int l = next.fetch_add(1); l < num_nodes; l = next.fetch_add(1)) fn(l);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Distributed mirror of solve(): identical control flow, with the iterate
// evaluation split across nodes and reduced at the coordinator.
inline DistributedResult distributed_solve(const ProblemData& data, const FactorState& z0,
                                           const SolverConfig& cfg, int num_nodes,
                                           unsigned max_workers = 1) {
  check_shapes(data, z0);
  cfg.validate();
  const Partition part = partition_rows(data.n(), num_nodes);
  const std::vector<NodeData> nodes = make_node_data(data, part);
  Vector ddiag_sum = nodes[0].ddiag;
  for (int l = 1; l < num_nodes; ++l) ddiag_sum += nodes[l].ddiag;

  DistributedResult res;
  res.state = z0;
  res.stats.partition = part;
  res.stats.ls_scalars_per_iter = 4 * num_nodes;

  std::vector<Matrix> P_blocks(num_nodes), R_blocks(num_nodes), bP_blocks(num_nodes);
  for (int l = 0; l < num_nodes; ++l)
    P_blocks[l] = z0.P.middleRows(part.row_ranges[l].first,
                                  part.row_ranges[l].second - part.row_ranges[l].first);

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&]() {
    if (!cfg.trace_timing) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  if (cfg.max_iters == 0) {
    res.reason = StopReason::Budget;
    return res;
  }

  struct Eval {
    std::vector<NodeShare> shares;
    double objective = 0.0;
    Gradient grad;
    BestResponse br;
    double gap = 0.0;
    double signed_gap = 0.0;
  };

  Matrix R(data.n(), data.k());
  const auto evaluate = [&](int iter) {
    Eval ev;
    IterationBroadcast bcast{iter, res.state.Q, res.state.S};
    ev.shares.resize(num_nodes);
    detail::for_each_node(num_nodes, max_workers, [&](int l) {
      ev.shares[l] = node_share_phase1(nodes[l], P_blocks[l], bcast, R_blocks[l]);
    });
    res.stats.shares_sent += num_nodes;
    for (int l = 0; l < num_nodes; ++l)
      R.middleRows(nodes[l].row_begin, nodes[l].row_end - nodes[l].row_begin) = R_blocks[l];

    ev.objective = eval_objective_from_residual(data, res.state, R);
    ev.grad = grad_f_from_residual(data, res.state, R, data.D.transpose() * R);

    ReducedResponse red = reduce_and_compute(data, ev.shares, ddiag_sum, num_nodes, iter);
    const GramSolver q_gram(res.state.Q * res.state.Q.transpose(), data.lambda);
    detail::for_each_node(num_nodes, max_workers, [&](int l) {
      bP_blocks[l] = node_best_response_P_block(nodes[l], bcast, q_gram);
    });
    ev.br.bP.resize(data.n(), data.rho);
    for (int l = 0; l < num_nodes; ++l)
      ev.br.bP.middleRows(nodes[l].row_begin, nodes[l].row_end - nodes[l].row_begin) =
          bP_blocks[l];
    ev.br.bQ = std::move(red.bQ);
    ev.br.bS = std::move(red.bS);

    ev.gap = stationarity_gap(res.state, ev.br, ev.grad);
    ev.signed_gap = descent_gap(data, res.state, ev.br, ev.grad);
    return ev;
  };

  const auto pick_gamma = [&](Eval& ev, int iter) {
    if (cfg.stepsize == StepsizeMode::Constant) return cfg.gamma0;
    IterationBroadcast bcast{iter, res.state.Q, res.state.S};
    const Matrix dQ = ev.br.bQ - res.state.Q;
    const Matrix dS = ev.br.bS - res.state.S;
    const double l1_diff = l1_norm(ev.br.bS) - l1_norm(res.state.S);
    detail::for_each_node(num_nodes, max_workers, [&](int l) {
      node_ls_share(nodes[l], P_blocks[l], bP_blocks[l], R_blocks[l], bcast, dQ, dS,
                    data.lambda, data.mu, l1_diff, num_nodes, ev.shares[l]);
    });
    res.stats.shares_sent += num_nodes;
    return exact_step(reduce_poly(ev.shares, num_nodes, iter)).gamma;
  };

  int iter = 0;
  Eval ev = evaluate(iter);
  ++res.stats.iterations;
  while (true) {
    if (ev.gap <= cfg.delta) {
      IterationTrace row;
      row.iter = iter;
      row.objective = ev.objective;
      row.stationarity = ev.gap;
      row.gamma = 0.0;
      row.elapsed_seconds = elapsed();
      row.surrogate_gap = ev.signed_gap;
      res.trace.push_back(row);
      res.reason = StopReason::Converged;
      return res;
    }
    const double gamma = pick_gamma(ev, iter);
    const double prev_gap = ev.gap;
    const double prev_signed = ev.signed_gap;
    const StepDecision decision{iter, gamma};
    detail::for_each_node(num_nodes, max_workers, [&](int l) {
      if (decision.gamma == 1.0) P_blocks[l] = bP_blocks[l];
      else P_blocks[l] = P_blocks[l] + decision.gamma * (bP_blocks[l] - P_blocks[l]);
    });
    for (int l = 0; l < num_nodes; ++l)
      res.state.P.middleRows(nodes[l].row_begin, nodes[l].row_end - nodes[l].row_begin) =
          P_blocks[l];
    if (decision.gamma == 1.0) {
      res.state.Q = ev.br.bQ;
      res.state.S = ev.br.bS;
    } else {
      res.state.Q = res.state.Q + decision.gamma * (ev.br.bQ - res.state.Q);
      res.state.S = res.state.S + decision.gamma * (ev.br.bS - res.state.S);
    }
    ++iter;
    ev = evaluate(iter);
    ++res.stats.iterations;
    IterationTrace row;
    row.iter = iter;
    row.objective = ev.objective;
    row.stationarity = prev_gap;
    row.gamma = gamma;
    row.elapsed_seconds = elapsed();
    row.surrogate_gap = prev_signed;
    res.trace.push_back(row);
    if (iter >= cfg.max_iters) {
      res.reason = StopReason::Budget;
      return res;
    }
  }
}

}  // namespace lrsd
