// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Simulated multi-node solver: row partitioning, the two message phases,
// fixed-order reductions, and agreement with the monolithic loop.

#include <algorithm>

#include <catch2/catch_amalgamated.hpp>

#include "lrsd/lrsd.hpp"
#include "oracles.hpp"

using lrsd::FactorState;
using lrsd::Matrix;
using lrsd::NodeShare;
using lrsd::Partition;
using lrsd::ProblemData;
using lrsd::Vector;

namespace {

struct PhaseOne {
  std::vector<lrsd::NodeData> nodes;
  std::vector<NodeShare> shares;
  std::vector<Matrix> R_blocks;
  Vector ddiag_sum;
};

PhaseOne run_phase1(const ProblemData& data, const FactorState& z, int num_nodes, int iter = 0) {
  PhaseOne out;
  const Partition part = lrsd::partition_rows(data.n(), num_nodes);
  out.nodes = lrsd::make_node_data(data, part);
  const lrsd::IterationBroadcast bcast{iter, z.Q, z.S};
  out.R_blocks.resize(num_nodes);
  for (int l = 0; l < num_nodes; ++l) {
    const auto [b, e] = part.row_ranges[l];
    const Matrix P_l = z.P.middleRows(b, e - b);
    out.shares.push_back(lrsd::node_share_phase1(out.nodes[l], P_l, bcast, out.R_blocks[l]));
  }
  out.ddiag_sum = out.nodes[0].ddiag;
  for (int l = 1; l < num_nodes; ++l) out.ddiag_sum += out.nodes[l].ddiag;
  return out;
}

void add_phase2(const ProblemData& data, const FactorState& z, const lrsd::BestResponse& br,
                PhaseOne& ph, int num_nodes) {
  const Partition part = lrsd::partition_rows(data.n(), num_nodes);
  const lrsd::IterationBroadcast bcast{0, z.Q, z.S};
  const Matrix dQ = br.bQ - z.Q;
  const Matrix dS = br.bS - z.S;
  const double l1_diff = lrsd::l1_norm(br.bS) - lrsd::l1_norm(z.S);
  for (int l = 0; l < num_nodes; ++l) {
    const auto [b, e] = part.row_ranges[l];
    const Matrix P_l = z.P.middleRows(b, e - b);
    const Matrix bP_l = br.bP.middleRows(b, e - b);
    lrsd::node_ls_share(ph.nodes[l], P_l, bP_l, ph.R_blocks[l], bcast, dQ, dS, data.lambda,
                        data.mu, l1_diff, num_nodes, ph.shares[l]);
  }
}

bool states_bitwise_equal(const FactorState& x, const FactorState& y) {
  return oracles::bitwise_equal(x.P, y.P) && oracles::bitwise_equal(x.Q, y.Q) &&
         oracles::bitwise_equal(x.S, y.S);
}

}  // namespace

TEST_CASE("partition_rows splits evenly") {
  SECTION("single node takes everything") {
    const Partition p = lrsd::partition_rows(10, 1);
    REQUIRE(p.row_ranges.size() == 1);
    REQUIRE(p.row_ranges[0] == std::make_pair<lrsd::Index, lrsd::Index>(0, 10));
  }

  SECTION("remainder rows go to the leading nodes") {
    const Partition p = lrsd::partition_rows(10, 3);
    REQUIRE(p.row_ranges.size() == 3);
    REQUIRE(p.row_ranges[0] == std::make_pair<lrsd::Index, lrsd::Index>(0, 4));
    REQUIRE(p.row_ranges[1] == std::make_pair<lrsd::Index, lrsd::Index>(4, 7));
    REQUIRE(p.row_ranges[2] == std::make_pair<lrsd::Index, lrsd::Index>(7, 10));
  }

  SECTION("one row per node at the limit") {
    const Partition p = lrsd::partition_rows(5, 5);
    for (int l = 0; l < 5; ++l) {
      REQUIRE(p.row_ranges[l].first == l);
      REQUIRE(p.row_ranges[l].second == l + 1);
    }
  }

  SECTION("ranges tile the row set in order") {
    const Partition p = lrsd::partition_rows(23, 4);
    lrsd::Index expect_begin = 0;
    for (const auto& [b, e] : p.row_ranges) {
      REQUIRE(b == expect_begin);
      REQUIRE(e > b);
      expect_begin = e;
    }
    REQUIRE(expect_begin == 23);
  }

  SECTION("invalid node counts are rejected") {
    REQUIRE_THROWS_AS(lrsd::partition_rows(10, 0), lrsd::ArgumentError);
    REQUIRE_THROWS_AS(lrsd::partition_rows(10, -2), lrsd::ArgumentError);
    REQUIRE_THROWS_AS(lrsd::partition_rows(4, 5), lrsd::ArgumentError);
  }
}

TEST_CASE("node data and phase-1 shares") {
  const ProblemData data = oracles::small_instance(600);
  const FactorState z = oracles::random_state(data, 600);

  SECTION("node blocks copy the owner rows and ddiag shares sum exactly") {
    const Partition part = lrsd::partition_rows(data.n(), 3);
    const auto nodes = lrsd::make_node_data(data, part);
    Vector ddiag_sum = nodes[0].ddiag;
    for (int l = 1; l < 3; ++l) {
      const auto [b, e] = part.row_ranges[l];
      REQUIRE(oracles::bitwise_equal(nodes[l].Y, Matrix(data.Y.middleRows(b, e - b))));
      REQUIRE(oracles::bitwise_equal(nodes[l].D, Matrix(data.D.middleRows(b, e - b))));
      ddiag_sum += nodes[l].ddiag;
    }
    // Entries of D are 0/1, so the partial sums of squares are integers and
    // the node total matches the monolithic diagonal with no roundoff.
    REQUIRE((ddiag_sum - data.ddiag).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("single-node shares equal the monolithic quantities bitwise") {
    PhaseOne ph = run_phase1(data, z, 1);
    const Matrix DS = data.D * z.S;
    Matrix R = z.P * z.Q + DS - data.Y;
    Matrix gram = z.P.transpose() * z.P;
    Matrix rhs_q = z.P.transpose() * (data.Y - DS);
    Matrix s_arg = data.ddiag.asDiagonal() * z.S - data.D.transpose() * R;
    REQUIRE(oracles::bitwise_equal(ph.R_blocks[0], R));
    REQUIRE(oracles::bitwise_equal(ph.shares[0].gram, gram));
    REQUIRE(oracles::bitwise_equal(ph.shares[0].rhs_q, rhs_q));
    REQUIRE(oracles::bitwise_equal(ph.shares[0].s_arg, s_arg));
  }

  SECTION("node residual blocks concatenate to the full residual") {
    PhaseOne ph = run_phase1(data, z, 4);
    const Matrix R = lrsd::residual(data, z);
    for (int l = 0; l < 4; ++l) {
      const Matrix expect = R.middleRows(ph.nodes[l].row_begin,
                                         ph.nodes[l].row_end - ph.nodes[l].row_begin);
      REQUIRE((ph.R_blocks[l] - expect).cwiseAbs().maxCoeff() <=
              1e-12 * std::max(1.0, R.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("node P best response") {
  const ProblemData data = oracles::small_instance(610);
  const FactorState z = oracles::random_state(data, 610);

  SECTION("single node reproduces the monolithic operation") {
    const Matrix whole = lrsd::best_response_P(data, z);
    const Matrix block = lrsd::node_best_response_P(data, z, lrsd::partition_rows(data.n(), 1), 0);
    REQUIRE((block - whole).cwiseAbs().maxCoeff() <=
            1e-13 * std::max(1.0, whole.cwiseAbs().maxCoeff()));
  }

  SECTION("node blocks concatenate to the monolithic response") {
    const Matrix whole = lrsd::best_response_P(data, z);
    const Partition part = lrsd::partition_rows(data.n(), 3);
    for (int l = 0; l < 3; ++l) {
      const auto [b, e] = part.row_ranges[l];
      const Matrix block = lrsd::node_best_response_P(data, z, part, l);
      REQUIRE((block - whole.middleRows(b, e - b)).cwiseAbs().maxCoeff() <=
              1e-12 * std::max(1.0, whole.cwiseAbs().maxCoeff()));
    }
  }

  SECTION("zero Q collapses every block to zero") {
    FactorState zq = z;
    zq.Q.setZero();
    const Partition part = lrsd::partition_rows(data.n(), 2);
    const Matrix block = lrsd::node_best_response_P(data, zq, part, 1);
    REQUIRE(block.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("node index out of range is rejected") {
    const Partition part = lrsd::partition_rows(data.n(), 2);
    REQUIRE_THROWS_AS(lrsd::node_best_response_P(data, z, part, 2), lrsd::ArgumentError);
    REQUIRE_THROWS_AS(lrsd::node_best_response_P(data, z, part, -1), lrsd::ArgumentError);
  }
}

TEST_CASE("phase-1 reduction") {
  const ProblemData data = oracles::small_instance(620);
  const FactorState z = oracles::random_state(data, 620);
  const lrsd::BestResponse mono = lrsd::compute_best_response(data, z);

  SECTION("single node reduction is bitwise identical to monolithic") {
    PhaseOne ph = run_phase1(data, z, 1);
    const lrsd::ReducedResponse red = lrsd::reduce_and_compute(data, ph.shares, ph.ddiag_sum, 1, 0);
    REQUIRE(oracles::bitwise_equal(red.bQ, mono.bQ));
    REQUIRE(oracles::bitwise_equal(red.bS, mono.bS));
  }

  SECTION("multi-node reductions agree with monolithic to 1e-9") {
    for (const int L : {2, 4}) {
      PhaseOne ph = run_phase1(data, z, L);
      const lrsd::ReducedResponse red =
          lrsd::reduce_and_compute(data, ph.shares, ph.ddiag_sum, L, 0);
      const double scale_q = std::max(1.0, mono.bQ.cwiseAbs().maxCoeff());
      const double scale_s = std::max(1.0, mono.bS.cwiseAbs().maxCoeff());
      REQUIRE((red.bQ - mono.bQ).cwiseAbs().maxCoeff() <= 1e-9 * scale_q);
      REQUIRE((red.bS - mono.bS).cwiseAbs().maxCoeff() <= 1e-9 * scale_s);
    }
  }

  SECTION("arrival order cannot change the reduction") {
    PhaseOne ph = run_phase1(data, z, 4);
    const lrsd::ReducedResponse in_order = lrsd::reduce_and_compute(data, ph.shares, ph.ddiag_sum, 4, 0);
    std::vector<NodeShare> shuffled = ph.shares;
    std::swap(shuffled[0], shuffled[3]);
    std::swap(shuffled[1], shuffled[2]);
    const lrsd::ReducedResponse out_of_order =
        lrsd::reduce_and_compute(data, shuffled, ph.ddiag_sum, 4, 0);
    REQUIRE(oracles::bitwise_equal(in_order.bQ, out_of_order.bQ));
    REQUIRE(oracles::bitwise_equal(in_order.bS, out_of_order.bS));
  }

  SECTION("malformed share sets are protocol errors") {
    PhaseOne ph = run_phase1(data, z, 3);
    std::vector<NodeShare> missing(ph.shares.begin(), ph.shares.end() - 1);
    REQUIRE_THROWS_AS(lrsd::reduce_and_compute(data, missing, ph.ddiag_sum, 3, 0),
                      lrsd::ProtocolError);

    std::vector<NodeShare> duplicated = ph.shares;
    duplicated[2].node = 0;
    REQUIRE_THROWS_AS(lrsd::reduce_and_compute(data, duplicated, ph.ddiag_sum, 3, 0),
                      lrsd::ProtocolError);

    std::vector<NodeShare> stale = ph.shares;
    stale[1].iter = 7;
    REQUIRE_THROWS_AS(lrsd::reduce_and_compute(data, stale, ph.ddiag_sum, 3, 0),
                      lrsd::ProtocolError);

    std::vector<NodeShare> alien = ph.shares;
    alien[0].node = 5;
    REQUIRE_THROWS_AS(lrsd::reduce_and_compute(data, alien, ph.ddiag_sum, 3, 0),
                      lrsd::ProtocolError);
  }
}

TEST_CASE("phase-2 line-search shares") {
  const ProblemData data = oracles::small_instance(630);
  const FactorState z = oracles::random_state(data, 630);
  const lrsd::BestResponse br = lrsd::compute_best_response(data, z);
  const lrsd::LineSearchPoly mono = lrsd::ls_coefficients(data, z, br);

  SECTION("single-node share carries the monolithic coefficients bitwise") {
    PhaseOne ph = run_phase1(data, z, 1);
    add_phase2(data, z, br, ph, 1);
    const lrsd::LineSearchPoly red = lrsd::reduce_poly(ph.shares, 1, 0);
    REQUIRE(red.a == mono.a);
    REQUIRE(red.b == mono.b);
    REQUIRE(red.c == mono.c);
    REQUIRE(red.d == mono.d);
  }

  SECTION("multi-node sums match the monolithic coefficients to 1e-9") {
    for (const int L : {2, 4}) {
      PhaseOne ph = run_phase1(data, z, L);
      add_phase2(data, z, br, ph, L);
      const lrsd::LineSearchPoly red = lrsd::reduce_poly(ph.shares, L, 0);
      const double scale = std::max({1.0, std::abs(mono.a), std::abs(mono.b), std::abs(mono.c),
                                     std::abs(mono.d)});
      REQUIRE(std::abs(red.a - mono.a) <= 1e-9 * scale);
      REQUIRE(std::abs(red.b - mono.b) <= 1e-9 * scale);
      REQUIRE(std::abs(red.c - mono.c) <= 1e-9 * scale);
      REQUIRE(std::abs(red.d - mono.d) <= 1e-9 * scale);
      const double g_mono = lrsd::exact_step(mono).gamma;
      const double g_red = lrsd::exact_step(red).gamma;
      REQUIRE(std::abs(g_red - g_mono) <= 1e-9 * std::max(1.0, std::abs(g_mono)));
    }
  }

  SECTION("share order is irrelevant for the reduced polynomial") {
    PhaseOne ph = run_phase1(data, z, 4);
    add_phase2(data, z, br, ph, 4);
    std::vector<NodeShare> reversed(ph.shares.rbegin(), ph.shares.rend());
    const lrsd::LineSearchPoly a = lrsd::reduce_poly(ph.shares, 4, 0);
    const lrsd::LineSearchPoly b = lrsd::reduce_poly(reversed, 4, 0);
    REQUIRE(a.a == b.a);
    REQUIRE(a.b == b.b);
    REQUIRE(a.c == b.c);
    REQUIRE(a.d == b.d);
  }
}

TEST_CASE("distributed_solve mirrors the monolithic loop") {
  const ProblemData data = oracles::small_instance(640);
  const FactorState z0 = oracles::random_state(data, 640);
  lrsd::SolverConfig cfg;
  cfg.trace_timing = false;
  cfg.delta = 0.0;
  cfg.max_iters = 120;

  SECTION("single node run is bitwise identical to solve()") {
    const lrsd::SolveResult mono = lrsd::solve(data, z0, cfg);
    const lrsd::DistributedResult dist = lrsd::distributed_solve(data, z0, cfg, 1);
    REQUIRE(dist.reason == mono.reason);
    REQUIRE(dist.trace.size() == mono.trace.size());
    for (std::size_t i = 0; i < mono.trace.size(); ++i) {
      REQUIRE(dist.trace[i].objective == mono.trace[i].objective);
      REQUIRE(dist.trace[i].stationarity == mono.trace[i].stationarity);
      REQUIRE(dist.trace[i].gamma == mono.trace[i].gamma);
      REQUIRE(dist.trace[i].surrogate_gap == mono.trace[i].surrogate_gap);
    }
    REQUIRE(states_bitwise_equal(dist.state, mono.state));
  }

  SECTION("multi-node traces agree with monolithic to 1e-9") {
    const lrsd::SolveResult mono = lrsd::solve(data, z0, cfg);
    for (const int L : {2, 4}) {
      const lrsd::DistributedResult dist = lrsd::distributed_solve(data, z0, cfg, L);
      REQUIRE(dist.trace.size() == mono.trace.size());
      for (std::size_t i = 0; i < mono.trace.size(); ++i) {
        const double scale = std::max(1.0, std::abs(mono.trace[i].objective));
        REQUIRE(std::abs(dist.trace[i].objective - mono.trace[i].objective) <= 1e-9 * scale);
        // The runs evolve separately, so iterates drift apart at roundoff
        // level; near stationarity the candidate tie-break can then flip the
        // chosen step discretely, so step sizes are only compared lockstep
        // at a shared iterate (see the phase-2 test and the section below).
        REQUIRE(dist.trace[i].gamma >= 0.0);
        REQUIRE(dist.trace[i].gamma <= 1.0);
      }
    }
  }

  SECTION("lockstep step sizes agree along the monolithic trajectory") {
    // Walk the monolithic trajectory; at every visited iterate compare the
    // reduced line-search polynomial and the resulting step against the
    // monolithic ones computed from the same state.
    FactorState z = z0;
    lrsd::SolverConfig one = cfg;
    one.max_iters = 1;
    for (int it = 0; it < 30; ++it) {
      const lrsd::BestResponse br = lrsd::compute_best_response(data, z);
      const lrsd::LineSearchPoly mono = lrsd::ls_coefficients(data, z, br);
      const double g_mono = lrsd::exact_step(mono).gamma;
      for (const int L : {2, 4}) {
        PhaseOne ph = run_phase1(data, z, L);
        add_phase2(data, z, br, ph, L);
        const double g_dist = lrsd::exact_step(lrsd::reduce_poly(ph.shares, L, 0)).gamma;
        REQUIRE(std::abs(g_dist - g_mono) <= 1e-9 * std::max(1.0, std::abs(g_mono)));
      }
      z = lrsd::solve(data, z, one).state;
    }
  }

  SECTION("converged endpoints match to 1e-8 across node counts") {
    lrsd::SolverConfig probe = cfg;
    probe.max_iters = 300;
    const lrsd::SolveResult long_run = lrsd::solve(data, z0, probe);
    lrsd::SolverConfig conv = cfg;
    conv.delta = long_run.trace[100].stationarity;
    conv.max_iters = 400;
    const lrsd::SolveResult mono = lrsd::solve(data, z0, conv);
    REQUIRE(mono.reason == lrsd::StopReason::Converged);
    for (const int L : {1, 2, 4}) {
      const lrsd::DistributedResult dist = lrsd::distributed_solve(data, z0, conv, L);
      REQUIRE(dist.reason == lrsd::StopReason::Converged);
      const double scale = std::max(1.0, std::abs(mono.trace.back().objective));
      REQUIRE(std::abs(dist.trace.back().objective - mono.trace.back().objective) <=
              1e-8 * scale);
    }
  }

  SECTION("message accounting matches the protocol") {
    lrsd::SolverConfig budget = cfg;
    budget.max_iters = 15;
    for (const int L : {1, 3}) {
      const lrsd::DistributedResult dist = lrsd::distributed_solve(data, z0, budget, L);
      REQUIRE(dist.stats.ls_scalars_per_iter == 4 * L);
      REQUIRE(dist.stats.partition.num_nodes == L);
      // 15 updates: 16 evaluations (phase 1) and 15 step decisions (phase 2).
      REQUIRE(dist.stats.iterations == 16);
      REQUIRE(dist.stats.shares_sent == static_cast<long>(31 * L));
    }
  }

  SECTION("worker threads cannot change the result") {
    const lrsd::DistributedResult serial = lrsd::distributed_solve(data, z0, cfg, 4, 1);
    const lrsd::DistributedResult threaded = lrsd::distributed_solve(data, z0, cfg, 4, 4);
    REQUIRE(serial.trace.size() == threaded.trace.size());
    for (std::size_t i = 0; i < serial.trace.size(); ++i) {
      REQUIRE(serial.trace[i].objective == threaded.trace[i].objective);
      REQUIRE(serial.trace[i].gamma == threaded.trace[i].gamma);
    }
    REQUIRE(states_bitwise_equal(serial.state, threaded.state));
  }

  SECTION("zero budget returns the start untouched") {
    lrsd::SolverConfig zero = cfg;
    zero.max_iters = 0;
    const lrsd::DistributedResult dist = lrsd::distributed_solve(data, z0, zero, 2);
    REQUIRE(dist.reason == lrsd::StopReason::Budget);
    REQUIRE(dist.trace.empty());
    REQUIRE(states_bitwise_equal(dist.state, z0));
  }

  SECTION("more nodes than rows is rejected") {
    REQUIRE_THROWS_AS(lrsd::distributed_solve(data, z0, cfg, 1000), lrsd::ArgumentError);
  }
}
