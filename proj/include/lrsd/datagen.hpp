// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic instance generator: Y = P*Q + D*S + V with a binary dictionary D,
// ternary sparse S, Gaussian factors, and Gaussian noise. Regularization
// weights follow the scaling rule lambda = r*||Y||_2 (spectral norm) and
// mu = r*max_ik |(D^T Y)_ik|.
#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "lrsd/common.hpp"
#include "lrsd/problem.hpp"
#include "lrsd/rng.hpp"

namespace lrsd {

struct SpectralNormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = true;
};

// Largest singular value by power iteration on M^T M, started from the
// column-norm profile. If the start vector is (numerically) orthogonal to
// the leading subspace the iteration restarts from cycling basis vectors.
inline SpectralNormResult spectral_norm_detailed(const Matrix& M, double tol = 1e-10,
                                                 int max_iters = 10000) {
  if (M.rows() < 1 || M.cols() < 1) throw ArgumentError("spectral_norm: empty matrix");
  require_finite(M, "spectral_norm: M");
  SpectralNormResult res;
  if (M.norm() == 0.0) return res;

  Vector v = M.colwise().norm().transpose();
  v /= v.norm();
  double sigma_prev = -1.0;
  Index restart = 0;
  for (int it = 1; it <= max_iters; ++it) {
    res.iterations = it;
    const Vector w = M * v;
    const double sigma = w.norm();
    if (std::abs(sigma - sigma_prev) <= tol * std::max(1.0, sigma)) {
      res.value = sigma;
      return res;
    }
    sigma_prev = sigma;
    res.value = sigma;
    Vector u = M.transpose() * w;
    const double un = u.norm();
    if (un <= 1e-300) {
      v = Vector::Unit(M.cols(), restart % M.cols());
      ++restart;
      sigma_prev = -1.0;
      continue;
    }
    v = u / un;
  }
  res.converged = false;
  return res;
}

inline double spectral_norm(const Matrix& M) {
  const SpectralNormResult res = spectral_norm_detailed(M);
  if (!res.converged)
    std::cerr << "warning: spectral norm power iteration did not converge after "
              << res.iterations << " iterations; using best estimate " << res.value << "\n";
  return res.value;
}

struct GenSpec {
  Index N = 106;
  Index K = 380;
  Index I = 380;
  Index rho_true = 3;
  double noise_var = 0.01;
  double p_anomaly = 0.05;  // P(S = -1) = P(S = +1)
  std::optional<double> factor_var_p;  // default 100/I
  std::optional<double> factor_var_q;  // default 100/K
  double d_density = 0.5;  // P(D = 1)
  double r = 0.5;          // regularization scale
  std::uint64_t seed = 0;

  void validate() const {
    if (N < 1) throw ArgumentError("GenSpec: N must be >= 1");
    if (K < 1) throw ArgumentError("GenSpec: K must be >= 1");
    if (I < 1) throw ArgumentError("GenSpec: I must be >= 1");
    if (rho_true < 1 || rho_true > std::min(N, K))
      throw ArgumentError("GenSpec: rho_true must satisfy 1 <= rho_true <= min(N, K)");
    if (!(noise_var >= 0.0)) throw ArgumentError("GenSpec: noise_var must be >= 0");
    if (!(p_anomaly >= 0.0 && p_anomaly < 0.5))
      throw ArgumentError("GenSpec: p_anomaly must be in [0, 0.5)");
    if (factor_var_p && !(*factor_var_p > 0.0))
      throw ArgumentError("GenSpec: factor_var_p must be > 0");
    if (factor_var_q && !(*factor_var_q > 0.0))
      throw ArgumentError("GenSpec: factor_var_q must be > 0");
    if (!(d_density > 0.0 && d_density <= 1.0))
      throw ArgumentError("GenSpec: d_density must be in (0, 1]");
    if (!(r > 0.0)) throw ArgumentError("GenSpec: r must be > 0");
  }
};

struct GeneratedInstance {
  ProblemData data;
  Matrix truth_P;  // N x rho_true
  Matrix truth_Q;  // rho_true x K
  Matrix truth_S;  // I x K
  Matrix noise;    // N x K, Y = truth_P*truth_Q + D*truth_S + noise exactly
};

// Deterministic in the seed: each matrix draws from its own counter stream,
// so e.g. resampling a zero column of D never shifts the other matrices.
inline GeneratedInstance generate(const GenSpec& spec) {
  spec.validate();
  const Index N = spec.N, K = spec.K, I = spec.I;

  CounterRng rng_d(spec.seed, 1);
  Matrix D(N, I);
  for (Index j = 0; j < I; ++j) {
    bool nonzero = false;
    for (int attempt = 0; attempt < 1000 && !nonzero; ++attempt) {
      for (Index i = 0; i < N; ++i) {
        D(i, j) = rng_d.bernoulli(spec.d_density) ? 1.0 : 0.0;
        if (D(i, j) != 0.0) nonzero = true;
      }
    }
    if (!nonzero)
      throw NumericError("generate: column " + std::to_string(j) +
                         " of D stayed zero after 1000 attempts");
  }

  const double std_p = std::sqrt(spec.factor_var_p.value_or(100.0 / static_cast<double>(I)));
  const double std_q = std::sqrt(spec.factor_var_q.value_or(100.0 / static_cast<double>(K)));

  CounterRng rng_p(spec.seed, 2);
  Matrix P(N, spec.rho_true);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < spec.rho_true; ++j) P(i, j) = rng_p.normal(0.0, std_p);

  CounterRng rng_q(spec.seed, 3);
  Matrix Q(spec.rho_true, K);
  for (Index i = 0; i < spec.rho_true; ++i)
    for (Index j = 0; j < K; ++j) Q(i, j) = rng_q.normal(0.0, std_q);

  CounterRng rng_s(spec.seed, 4);
  Matrix S(I, K);
  for (Index i = 0; i < I; ++i)
    for (Index j = 0; j < K; ++j) {
      const double u = rng_s.uniform01();
      if (u <= spec.p_anomaly) S(i, j) = -1.0;
      else if (u > 1.0 - spec.p_anomaly) S(i, j) = 1.0;
      else S(i, j) = 0.0;
    }

  CounterRng rng_v(spec.seed, 5);
  const double std_v = std::sqrt(spec.noise_var);
  Matrix V(N, K);
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < K; ++j) V(i, j) = rng_v.normal(0.0, std_v);

  const Matrix Y = P * Q + D * S + V;
  const double lambda = spec.r * spectral_norm(Y);
  const double mu = spec.r * (D.transpose() * Y).cwiseAbs().maxCoeff();

  return GeneratedInstance{ProblemData(Y, D, lambda, mu, spec.rho_true),
                           std::move(P), std::move(Q), std::move(S), std::move(V)};
}

}  // namespace lrsd
