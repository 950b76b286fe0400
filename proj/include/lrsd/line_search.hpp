// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Exact line search along the best-response direction. The smooth objective
// restricted to Z + gamma*(BZ - Z), plus the linear upper bound on the
// regularizer difference, is the quartic
//
//   phi(gamma) = (a/4) g^4 + (b/3) g^3 + (c/2) g^2 + d g   (up to a constant)
//
// whose minimizer over [0,1] is found by scanning the real roots of
// phi' = a g^3 + b g^2 + c g + d together with the endpoints.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "lrsd/best_response.hpp"
#include "lrsd/common.hpp"
#include "lrsd/problem.hpp"

namespace lrsd {

struct LineSearchPoly {
  double a = 0.0;  // 2 ||dP dQ||_F^2
  double b = 0.0;  // 3 <dP dQ, W>
  double c = 0.0;  // 2 <dP dQ, R> + ||W||^2 + lambda(||dP||^2 + ||dQ||^2)
  double d = 0.0;  // <W, R> + lambda(<P,dP> + <Q,dQ>) + mu(||bS||_1 - ||S||_1)
};

struct StepSize {
  double gamma = 0.0;
  std::vector<double> candidates;  // stationary points of phi examined in [0,1]
  double surrogate_drop = 0.0;     // phi(gamma) - phi(0) <= 0
};

struct CubicRoots {
  std::vector<double> roots;      // real roots, ascending, deduplicated
  bool identically_zero = false;  // all four coefficients were exactly zero
};

inline double phi_value(const LineSearchPoly& p, double g) {
  return g * (p.d + g * (0.5 * p.c + g * (p.b / 3.0 + g * (0.25 * p.a))));
}

namespace detail {

inline double cubic_eval(double a, double b, double c, double d, double x) {
  return d + x * (c + x * (b + x * a));
}

// Two Newton corrections against the original coefficients sharpen roots
// produced by the closed forms, which lose accuracy near multiple roots.
// Corrections larger than the root's own scale are rejected: near a double
// root the derivative underflows before the value does and the quotient can
// shoot off arbitrarily far.
inline double polish_root(double a, double b, double c, double d, double x) {
  for (int it = 0; it < 2; ++it) {
    const double fx = cubic_eval(a, b, c, d, x);
    const double dfx = c + x * (2.0 * b + x * (3.0 * a));
    if (dfx == 0.0 || !std::isfinite(fx) || !std::isfinite(dfx)) break;
    const double step = fx / dfx;
    if (!std::isfinite(step) || std::abs(step) > 0.5 * (1.0 + std::abs(x))) break;
    x -= step;
  }
  return x;
}

inline void sort_dedup(std::vector<double>& roots) {
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots) {
    if (!out.empty() && std::abs(r - out.back()) <= 1e-12 * std::max(1.0, std::abs(r)))
      continue;
    out.push_back(r);
  }
  roots.swap(out);
}

}  // namespace detail

// Real roots of a3 x^3 + b3 x^2 + c3 x + d3 = 0. Leading zero coefficients
// fall through to the quadratic / linear / constant cases; the all-zero
// polynomial is reported through identically_zero instead of roots.
inline CubicRoots cubic_real_roots(double a3, double b3, double c3, double d3) {
  if (!std::isfinite(a3) || !std::isfinite(b3) || !std::isfinite(c3) || !std::isfinite(d3))
    throw NumericError("cubic_real_roots: non-finite coefficients");
  CubicRoots out;
  if (a3 == 0.0 && b3 == 0.0 && c3 == 0.0 && d3 == 0.0) {
    out.identically_zero = true;
    return out;
  }
  if (a3 == 0.0) {
    if (b3 == 0.0) {
      if (c3 == 0.0) return out;  // nonzero constant: no roots
      out.roots.push_back(-d3 / c3);
      return out;
    }
    const double disc = c3 * c3 - 4.0 * b3 * d3;
    // Classify against the roundoff floor of the two discriminant terms:
    // exact double roots often yield a tiny nonzero disc after cancellation.
    const double dtol = 1e-14 * (c3 * c3 + std::abs(4.0 * b3 * d3));
    if (disc < -dtol) return out;
    if (disc <= dtol) {
      out.roots.push_back(-c3 / (2.0 * b3));
      return out;
    }
    // q-form quadratic roots avoid cancellation between -c3 and sqrt(disc).
    const double sq = std::sqrt(disc);
    const double qq = -0.5 * (c3 + (c3 >= 0.0 ? sq : -sq));
    out.roots.push_back(qq / b3);
    if (qq != 0.0) out.roots.push_back(d3 / qq);
    else out.roots.push_back(0.0);
    detail::sort_dedup(out.roots);
    return out;
  }

  // Depressed form t^3 + p t + q with x = t - b/(3a).
  const double bn = b3 / a3, cn = c3 / a3, dn = d3 / a3;
  const double shift = bn / 3.0;
  const double p = cn - bn * bn / 3.0;
  const double q = 2.0 * bn * bn * bn / 27.0 - bn * cn / 3.0 + dn;
  const double half_q = 0.5 * q, third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;
  // Repeated roots make disc cancel to zero only up to roundoff in the two
  // terms, so classify within their combined magnitude instead of exactly.
  const double dtol = 1e-14 * (half_q * half_q + std::abs(third_p * third_p * third_p));

  std::vector<double>& roots = out.roots;
  if (disc > dtol) {
    // One real root; pair the cube roots through A*B = -(p/3)^3 to avoid
    // cancellation when |A| and |B| are close.
    const double sq = std::sqrt(disc);
    const double A = -half_q + sq, B = -half_q - sq;
    double t;
    if (std::abs(A) >= std::abs(B)) {
      const double u = std::cbrt(A);
      t = (u == 0.0) ? std::cbrt(B) : u - third_p / u;
    } else {
      const double v = std::cbrt(B);
      t = (v == 0.0) ? std::cbrt(A) : v - third_p / v;
    }
    roots.push_back(t - shift);
  } else if (disc >= -dtol) {
    if (p == 0.0) {
      roots.push_back(-shift);  // triple root
    } else {
      const double u = 3.0 * q / p;  // simple root t = 3q/p, double root t = -3q/2p
      roots.push_back(u - shift);
      roots.push_back(-0.5 * u - shift);
    }
  } else {
    // Three distinct real roots via the trigonometric form.
    const double m = 2.0 * std::sqrt(-third_p);
    double cosarg = 3.0 * q / (p * m);
    cosarg = std::clamp(cosarg, -1.0, 1.0);
    const double theta = std::acos(cosarg);
    for (int k = 0; k < 3; ++k)
      roots.push_back(m * std::cos((theta - 2.0 * M_PI * k) / 3.0) - shift);
  }
  for (double& r : roots) r = detail::polish_root(a3, b3, c3, d3, r);
  detail::sort_dedup(roots);
  return out;
}

namespace detail {

// Closed-form stationary point of the quartic via its depressed cubic: for
// one real root it is cbrt(S1 + sqrt(S1^2 + S2^3)) + cbrt(S1 - sqrt(...)) -
// b/3a; for three real roots the smallest nonnegative branch value is taken.
// Returns nullopt when a <= 0 or no branch value is nonnegative.
inline std::optional<double> cardano_gamma(const LineSearchPoly& poly) {
  const double a = poly.a, b = poly.b, c = poly.c, d = poly.d;
  if (!(a > 0.0)) return std::nullopt;
  const double s1 = -std::pow(b / (3.0 * a), 3) + b * c / (6.0 * a * a) - d / (2.0 * a);
  const double s2 = c / (3.0 * a) - (b / (3.0 * a)) * (b / (3.0 * a));
  const double shift = b / (3.0 * a);
  const double disc = s1 * s1 + s2 * s2 * s2;
  std::vector<double> values;
  if (disc >= 0.0) {
    // cbrt(A) + cbrt(B) with A*B = -s2^3: evaluate the larger cube root and
    // recover the other as -s2/u to avoid cancellation.
    const double sq = std::sqrt(disc);
    const double A = s1 + sq, B = s1 - sq;
    double t;
    if (std::abs(A) >= std::abs(B)) {
      const double u = std::cbrt(A);
      t = (u == 0.0) ? std::cbrt(B) : u - s2 / u;
    } else {
      const double v = std::cbrt(B);
      t = (v == 0.0) ? std::cbrt(A) : v - s2 / v;
    }
    values.push_back(t - shift);
  } else {
    const double m = 2.0 * std::sqrt(-s2);
    double cosarg = s1 / std::sqrt(-s2 * s2 * s2);
    cosarg = std::clamp(cosarg, -1.0, 1.0);
    const double theta = std::acos(cosarg);
    for (int k = 0; k < 3; ++k)
      values.push_back(m * std::cos((theta - 2.0 * M_PI * k) / 3.0) - shift);
  }
  std::optional<double> best;
  for (double v : values)
    if (v >= 0.0 && (!best || v < *best)) best = v;
  return best;
}

}  // namespace detail

// Minimizer of phi over [0,1] by candidate scan: endpoints plus every real
// root of phi' inside the interval. Ties within 1e-12 in phi go to the
// smallest gamma. When the scan minimizer is interior, unique, and d < 0,
// the clamped closed-form expression provably attains the same phi value;
// that agreement is asserted to 1e-10 as a numerical cross-check.
inline StepSize exact_step(const LineSearchPoly& poly) {
  if (!std::isfinite(poly.a) || !std::isfinite(poly.b) || !std::isfinite(poly.c) ||
      !std::isfinite(poly.d))
    throw NumericError("exact_step: non-finite coefficients");
  StepSize out;
  const CubicRoots deriv = cubic_real_roots(poly.a, poly.b, poly.c, poly.d);
  if (deriv.identically_zero) {
    out.gamma = 0.0;
    out.candidates = {0.0};
    out.surrogate_drop = 0.0;
    return out;
  }
  for (double r : deriv.roots)
    if (r >= 0.0 && r <= 1.0) out.candidates.push_back(r);

  std::vector<std::pair<double, double>> scan;  // (gamma, phi)
  scan.emplace_back(0.0, 0.0);                  // phi(0) = 0
  scan.emplace_back(1.0, phi_value(poly, 1.0));
  for (double g : out.candidates) scan.emplace_back(g, phi_value(poly, g));
  double phi_min = scan.front().second;
  for (const auto& [g, v] : scan) phi_min = std::min(phi_min, v);
  // Ties within 1e-12 in phi go to the smallest gamma.
  double best_g = 2.0;
  for (const auto& [g, v] : scan)
    if (v <= phi_min + 1e-12 && g < best_g) best_g = g;
  out.gamma = best_g;
  out.surrogate_drop = phi_value(poly, best_g);

  int interior_roots = 0;
  for (double r : deriv.roots)
    if (r > 0.0 && r < 1.0) ++interior_roots;
  if (poly.a > 0.0 && poly.d < 0.0 && best_g > 0.0 && best_g < 1.0 &&
      interior_roots == 1) {
    const std::optional<double> cg = detail::cardano_gamma(poly);
    if (cg) {
      const double clamped = std::clamp(*cg, 0.0, 1.0);
      const double diff = std::abs(phi_value(poly, clamped) - out.surrogate_drop);
      if (!(diff <= 1e-10 * std::max(1.0, std::abs(out.surrogate_drop))))
        throw NumericError("exact_step: closed-form step disagrees with candidate scan");
    }
  }
  return out;
}

// Quartic coefficients from precomputed residual R = P*Q + D*S - Y. Terms are
// accumulated in a fixed flat order; the distributed per-node shares use the
// same order so single-node runs reproduce these values bit for bit.
inline LineSearchPoly ls_coefficients_from_residual(const ProblemData& data,
                                                    const FactorState& z,
                                                    const BestResponse& br, const Matrix& R) {
  const Matrix dP = br.bP - z.P;
  const Matrix dQ = br.bQ - z.Q;
  const Matrix dS = br.bS - z.S;
  const Matrix U = dP * dQ;
  const Matrix W = z.P * dQ + dP * z.Q + data.D * dS;
  LineSearchPoly poly;
  poly.a = 2.0 * U.squaredNorm();
  poly.b = 3.0 * fdot(U, W);
  poly.c = 2.0 * fdot(U, R) + W.squaredNorm() + data.lambda * dP.squaredNorm() +
           data.lambda * dQ.squaredNorm();
  poly.d = fdot(W, R) + data.lambda * fdot(z.P, dP) + data.lambda * fdot(z.Q, dQ) +
           data.mu * (l1_norm(br.bS) - l1_norm(z.S));
  return poly;
}

inline LineSearchPoly ls_coefficients(const ProblemData& data, const FactorState& z,
                                      const BestResponse& br) {
  check_shapes(data, z);
  return ls_coefficients_from_residual(data, z, br, residual(data, z));
}

inline StepSize step(const ProblemData& data, const FactorState& z, const BestResponse& br) {
  return exact_step(ls_coefficients(data, z, br));
}

}  // namespace lrsd
