// Copyright 2026 The mgdrec Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Weights of the common descent vector: the minimum-norm point in the convex
// hull of the objective gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mgdrec/errors.hpp"
#include "mgdrec/moo_core.hpp"

namespace mgdrec {

/// Denominators at or below this are treated as zero.
inline constexpr double kDegenerateLoss = 1e-12;
inline constexpr double kDegenerateGap = 1e-18;

struct GradientBundle {
  std::vector<Vector> grads;
  std::vector<double> initial_losses;

  std::size_t size() const { return grads.size(); }
  Eigen::Index dimension() const { return grads.empty() ? 0 : grads.front().size(); }

  void validate() const {
    require(!grads.empty(), "GradientBundle: empty");
    require(grads.front().size() >= 1, "GradientBundle: zero-length gradients");
    for (const auto& g : grads) {
      require(g.size() == grads.front().size(), "GradientBundle: gradient length mismatch");
    }
    require(initial_losses.empty() || initial_losses.size() == grads.size(),
            "GradientBundle: one initial loss per gradient required");
    for (double l : initial_losses) require(std::isfinite(l), "GradientBundle: non-finite initial loss");
  }
};

struct NormalizedGradient {
  Vector gradient;
  bool degenerate = false;  // initial loss was ~0 and the gradient was passed through
};

/// Divides a gradient by the objective's empirical maximum (initial) loss.
inline NormalizedGradient normalize_gradient(const Vector& g, double initial_loss) {
  require(g.allFinite(), "normalize_gradient: non-finite gradient");
  require(std::isfinite(initial_loss), "normalize_gradient: non-finite initial loss");
  if (initial_loss <= kDegenerateLoss) return {g, true};
  return {g / initial_loss, false};
}

/// Closed-form minimizer of ||a*g1 + (1-a)*g2||^2 over a in [0,1].
/// Returns (a, 1-a); equal gradients give (0.5, 0.5).
inline AlphaVector alpha_two(const Vector& g1, const Vector& g2) {
  require(g1.size() == g2.size(), "alpha_two: length mismatch");
  require(g1.allFinite() && g2.allFinite(), "alpha_two: non-finite gradient");
  const double denom = (g1 - g2).squaredNorm();
  if (denom <= kDegenerateGap) return AlphaVector({0.5, 0.5});
  const double a = std::clamp((g2 - g1).dot(g2) / denom, 0.0, 1.0);
  return AlphaVector({a, 1.0 - a});
}

struct QcopDiagnostics {
  int iterations = 0;
  double gap = 0.0;      // Frank-Wolfe duality gap at the returned iterate
  double norm_sq = 0.0;  // ||sum alpha_i g_i||^2 at the returned iterate
  bool converged = false;
};

struct QcopResult {
  AlphaVector alphas;
  QcopDiagnostics diagnostics;
};

namespace detail {

inline Eigen::MatrixXd gram(std::span<const Vector> grads) {
  const auto n = static_cast<Eigen::Index>(grads.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      m(i, j) = m(j, i) = grads[static_cast<std::size_t>(i)].dot(grads[static_cast<std::size_t>(j)]);
    }
  }
  return m;
}

inline AlphaVector to_simplex(const Eigen::VectorXd& x) {
  std::vector<double> v(static_cast<std::size_t>(x.size()));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    v[static_cast<std::size_t>(i)] = std::max(0.0, x(i));
    sum += v[static_cast<std::size_t>(i)];
  }
  for (double& a : v) a /= sum;
  return AlphaVector(std::move(v));
}

/// Exact minimizer of a^T M a over {sum a = 1, a_i = 0 off the support},
/// obtained from the KKT system. Entries that come out non-positive leave the
/// support and the system is solved again. Returns nothing if the support
/// empties or the result fails the optimality check against every vertex.
inline std::optional<Eigen::VectorXd> polish(const Eigen::MatrixXd& m, const Eigen::VectorXd& alpha, double tol) {
  const auto n = m.rows();
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (alpha(i) > 0.0) support.push_back(i);
  }
  while (!support.empty()) {
    const auto k = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = m(support[a], support[b]);
      kkt(a, k) = kkt(k, a) = 1.0;
    }
    rhs(k) = 1.0;
    const Eigen::VectorXd x = kkt.completeOrthogonalDecomposition().solve(rhs);
    if (!x.allFinite()) return std::nullopt;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (x(a) > 0.0) kept.push_back(support[a]);
    }
    if (kept.size() < support.size()) {
      support = std::move(kept);
      continue;
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < k; ++a) out(support[a]) = x(a);
    out /= out.sum();
    const Eigen::VectorXd m_out = m * out;
    const double norm_sq = out.dot(m_out);
    if (norm_sq - m_out.minCoeff() > tol) return std::nullopt;
    return out;
  }
  return std::nullopt;
}

}  // namespace detail

/// Frank-Wolfe minimum-norm-point solver over the simplex, with away steps.
///
/// Works on the n x n Gram matrix. A toward step moves to the vertex g_t with
/// the smallest inner product against the current combination v; an away step
/// moves mass off the active vertex with the largest one, whichever has the
/// larger gap. Step sizes come from the exact line search (for a toward step
/// this is the alpha_two formula applied to (v, g_t)). Stops when the
/// Frank-Wolfe duality gap or the per-step improvement in ||v||^2 drops below
/// `tol`; otherwise returns the last iterate flagged as not converged.
inline QcopResult solve_qcop(std::span<const Vector> grads, double tol = 1e-9, int max_iters = 250) {
  require(grads.size() >= 2, "solve_qcop: at least two gradients required");
  for (const auto& g : grads) {
    require(g.size() == grads.front().size(), "solve_qcop: gradient length mismatch");
    require(g.allFinite(), "solve_qcop: non-finite gradient");
  }
  require(tol > 0.0 && max_iters >= 1, "solve_qcop: invalid tolerance or iteration budget");

  const Eigen::MatrixXd m = detail::gram(grads);
  const auto n = m.rows();
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd m_alpha = m * alpha;  // g_i . v for every i
  double norm_sq = alpha.dot(m_alpha);

  QcopDiagnostics diag;
  for (int it = 0; it < max_iters; ++it) {
    diag.iterations = it + 1;
    Eigen::Index toward = 0;
    m_alpha.minCoeff(&toward);
    Eigen::Index away = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (alpha(i) > 0.0 && (away < 0 || m_alpha(i) > m_alpha(away))) away = i;
    }
    const double fw_gap = norm_sq - m_alpha(toward);
    const double away_gap = m_alpha(away) - norm_sq;
    if (fw_gap <= tol) {
      diag.converged = true;
      break;
    }

    // Direction d in alpha space; v moves by G^T d.
    Eigen::VectorXd d;
    double max_step = 1.0;
    if (fw_gap >= away_gap || alpha(away) >= 1.0) {
      d = -alpha;
      d(toward) += 1.0;
    } else {
      d = alpha;
      d(away) -= 1.0;
      max_step = alpha(away) / (1.0 - alpha(away));
    }
    const Eigen::VectorXd m_d = m * d;
    const double curvature = d.dot(m_d);
    if (curvature <= kDegenerateGap) {
      diag.converged = true;
      break;
    }
    const double step = std::clamp(-d.dot(m_alpha) / curvature, 0.0, max_step);
    alpha += step * d;
    if (step == max_step && max_step < 1.0) alpha(away) = 0.0;  // drop step
    m_alpha += step * m_d;
    const double next = alpha.dot(m_alpha);
    const double improvement = norm_sq - next;
    norm_sq = next;
    if (improvement < tol && step < max_step) {
      diag.converged = true;
      break;
    }
  }
  // Finish on the active face exactly; keeps alpha a smooth function of the
  // gradients instead of depending on where the iteration happened to stop.
  if (diag.converged) {
    if (auto exact = detail::polish(m, alpha, tol)) {
      const Eigen::VectorXd m_exact = m * *exact;
      const double exact_norm = exact->dot(m_exact);
      if (exact_norm <= norm_sq + 1e-12 * (1.0 + norm_sq)) {
        alpha = *exact;
        m_alpha = m_exact;
        norm_sq = exact_norm;
      }
    }
  }
  diag.norm_sq = norm_sq;
  diag.gap = norm_sq - m_alpha.minCoeff();
  return {detail::to_simplex(alpha), diag};
}

inline QcopResult solve_qcop(const GradientBundle& bundle, double tol = 1e-9, int max_iters = 250) {
  bundle.validate();
  return solve_qcop(std::span<const Vector>(bundle.grads), tol, max_iters);
}

/// Brute-force minimum over the simplex grid {k / K : sum k = K}, K = round(1/step).
/// Test oracle; refuses more than five objectives.
inline AlphaVector min_norm_oracle(std::span<const Vector> grads, double grid_step) {
  require(!grads.empty(), "min_norm_oracle: no gradients");
  require(grads.size() <= 5, "min_norm_oracle: refusing more than 5 objectives");
  require(grid_step > 0.0 && grid_step <= 0.5, "min_norm_oracle: grid_step must lie in (0, 0.5]");
  for (const auto& g : grads) require(g.size() == grads.front().size(), "min_norm_oracle: gradient length mismatch");

  const Eigen::MatrixXd m = detail::gram(grads);
  const auto n = static_cast<std::size_t>(m.rows());
  const int total = static_cast<int>(std::lround(1.0 / grid_step));

  std::vector<int> counts(n, 0);
  Eigen::VectorXd best_alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd alpha(static_cast<Eigen::Index>(n));

  std::function<void(std::size_t, int)> enumerate = [&](std::size_t i, int remaining) {
    if (i + 1 == n) {
      counts[i] = remaining;
      for (std::size_t j = 0; j < n; ++j) alpha(static_cast<Eigen::Index>(j)) = counts[j] / static_cast<double>(total);
      const double value = alpha.dot(m * alpha);
      if (value < best) {
        best = value;
        best_alpha = alpha;
      }
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[i] = c;
      enumerate(i + 1, remaining - c);
    }
  };
  enumerate(0, total);
  return detail::to_simplex(best_alpha);
}

inline AlphaVector min_norm_oracle(const GradientBundle& bundle, double grid_step) {
  bundle.validate();
  return min_norm_oracle(std::span<const Vector>(bundle.grads), grid_step);
}

}  // namespace mgdrec
