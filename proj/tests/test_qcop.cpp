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


#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mgdrec/qcop.hpp"
#include "mgdrec/random.hpp"

namespace mgdrec {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double norm_sq(const std::vector<Vector>& g, const AlphaVector& a) { return combine_gradients(g, a).squaredNorm(); }

std::vector<Vector> random_bundle(Rng& rng, std::size_t n, Eigen::Index d) {
  std::vector<Vector> g(n, Vector(d));
  for (auto& v : g) {
    for (Eigen::Index j = 0; j < d; ++j) v(j) = rng.uniform(-1, 1);
  }
  return g;
}

void expect_on_simplex(const AlphaVector& a) {
  double s = 0.0;
  for (double x : a.values()) {
    EXPECT_GE(x, 0.0);
    s += x;
  }
  EXPECT_NEAR(s, 1.0, 1e-9);
}

TEST(Normalize, DividesByInitialLoss) {
  const auto r = normalize_gradient(vec({2, 4}), 2.0);
  EXPECT_EQ(r.gradient, vec({1, 2}));
  EXPECT_FALSE(r.degenerate);
}

TEST(Normalize, ZeroLossPassesThroughWithFlag) {
  const auto r = normalize_gradient(vec({2, 4}), 0.0);
  EXPECT_EQ(r.gradient, vec({2, 4}));
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(normalize_gradient(vec({2, 4}), 1e-12).degenerate);
}

TEST(Normalize, NonFiniteIsContractViolation) {
  EXPECT_THROW(normalize_gradient(vec({NAN, 1}), 1.0), ContractViolation);
  EXPECT_THROW(normalize_gradient(vec({1, 1}), INFINITY), ContractViolation);
}

TEST(Normalize, JointScalingInvariance) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const Vector g = random_bundle(rng, 1, 20)[0];
    const double l = rng.uniform(0.1, 5.0);
    const double c = std::exp(rng.uniform(-7, 7));
    const Vector a = normalize_gradient(g, l).gradient;
    const Vector b = normalize_gradient(c * g, c * l).gradient;
    EXPECT_LE((a - b).norm(), 1e-12 * a.norm());
  }
}

TEST(AlphaTwo, OrthonormalIsHalf) {
  const auto a = alpha_two(vec({1, 0}), vec({0, 1}));
  EXPECT_NEAR(a[0], 0.5, 1e-15);
  EXPECT_NEAR(a[1], 0.5, 1e-15);
}

TEST(AlphaTwo, ClosedFormAgainstQuadratic) {
  // f(a) = 4a^2 + (1-a)^2 has f'(a) = 10a - 2 = 0 at a = 0.2.
  const auto a = alpha_two(vec({2, 0}), vec({0, 1}));
  EXPECT_NEAR(a[0], 0.2, 1e-15);
  EXPECT_NEAR(a[1], 0.8, 1e-15);
}

TEST(AlphaTwo, ClippedToBoundary) {
  // (3-2a)^2 decreases on [0,1]; the unclipped optimum 1.5 lies outside.
  const auto a = alpha_two(vec({1, 0}), vec({3, 0}));
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(a[1], 0.0);
  std::vector<Vector> g{vec({1, 0}), vec({3, 0})};
  EXPECT_EQ(combine_gradients(g, a), vec({1, 0}));
}

TEST(AlphaTwo, EqualGradientsGiveMidpoint) {
  const auto a = alpha_two(vec({1, 1}), vec({1, 1}));
  EXPECT_EQ(a[0], 0.5);
  EXPECT_EQ(a[1], 0.5);
}

TEST(AlphaTwo, LengthMismatch) { EXPECT_THROW(alpha_two(vec({1, 0}), vec({1})), ContractViolation); }

TEST(SolveQcop, OrthonormalThree) {
  std::vector<Vector> g{vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})};
  const auto r = solve_qcop(g);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.alphas[i], 1.0 / 3.0, 1e-6);
  EXPECT_NEAR(norm_sq(g, r.alphas), 1.0 / 3.0, 1e-9);
  EXPECT_TRUE(r.diagnostics.converged);
}

TEST(SolveQcop, TwoObjectivesMatchClosedForm) {
  std::vector<Vector> g{vec({2, 0}), vec({0, 1})};
  const auto r = solve_qcop(g);
  EXPECT_NEAR(r.alphas[0], 0.2, 1e-4);
  EXPECT_NEAR(r.alphas[1], 0.8, 1e-4);
}

TEST(SolveQcop, CombinedVectorWhenAlphaNotUnique) {
  std::vector<Vector> g{vec({1, 0}), vec({0, 1}), vec({0.5, 0.5})};
  const auto r = solve_qcop(g);
  const Vector v = combine_gradients(g, r.alphas);
  EXPECT_NEAR(v(0), 0.5, 1e-4);
  EXPECT_NEAR(v(1), 0.5, 1e-4);
  EXPECT_NEAR(v.squaredNorm(), 0.5, 1e-8);
  const auto oracle = min_norm_oracle(g, 0.01);
  EXPECT_NEAR(norm_sq(g, oracle), 0.5, 1e-12);
}

TEST(SolveQcop, NeedsTwoObjectives) {
  std::vector<Vector> g{vec({1, 0})};
  EXPECT_THROW(solve_qcop(g), ContractViolation);
}

TEST(SolveQcop, IterationCapReportsNotConverged) {
  Rng rng(9);
  const auto g = random_bundle(rng, 5, 50);
  const auto r = solve_qcop(g, 1e-9, 1);
  expect_on_simplex(r.alphas);
  EXPECT_EQ(r.diagnostics.iterations, 1);
}

TEST(SolveQcop, Deterministic) {
  Rng rng(4);
  const auto g = random_bundle(rng, 4, 30);
  EXPECT_EQ(solve_qcop(g).alphas.values(), solve_qcop(g).alphas.values());
}

TEST(Oracle, Examples) {
  std::vector<Vector> sym{vec({1, 0}), vec({0, 1})};
  const auto a = min_norm_oracle(sym, 0.01);
  EXPECT_NEAR(a[0], 0.5, 1e-12);
  std::vector<Vector> g{vec({2, 0}), vec({0, 1})};
  const auto b = min_norm_oracle(g, 0.01);
  EXPECT_NEAR(b[0], 0.2, 1e-12);
  EXPECT_NEAR(b[1], 0.8, 1e-12);
}

TEST(Oracle, RefusesMoreThanFive) {
  Rng rng(1);
  const auto g = random_bundle(rng, 6, 3);
  EXPECT_THROW(min_norm_oracle(g, 0.1), ContractViolation);
}

TEST(QcopProperty, MinNormOptimalityAgainstGridOracle) {
  Rng rng(2026);
  for (Eigen::Index d : {5, 50}) {
    for (std::size_t n : {2u, 3u, 5u}) {
      for (int t = 0; t < 8; ++t) {
        const auto g = random_bundle(rng, n, d);
        const auto r = solve_qcop(g);
        expect_on_simplex(r.alphas);
        EXPECT_LE(norm_sq(g, r.alphas), norm_sq(g, min_norm_oracle(g, 0.02)) + 1e-6) << "n=" << n << " d=" << d;
      }
    }
  }
}

TEST(QcopProperty, TwoObjectiveConsistency) {
  Rng rng(77);
  for (int t = 0; t < 120; ++t) {
    const auto g = random_bundle(rng, 2, 1 + static_cast<Eigen::Index>(rng.below(20)));
    const auto closed = alpha_two(g[0], g[1]);
    const auto fw = solve_qcop(g);
    EXPECT_LT(std::abs(fw.alphas[0] - closed[0]), 1e-4);
  }
}

TEST(QcopProperty, ScaledObjectiveLeavesAlphaUnchanged) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    auto g = random_bundle(rng, 3, 10);
    std::vector<double> l{rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 2)};
    const double c = 1000.0 * rng.uniform(0.5, 2);
    std::vector<Vector> a, b;
    for (std::size_t i = 0; i < 3; ++i) {
      a.push_back(normalize_gradient(g[i], l[i]).gradient);
      b.push_back(i == 1 ? normalize_gradient(c * g[i], c * l[i]).gradient : a.back());
    }
    const auto ra = solve_qcop(a).alphas;
    const auto rb = solve_qcop(b).alphas;
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(ra[i], rb[i], 1e-12);
    const auto ta = alpha_two(a[0], a[1]);
    const auto tb = alpha_two(b[0], b[1]);
    EXPECT_NEAR(ta[0], tb[0], 1e-12);
  }
}

TEST(QcopProperty, CommonDescentDirection) {
  // Full-batch gradients of L_i(w) = ||w - c_i||^2 at a random w.
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    const auto centers = random_bundle(rng, 3, 4);
    Vector w(4);
    for (Eigen::Index j = 0; j < 4; ++j) w(j) = rng.uniform(-3, 3);
    std::vector<Vector> g;
    for (const auto& c : centers) g.push_back(2.0 * (w - c));
    const Vector v = combine_gradients(g, solve_qcop(g).alphas);
    for (const auto& gi : g) EXPECT_GE(gi.dot(v), (1 - 1e-6) * v.squaredNorm());
  }
}

TEST(Bundle, Validation) {
  GradientBundle b{{vec({1, 2}), vec({3})}, {}};
  EXPECT_THROW(b.validate(), ContractViolation);
  GradientBundle ok{{vec({1, 0}), vec({0, 1})}, {1.0, 2.0}};
  EXPECT_NO_THROW(ok.validate());
  EXPECT_NEAR(solve_qcop(ok).alphas[0], 0.5, 1e-6);
}

}  // namespace
}  // namespace mgdrec
