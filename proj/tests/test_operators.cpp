#include <gtest/gtest.h>

#include <random>

#include "limodel/operators.hpp"
#include "limodel/systems.hpp"
#include "oracles.hpp"

using namespace limodel;

namespace {

std::vector<SystemSpec> example_systems() {
  std::mt19937_64 rng(2024);
  std::vector<SystemSpec> out{systems::cycle({2.0, 3.0})};
  for (Index n : {2u, 3u, 5u}) {
    std::vector<Complex> w;
    for (Index i = 0; i < n; ++i) w.push_back(oracle::random_weight(rng));
    out.push_back(systems::cycle(w));
  }
  out.push_back(systems::bilateral(64, systems::BilateralRule::half_below_zero));
  out.push_back(systems::ray_cycle(3, {1.0, 1.0, 1.0, 1.0}, [](std::int64_t) { return Complex(2.0); }, 64));
  out.push_back(systems::rooted_ray(40));
  out.push_back(systems::branching_tree(2, {1.0, Complex(0.6, 0.8), 1.5}, 12));
  out.push_back(systems::ray_line(16, 0.5, 1.0, {2.0}));
  return out;
}

}  // namespace

TEST(Composition, MatchesDenseOracle) {
  for (const SystemSpec& s : example_systems()) {
    const TruncatedOperator c = build_composition(s);
    EXPECT_EQ(oracle::max_abs(c.dense() - oracle::composition(oracle::graph(s))), 0.0) << s.meta().family;
  }
}

TEST(Composition, GramDiagonalIsColumnNorm) {
  for (const SystemSpec& s : example_systems()) {
    const TruncatedOperator c = build_composition(s);
    const GramDiagonal g = gram_diagonal(c, s);
    const Matrix d = oracle::composition(oracle::graph(s));
    for (Index x = 0; x < s.size(); ++x)
      EXPECT_NEAR(g.values[x], d.col(static_cast<Eigen::Index>(x)).squaredNorm(), 1e-13);
  }
}

TEST(CauchyDual, MatchesDenseOracleOnInteriorColumns) {
  for (const SystemSpec& s : example_systems()) {
    const TruncatedOperator c = build_composition(s);
    const oracle::Graph g = oracle::graph(s);
    const auto cols = oracle::complete_columns(g);
    const Matrix want = oracle::cauchy_dual(oracle::composition(g), cols);
    const Matrix got = cauchy_dual(c, s).dense();
    double err = 0.0;
    for (auto j : cols) err = std::max(err, oracle::max_abs(got.col(j) - want.col(j)));
    EXPECT_LE(err, 1e-10) << s.meta().family;
  }
}

TEST(CauchyDual, BilateralClosedForm) {
  // S'* e_n = (1/lambda_n) e_{n-1} for real weights
  const SystemSpec s = systems::bilateral(20, [](std::int64_t n) { return Complex(std::ldexp(1.0, static_cast<int>(n % 5))); });
  const TruncatedOperator d = cauchy_dual(build_composition(s), s);
  for (std::int64_t n = -19; n <= 19; ++n) {
    const TrackedVector e = TrackedVector::basis(s.size(), s.at(std::to_string(n)));
    const TrackedVector out = d.apply_adjoint(e);
    Vector want = Vector::Zero(static_cast<Eigen::Index>(s.size()));
    want(static_cast<Eigen::Index>(s.at(std::to_string(n - 1)))) = 1.0 / s.weight(s.at(std::to_string(n)));
    EXPECT_TRUE(out.value == want) << n;
  }

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.3, 3.0);
  std::vector<double> lam(41);
  for (double& l : lam) l = u(rng) * (u(rng) < 1.0 ? -1.0 : 1.0);
  const SystemSpec r = systems::bilateral(20, [&](std::int64_t n) { return Complex(lam[static_cast<Index>(n + 20)]); });
  const Matrix dd = cauchy_dual(build_composition(r), r).dense();
  for (std::int64_t n = -19; n <= 20; ++n) {
    const auto row = static_cast<Eigen::Index>(n + 20);
    EXPECT_NEAR(std::abs(dd(row, row - 1) - 1.0 / lam[static_cast<Index>(n + 20)]), 0.0, 1e-15 / std::abs(lam[static_cast<Index>(n + 20)]));
  }
}

TEST(CauchyDual, IsInvolutionAndLeftInverse) {
  for (const SystemSpec& s : example_systems()) {
    const TruncatedOperator c = build_composition(s);
    const TruncatedOperator d = cauchy_dual(c, s);
    const Matrix dd = cauchy_dual(d, s).dense();
    const Matrix ct = c.dense();
    const Matrix left = d.dense().adjoint() * ct;
    for (Index j = 0; j < s.size(); ++j) {
      if (!s.preimage_complete(j)) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      EXPECT_LE(oracle::max_abs(dd.col(jj) - ct.col(jj)), 1e-12);
      for (Index i = 0; i < s.size(); ++i)
        if (s.preimage_complete(i))
          EXPECT_NEAR(std::abs(left(static_cast<Eigen::Index>(i), jj) - (i == j ? 1.0 : 0.0)), 0.0, 1e-12);
    }
  }
}

TEST(CauchyDual, PrintedDenominatorDiffersOffCycle) {
  const SystemSpec s = systems::branching_tree(1, {1.0, 2.0}, 4);
  const TruncatedOperator c = build_composition(s);
  const double diff = oracle::max_abs(cauchy_dual(c, s, DualDenominator::printed).dense() - cauchy_dual(c, s).dense());
  EXPECT_GT(diff, 0.1);
}

TEST(LeftInvertibility, FloorDetectsSmallWeights) {
  const SystemSpec s = systems::cycle({1.0, 1e-4});
  const LeftInvertibility li = is_left_invertible(build_composition(s), s, 1e-3);
  EXPECT_FALSE(li.holds);
  ASSERT_TRUE(li.witness);
  EXPECT_EQ(s.id(*li.witness), "1");
  EXPECT_NEAR(li.min_gram, 1e-8, 1e-20);
  EXPECT_TRUE(is_left_invertible(build_composition(s), s, 1e-6).holds);
}

TEST(AdjointPower, FollowsOrbit) {
  const SystemSpec s = systems::cycle({2.0, Complex(0.0, 3.0)});
  const TruncatedOperator c = build_composition(s);
  const Vector v = adjoint_power_apply(c, s, 0, 3);
  // conj(w1 w2 w1) e_2
  EXPECT_NEAR(std::abs(v(1) - std::conj(Complex(2.0) * Complex(0.0, 3.0) * Complex(2.0))), 0.0, 1e-14);
  const Matrix dense = oracle::power(c.dense().adjoint(), 3);
  EXPECT_LE(oracle::max_abs(dense.col(0) - v), 1e-14);
  const SystemSpec r = systems::rooted_ray(5);
  EXPECT_EQ(adjoint_power_apply(build_composition(r), r, 2, 3).norm(), 0.0);
}

TEST(Complement, OrthogonalAndOrthonormal) {
  std::mt19937_64 rng(3);
  for (int m = 2; m <= 6; ++m) {
    Vector l(m);
    for (int i = 0; i < m; ++i) l(i) = oracle::random_weight(rng);
    const Matrix q = orthonormal_complement(l);
    ASSERT_EQ(q.cols(), m - 1);
    EXPECT_LE(oracle::max_abs(q.adjoint() * q - Matrix::Identity(m - 1, m - 1)), 1e-13);
    EXPECT_LE(oracle::max_abs(l.adjoint() * q), 1e-13);
  }
  EXPECT_THROW(orthonormal_complement(Vector::Zero(3)), Error);
}

TEST(Wandering, KilledByAdjointOnDescendants) {
  for (const SystemSpec& s : example_systems()) {
    const OrbitStructure o = analyze_orbits(s);
    const WanderingSubspace e = wandering_subspace(s, o);
    ASSERT_GT(e.dim(), 0u);
    EXPECT_LE(oracle::max_abs(e.basis.adjoint() * e.basis - Matrix::Identity(e.basis.cols(), e.basis.cols())), 1e-12);
    const Matrix cstar = oracle::composition(oracle::graph(s)).adjoint();
    for (Index b = 0; b < e.dim(); ++b) {
      const std::string& tr = e.construction_trace[b];
      if (tr.rfind("cycle_point", 0) == 0) continue;
      const Index root = s.at(tr.substr(tr.find(':') + 1));
      const Vector img = cstar * e.basis.col(static_cast<Eigen::Index>(b));
      for (Index x : descendants(s, root).points) EXPECT_LE(std::abs(img(static_cast<Eigen::Index>(x))), 1e-12);
    }
  }
}

TEST(Wandering, ExampleThreeIsFirstRayPoint) {
  const SystemSpec s = systems::ray_cycle(3, {1.0, 1.0, 1.0, 1.0}, [](std::int64_t) { return Complex(2.0); }, 16);
  const WanderingSubspace e = wandering_subspace(s, analyze_orbits(s));
  EXPECT_EQ(e.dim(), 1u);
  EXPECT_EQ(e.support, (std::vector<Index>{s.at("(1,0)")}));
}

TEST(Wandering, PureCycleFallsBack) {
  const SystemSpec s = systems::cycle({2.0, 3.0});
  const WanderingSubspace e = wandering_subspace(s, analyze_orbits(s));
  EXPECT_EQ(e.construction_trace, (std::vector<std::string>{"cycle_point:1"}));
}

TEST(Wandering, ExplicitVectorsAreOrthonormalized) {
  const Vector a = Vector::Unit(4, 0) + Vector::Unit(4, 1);
  const Vector b = Vector::Unit(4, 1);
  const WanderingSubspace e = subspace_from_vectors(4, {a, b, a + b});
  EXPECT_EQ(e.dim(), 2u);
  EXPECT_LE(oracle::max_abs(e.basis.adjoint() * e.basis - Matrix::Identity(2, 2)), 1e-14);
  EXPECT_THROW(subspace_from_vectors(3, {a}), Error);
}

TEST(Tracking, BoundaryTaint) {
  const SystemSpec s = systems::rooted_ray(6);
  const TruncatedOperator c = build_composition(s);
  const TruncatedOperator d = cauchy_dual(c, s);
  TrackedVector v = TrackedVector::basis(s.size(), 6);
  v = d.apply(v);
  EXPECT_TRUE(v.down);
  EXPECT_FALSE(v.any_taint());
  // mass below the window comes back under the adjoint
  const TrackedVector back = d.apply_adjoint(v);
  EXPECT_TRUE(back.tainted[6]);

  const SystemSpec b = systems::bilateral(4, systems::BilateralRule::unit);
  const TruncatedOperator cb = build_composition(b);
  TrackedVector u = TrackedVector::basis(b.size(), b.at("-4"));
  u = cb.apply_adjoint(u);
  EXPECT_TRUE(u.up);
  u = cb.apply_adjoint(u);
  EXPECT_FALSE(u.any_taint());
  EXPECT_TRUE(pairing_exact(u, TrackedVector::basis(b.size(), 0)));
  u = cb.apply(u);
  EXPECT_TRUE(u.tainted[b.at("-4")]);
}
