#include <gtest/gtest.h>

#include <random>

#include "limodel/kernel.hpp"
#include "limodel/systems.hpp"
#include "oracles.hpp"

using namespace limodel;

namespace {

struct Built {
  SystemSpec spec;
  TruncatedOperator t, tp;
  WanderingSubspace e;
  RadiiEstimate radii;
  KernelBlocks kb;

  Built(SystemSpec s, Index order) : spec(std::move(s)) {
    const OrbitStructure o = analyze_orbits(spec);
    t = build_composition(spec);
    tp = cauchy_dual(t, spec);
    e = wandering_subspace(spec, o);
    radii = estimate_radii(t, tp, e, 40);
    kb = kernel_blocks(t, tp, e, order);
    kb.cycle = o.has_cycle();
    if (!kb.cycle) kb.band_k = k_phi(o, e.support);
    if (radii.annulus_nonempty) kb.domain = KernelDomain::from(radii);
  }
};

std::vector<Complex> ring(double lo, double hi, int count, double phase) {
  std::vector<Complex> out;
  for (int k = 0; k < count; ++k) {
    const double r = lo + (hi - lo) * k / (count - 1);
    out.push_back(std::polar(r, phase + 2.0 * 3.141592653589793 * k / count));
  }
  return out;
}

}  // namespace

TEST(Kernel, SzegoOnRootedRay) {
  Built b(systems::rooted_ray(128), 60);
  ASSERT_TRUE(b.kb.domain);
  EXPECT_TRUE(b.kb.domain->disc);
  double worst = 0.0;
  for (Complex z : ring(0.0, 0.6, 6, 0.2))
    for (Complex l : ring(0.1, 0.65, 6, 1.3)) {
      const KernelValue v = kernel_eval(b.kb, z, l);
      worst = std::max(worst, std::abs(v.value(0, 0) - oracle::szego(z, l)));
    }
  EXPECT_LE(worst, 1e-9);
}

TEST(Kernel, TwoPathsOnBilateralGrid) {
  Built b(systems::bilateral(64, systems::BilateralRule::half_below_zero), 20);
  ASSERT_TRUE(b.kb.domain);
  Index within = 0;
  for (Complex z : ring(0.55, 0.95, 5, 0.3))
    for (Complex l : ring(0.55, 0.95, 5, 0.9)) {
      const KernelValue v = kernel_eval(b.kb, z, l);
      const Matrix r = kernel_resolvent(b.t, b.tp, b.e, z, l);
      const double diff = (v.value - r).norm();
      EXPECT_LT(diff, v.tail_bound + 1e-12) << z << " " << l;
      if (diff < v.tail_bound) ++within;
    }
  EXPECT_EQ(within, 25u);
}

TEST(Kernel, BilateralClosedForm) {
  // lambda_n = 1 for n > 0, 1/2 for n <= 0: negative part sum (2 / (z conj l))^j
  Built b(systems::bilateral(64, systems::BilateralRule::half_below_zero), 40);
  const Complex z(0.8, 0.1), l(-0.3, 0.7);
  const Complex q = 0.25 / (z * std::conj(l));
  Complex want = 1.0 / (1.0 - z * std::conj(l));
  want += q / (1.0 - q);
  EXPECT_NEAR(std::abs(kernel_series(b.kb, z, l)(0, 0) - want), 0.0, 1e-8);
}

TEST(Kernel, HermitianSymmetryAndIdentity) {
  for (Built* b : {new Built(systems::bilateral(32, systems::BilateralRule::half_below_zero), 12),
                   new Built(systems::branching_tree(2, {1.0, Complex(0.6, 0.8), 1.5}, 20), 12),
                   new Built(systems::ray_cycle(2, {1.0, 1.0, 1.0}, [](std::int64_t) { return Complex(2.0); }, 40), 12)}) {
    const KernelBlocks& kb = b->kb;
    const auto d = static_cast<Eigen::Index>(kb.dim);
    EXPECT_LE(oracle::max_abs(kb.D[0][0] - Matrix::Identity(d, d)), 1e-12);
    for (Index i = 0; i <= kb.max_order; ++i)
      for (Index j = 0; j <= kb.max_order; ++j) {
        EXPECT_LE(oracle::max_abs(kb.D[i][j].adjoint() - kb.D[j][i]), 1e-12);
        if (i >= 1 && j >= 1) EXPECT_LE(oracle::max_abs(kb.A[i][j].adjoint() - kb.A[j][i]), 1e-12);
        if (j >= 1) EXPECT_LE(oracle::max_abs(kb.C[i][j].adjoint() - kb.B[j][i]), 1e-12);
      }
    delete b;
  }
}

TEST(Kernel, PrintedCBlockBreaksSymmetry) {
  const SystemSpec s = systems::bilateral(32, systems::BilateralRule::half_below_zero);
  const TruncatedOperator t = build_composition(s);
  const TruncatedOperator tp = cauchy_dual(t, s);
  const WanderingSubspace e = wandering_subspace(s, analyze_orbits(s));
  const KernelBlocks kb = kernel_blocks(t, tp, e, 6, CBlockConvention::printed);
  double asym = 0.0;
  for (Index i = 0; i <= 6; ++i)
    for (Index j = 1; j <= 6; ++j) asym = std::max(asym, oracle::max_abs(kb.C[i][j].adjoint() - kb.B[j][i]));
  EXPECT_GT(asym, 0.1);
}

TEST(Band, RootedTreeWithOneBranching) {
  Built b(systems::branching_tree(2, {1.0, Complex(0.6, 0.8), 1.5}, 40), 20);
  ASSERT_TRUE(b.kb.band_k);
  const std::int64_t k = *b.kb.band_k;
  EXPECT_EQ(k, 3);
  EXPECT_TRUE(band_check(b.kb, k, 1e-12).empty());
  EXPECT_FALSE(band_check(b.kb, k - 1, 1e-12).empty());
}

TEST(Band, RayLineWithoutCycle) {
  for (const SystemSpec& s : {systems::ray_line(48, 1.0, 1.0, {2.0}), systems::ray_line(48, 0.5, 1.0, {2.0, 3.0})}) {
    Built b(s, 20);
    ASSERT_TRUE(b.kb.band_k);
    const std::int64_t k = *b.kb.band_k;
    EXPECT_EQ(k, 1);
    EXPECT_TRUE(band_check(b.kb, k, 1e-12).empty());
    EXPECT_FALSE(band_check(b.kb, k - 1, 1e-12).empty());
  }
}

TEST(Band, RefusedOnCycle) {
  Built b(systems::ray_cycle(3, {1.0, 1.0, 1.0, 1.0}, [](std::int64_t) { return Complex(2.0); }, 32), 6);
  try {
    band_check(b.kb, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_applicable);
  }
}

TEST(Domain, RefusesOutsideAnnulusAndFormal) {
  Built b(systems::bilateral(64, systems::BilateralRule::half_below_zero), 10);
  try {
    kernel_eval(b.kb, 0.52, 0.7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::outside_annulus);
  }
  Built c(systems::cycle({2.0, 3.0}), 4);
  EXPECT_FALSE(c.radii.annulus_nonempty);
  try {
    KernelDomain::from(c.radii);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::formal_mode);
  }
  EXPECT_THROW(kernel_eval(c.kb, 1.0, 1.0), Error);
}

TEST(Reproducing, ResidualsBelowTail) {
  std::mt19937_64 rng(41);
  for (const SystemSpec& s : {systems::bilateral(64, systems::BilateralRule::half_below_zero), systems::rooted_ray(64),
                              systems::ray_cycle(3, {1.0, 1.0, 1.0, 1.0}, [](std::int64_t) { return Complex(2.0); }, 64),
                              systems::branching_tree(1, {1.0, 2.0}, 30)}) {
    Built b(s, 20);
    ASSERT_TRUE(b.kb.domain) << s.meta().family;
    const Index n = b.spec.size();
    const Orders o{4 * n, 4 * n};
    const LaurentModel u(b.t, b.tp, b.e, o);
    const LaurentModel ud(b.tp, b.t, b.e, o);
    KernelBlocks kb = b.kb;
    kb.max_order = 4 * n;
    const double lo = b.kb.domain->disc ? 0.0 : b.radii.r_minus + 0.06;
    for (Complex l : ring(lo, b.radii.r_plus - 0.06, 10, 0.4)) {
      const Vector x = oracle::random_vector(rng, static_cast<Eigen::Index>(n));
      const ReproducingResult r = reproducing_check(u, ud, kb, l, x);
      EXPECT_TRUE(r.within_bound) << s.meta().family << " " << l << " " << r.max_residual << " " << r.bound;
      EXPECT_TRUE(r.exact);
    }
  }
}

TEST(Gram, PositiveOnSixPoints) {
  for (const SystemSpec& s : {systems::bilateral(64, systems::BilateralRule::half_below_zero), systems::rooted_ray(64),
                              systems::branching_tree(2, {1.0, Complex(0.6, 0.8), 1.5}, 30)}) {
    Built b(s, 20);
    const double lo = b.kb.domain->disc ? 0.0 : b.radii.r_minus + 0.06;
    EXPECT_GE(gram_psd_check(b.kb, ring(lo, b.radii.r_plus - 0.06, 6, 0.7)), -1e-9) << s.meta().family;
  }
}

TEST(Gram, ResolventGramIsPositive) {
  // independent path: Y(conj z_i)^H Y(conj z_j) is a Gram matrix by construction
  Built b(systems::bilateral(64, systems::BilateralRule::half_below_zero), 20);
  const auto pts = ring(0.6, 0.9, 6, 0.2);
  Matrix g(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) g(i, j) = kernel_resolvent(b.t, b.tp, b.e, pts[i], pts[j])(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es((g + g.adjoint()) / 2.0);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
}
