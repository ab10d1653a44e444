#pragma once

// The reproducing kernel of the model space: the block coefficients A, B, C,
// D of the four-sum expansion, point evaluation with a tail bound, the
// resolvent form, band structure, the reproducing identity and positivity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "limodel/core.hpp"
#include "limodel/model.hpp"
#include "limodel/operators.hpp"

namespace limodel {

enum class CBlockConvention {
  expanded,  // C_ij = P_E T'*^i T*^j |_E
  printed,   // C_ij = P_E T'*^i T^j |_E
};

/// Where point evaluation is allowed, and the norm sequences a_n = ||P_E T^n||,
/// b_n = ||P_E T'*^n|| (n = 1..depth) that drive the tail bounds.
struct KernelDomain {
  double r_minus = 0.0;
  double r_plus = std::numeric_limits<double>::infinity();
  double margin = 0.05;
  bool disc = false;
  std::vector<double> neg_norms;
  std::vector<double> pos_norms;

  static KernelDomain from(const RadiiEstimate& r, double margin = 0.05) {
    if (!r.annulus_nonempty) throw Error(ErrorKind::formal_mode, "annulus is empty; series are formal");
    KernelDomain d;
    d.r_minus = r.r_minus;
    d.r_plus = r.r_plus;
    d.margin = margin;
    d.disc = r.r_minus == 0.0 &&
             std::all_of(r.neg_norms.begin(), r.neg_norms.end(), [](double v) { return v == 0.0; });
    d.neg_norms = r.neg_norms;
    d.pos_norms = r.pos_norms;
    return d;
  }

  bool contains(Complex z) const {
    const double m = std::abs(z);
    if (m > r_plus - margin) return false;
    if (disc) return true;
    return m >= r_minus + margin;
  }

  void require(Complex z) const {
    if (!contains(z))
      throw Error(ErrorKind::outside_annulus, "|z| = " + std::to_string(std::abs(z)) + " is outside the annulus (" +
                                                  std::to_string(r_minus) + ", " + std::to_string(r_plus) +
                                                  ") with margin " + std::to_string(margin));
  }

  /// Sum over orders > m of a_i |z|^{-i} + b_i |z|^i, with geometric
  /// remainders past the measured depth. m = -1 includes the b_0 = 1 term.
  double tail(Complex z, std::int64_t m_neg, std::int64_t m_pos) const {
    const double r = std::abs(z);
    double s = 0.0;
    const auto dn = static_cast<std::int64_t>(neg_norms.size());
    const auto dp = static_cast<std::int64_t>(pos_norms.size());
    if (!disc) {
      for (std::int64_t i = std::max<std::int64_t>(m_neg + 1, 1); i <= dn; ++i)
        s += neg_norms[static_cast<Index>(i - 1)] * std::pow(r, -static_cast<double>(i));
      if (dn > 0 && neg_norms.back() > 0.0) {
        const double q = r_minus / r;
        if (q >= 1.0) return std::numeric_limits<double>::infinity();
        const std::int64_t from = std::max(m_neg, dn);
        const double last = neg_norms.back() * std::pow(r, -static_cast<double>(dn));
        s += last * std::pow(q, static_cast<double>(from - dn)) * q / (1.0 - q);
      }
    }
    if (m_pos < 0) s += 1.0;
    for (std::int64_t i = std::max<std::int64_t>(m_pos + 1, 1); i <= dp; ++i)
      s += pos_norms[static_cast<Index>(i - 1)] * std::pow(r, static_cast<double>(i));
    if (dp > 0 && pos_norms.back() > 0.0 && std::isfinite(r_plus)) {
      const double q = r / r_plus;
      if (q >= 1.0) return std::numeric_limits<double>::infinity();
      const std::int64_t from = std::max(m_pos, dp);
      const double last = pos_norms.back() * std::pow(r, static_cast<double>(dp));
      s += last * std::pow(q, static_cast<double>(from - dp)) * q / (1.0 - q);
    }
    return s;
  }

  double total(Complex z) const { return tail(z, 0, -1); }
};

struct KernelBlocks {
  Index dim = 0;
  Index max_order = 0;
  CBlockConvention c_convention = CBlockConvention::expanded;
  // [i][j] for 0 <= i, j <= max_order; entries outside a family's index range stay zero.
  std::vector<std::vector<Matrix>> A, B, C, D;
  std::vector<std::string> inexact;  // "A[i][j]" labels of window-contaminated blocks
  std::optional<std::int64_t> band_k;
  bool cycle = false;
  std::optional<KernelDomain> domain;

  bool exact() const { return inexact.empty(); }
};

namespace detail {

inline void project_into(const WanderingSubspace& e, const std::vector<TrackedVector>& basis, const TrackedVector& y,
                         Matrix& block, Index col, bool& exact) {
  for (Index a = 0; a < e.dim(); ++a) {
    block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(col)) = basis[a].value.dot(y.value);
    if (!pairing_exact(y, basis[a])) exact = false;
  }
}

}  // namespace detail

/// Block (a, b) of each family is <X g_b, g_a> for the operator product X.
inline KernelBlocks kernel_blocks(const TruncatedOperator& op, const TruncatedOperator& dual,
                                  const WanderingSubspace& e, Index max_order,
                                  CBlockConvention convention = CBlockConvention::expanded) {
  KernelBlocks kb;
  kb.dim = e.dim();
  kb.max_order = max_order;
  kb.c_convention = convention;
  const auto d = static_cast<Eigen::Index>(e.dim());
  const Index m = max_order;
  auto grid = [&] { return std::vector<std::vector<Matrix>>(m + 1, std::vector<Matrix>(m + 1, Matrix::Zero(d, d))); };
  kb.A = grid();
  kb.B = grid();
  kb.C = grid();
  kb.D = grid();
  std::vector<std::vector<bool>> ok_a(m + 1, std::vector<bool>(m + 1, true));
  auto ok_b = ok_a, ok_c = ok_a, ok_d = ok_a;

  std::vector<TrackedVector> basis;
  for (Index g = 0; g < e.dim(); ++g) basis.push_back(e.vector(g));

  for (Index g = 0; g < e.dim(); ++g) {
    std::vector<TrackedVector> star{basis[g]}, fwd{basis[g]}, dp{basis[g]};
    for (Index j = 1; j <= m; ++j) {
      star.push_back(op.apply_adjoint(star.back()));
      fwd.push_back(op.apply(fwd.back()));
      dp.push_back(dual.apply(dp.back()));
    }
    for (Index j = 0; j <= m; ++j) {
      if (j >= 1) {
        TrackedVector y = star[j];
        for (Index i = 1; i <= m; ++i) {
          y = op.apply(y);
          bool ex = ok_a[i][j];
          detail::project_into(e, basis, y, kb.A[i][j], g, ex);
          ok_a[i][j] = ex;
        }
        y = convention == CBlockConvention::expanded ? star[j] : fwd[j];
        for (Index i = 0; i <= m; ++i) {
          if (i > 0) y = dual.apply_adjoint(y);
          bool ex = ok_c[i][j];
          detail::project_into(e, basis, y, kb.C[i][j], g, ex);
          ok_c[i][j] = ex;
        }
      }
      TrackedVector y = dp[j];
      for (Index i = 1; i <= m; ++i) {
        y = op.apply(y);
        bool ex = ok_b[i][j];
        detail::project_into(e, basis, y, kb.B[i][j], g, ex);
        ok_b[i][j] = ex;
      }
      y = dp[j];
      for (Index i = 0; i <= m; ++i) {
        if (i > 0) y = dual.apply_adjoint(y);
        bool ex = ok_d[i][j];
        detail::project_into(e, basis, y, kb.D[i][j], g, ex);
        ok_d[i][j] = ex;
      }
    }
  }

  auto label = [](char f, Index i, Index j) {
    return std::string(1, f) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
  };
  for (Index i = 0; i <= m; ++i)
    for (Index j = 0; j <= m; ++j) {
      if (i >= 1 && j >= 1 && !ok_a[i][j]) kb.inexact.push_back(label('A', i, j));
      if (i >= 1 && !ok_b[i][j]) kb.inexact.push_back(label('B', i, j));
      if (j >= 1 && !ok_c[i][j]) kb.inexact.push_back(label('C', i, j));
      if (!ok_d[i][j]) kb.inexact.push_back(label('D', i, j));
    }
  return kb;
}

/// Four-sum evaluation with conj(lambda) in the second slot; no domain check.
inline Matrix kernel_series(const KernelBlocks& kb, Complex z, Complex lambda) {
  const auto d = static_cast<Eigen::Index>(kb.dim);
  Matrix out = Matrix::Zero(d, d);
  const Complex lb = std::conj(lambda);
  const Index m = kb.max_order;
  std::vector<Complex> zp(m + 1, 1.0), zn(m + 1, 1.0), lp(m + 1, 1.0), ln(m + 1, 1.0);
  for (Index i = 1; i <= m; ++i) {
    zp[i] = zp[i - 1] * z;
    lp[i] = lp[i - 1] * lb;
    zn[i] = z == Complex(0) ? Complex(0) : zn[i - 1] / z;
    ln[i] = lb == Complex(0) ? Complex(0) : ln[i - 1] / lb;
  }
  for (Index i = 0; i <= m; ++i)
    for (Index j = 0; j <= m; ++j) {
      if (i >= 1 && j >= 1) out += kb.A[i][j] * (zn[i] * ln[j]);
      if (i >= 1) out += kb.B[i][j] * (zn[i] * lp[j]);
      if (j >= 1) out += kb.C[i][j] * (zp[i] * ln[j]);
      out += kb.D[i][j] * (zp[i] * lp[j]);
    }
  return out;
}

struct KernelValue {
  Matrix value;
  double tail_bound = 0.0;
};

inline KernelValue kernel_eval(const KernelBlocks& kb, Complex z, Complex lambda) {
  if (!kb.domain) throw Error(ErrorKind::formal_mode, "kernel blocks carry no convergence domain");
  kb.domain->require(z);
  kb.domain->require(lambda);
  KernelValue out;
  out.value = kernel_series(kb, z, lambda);
  const auto m = static_cast<std::int64_t>(kb.max_order);
  const double tz = kb.domain->tail(z, m, m);
  const double tl = kb.domain->tail(lambda, m, m);
  out.tail_bound = tz * kb.domain->total(lambda) + kb.domain->total(z) * tl;
  return out;
}

namespace detail {

/// Solves a x = g and rejects the answer when it is not finite or its
/// backward error exceeds `tol`.
inline Matrix checked_solve(const Matrix& a, const Matrix& g, double tol, const char* what) {
  const Matrix x = Eigen::PartialPivLU<Matrix>(a).solve(g);
  const double scale = a.norm() * x.norm() + g.norm();
  if (!x.allFinite() || (a * x - g).norm() > tol * scale)
    throw Error(ErrorKind::singular_resolvent, std::string(what) + " is numerically singular");
  return x;
}

}  // namespace detail

/// Y(mu) = T*(mu - T*)^{-1} G + (I - mu T')^{-1} G by dense LU on the window.
inline Matrix resolvent_factor(const TruncatedOperator& op, const TruncatedOperator& dual, const WanderingSubspace& e,
                               Complex mu, double tol = 1e-12) {
  const Matrix ts = Matrix(op.adjoint_matrix());
  const Matrix td = dual.dense();
  const Matrix& g = e.basis;
  const Eigen::Index n = ts.rows();
  const Matrix id = Matrix::Identity(n, n);
  Matrix first;
  if (mu == Complex(0)) {
    const Matrix tg = ts * g;
    if (tg.cwiseAbs().maxCoeff() != 0.0)
      throw Error(ErrorKind::singular_resolvent, "mu = 0 with T* E != 0");
    first = Matrix::Zero(n, g.cols());
  } else {
    first = ts * detail::checked_solve(mu * id - ts, g, tol, "mu - T*");
  }
  return first + detail::checked_solve(id - mu * td, g, tol, "I - mu T'");
}

inline Matrix kernel_resolvent(const TruncatedOperator& op, const TruncatedOperator& dual,
                               const WanderingSubspace& e, Complex z, Complex lambda) {
  const Matrix yz = resolvent_factor(op, dual, e, std::conj(z));
  const Matrix yl = resolvent_factor(op, dual, e, std::conj(lambda));
  return yz.adjoint() * yl;
}

// ---------------------------------------------------------------------------

struct BandViolation {
  char family = 'A';
  Index i = 0;
  Index j = 0;
  double norm = 0.0;
};

/// A, D vanish for |i-j| > k; B, C vanish for i+j > k.
inline std::vector<BandViolation> band_check(const KernelBlocks& kb, std::int64_t k, double tol = 1e-12) {
  if (kb.cycle) throw Error(ErrorKind::not_applicable, "band structure needs a cycle-free system");
  std::vector<BandViolation> out;
  const auto m = static_cast<std::int64_t>(kb.max_order);
  auto check = [&](char f, const Matrix& blk, std::int64_t i, std::int64_t j) {
    const double v = blk.size() == 0 ? 0.0 : blk.cwiseAbs().maxCoeff();
    if (v > tol) out.push_back({f, static_cast<Index>(i), static_cast<Index>(j), v});
  };
  for (std::int64_t i = 0; i <= m; ++i)
    for (std::int64_t j = 0; j <= m; ++j) {
      const auto ui = static_cast<Index>(i), uj = static_cast<Index>(j);
      if (i >= 1 && j >= 1 && std::abs(i - j) > k) check('A', kb.A[ui][uj], i, j);
      if (i >= 1 && i + j > k) check('B', kb.B[ui][uj], i, j);
      if (j >= 1 && i + j > k) check('C', kb.C[ui][uj], i, j);
      if (std::abs(i - j) > k) check('D', kb.D[ui][uj], i, j);
    }
  return out;
}

struct ReproducingResult {
  double max_residual = 0.0;
  double bound = 0.0;
  bool exact = true;
  bool within_bound = false;
  double pairing_residual = 0.0;  // same right side through U' v
  bool pairing_exact = true;
};

/// |<(Ux)(l), g> - <x, v>| over the E-basis, v the window vector representing
/// kappa(., l) g.
inline ReproducingResult reproducing_check(const LaurentModel& model, const LaurentModel& dual_model,
                                           const KernelBlocks& kb, Complex lambda, const Vector& x) {
  if (!kb.domain) throw Error(ErrorKind::formal_mode, "kernel blocks carry no convergence domain");
  kb.domain->require(lambda);
  const KernelDomain& dom = *kb.domain;
  ReproducingResult out;
  const LaurentCoefficients f = model.coefficients(x);
  Vector value = Vector::Zero(static_cast<Eigen::Index>(f.dim));
  for (std::int64_t n = f.lowest(); n <= f.highest(); ++n) {
    value += f.at(n) * std::pow(lambda, static_cast<double>(n));
    if (!f.exact_at(n)) out.exact = false;
  }

  const Complex lb = std::conj(lambda);
  const WanderingSubspace& e = model.subspace();
  const Index m = kb.max_order;
  const double xn = x.norm();
  const Orders o = model.orders();
  const double coeff_tail = dom.tail(lambda, static_cast<std::int64_t>(o.neg), static_cast<std::int64_t>(o.pos));
  const double kernel_tail =
      dom.tail(lambda, static_cast<std::int64_t>(m), static_cast<std::int64_t>(m));
  for (Index g = 0; g < e.dim(); ++g) {
    TrackedVector v = e.vector(g);
    TrackedVector s = e.vector(g);
    TrackedVector t = e.vector(g);
    for (Index j = 1; j <= m; ++j) {
      s = model.forward().apply_adjoint(s);
      t = model.backward().apply(t);
      if (!dom.disc) v = v + std::pow(lb, -static_cast<double>(j)) * s;
      v = v + std::pow(lb, static_cast<double>(j)) * t;
    }
    const PairingResult p = unitary_pairing(f, dual_model.coefficients(v));
    if (!p.exact) out.pairing_exact = false;
    out.pairing_residual = std::max(out.pairing_residual, std::abs(value(static_cast<Eigen::Index>(g)) - p.value));
    if (!pairing_exact(TrackedVector(x), v)) out.exact = false;
    const double r = std::abs(value(static_cast<Eigen::Index>(g)) - v.value.dot(x));
    const double b = xn * (coeff_tail + kernel_tail) + 1e-9 * xn * v.value.norm() + 1e-12;
    out.max_residual = std::max(out.max_residual, r);
    out.bound = std::max(out.bound, b);
    if (r > b) out.within_bound = false;
  }
  out.within_bound = out.max_residual <= out.bound;
  return out;
}

/// Minimum eigenvalue of the block Gram matrix [kappa(z_i, z_j)].
inline double gram_psd_check(const KernelBlocks& kb, const std::vector<Complex>& points) {
  if (!kb.domain) throw Error(ErrorKind::formal_mode, "kernel blocks carry no convergence domain");
  for (Complex z : points) kb.domain->require(z);
  const auto d = static_cast<Eigen::Index>(kb.dim);
  const auto p = static_cast<Eigen::Index>(points.size());
  if (d == 0 || p == 0) return 0.0;
  Matrix g(p * d, p * d);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      g.block(i * d, j * d, d, d) = kernel_series(kb, points[static_cast<Index>(i)], points[static_cast<Index>(j)]);
  const Matrix h = (g + g.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace limodel
