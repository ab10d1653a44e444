#pragma once

// The two-sided Laurent model: coefficient sequences of U x, the shift M_z and
// its left inverse L on coefficient space, the (LI)/(prep) checks, the dual
// pairing, radii of the convergence annulus, the analytic-case coincidence and
// the eigenvector relation of the kernel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "limodel/core.hpp"
#include "limodel/dynamics.hpp"
#include "limodel/operators.hpp"

namespace limodel {

enum class Status { pass, fail, inconclusive, skipped, not_applicable };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::inconclusive: return "inconclusive";
    case Status::skipped: return "skipped";
    case Status::not_applicable: return "not_applicable";
  }
  return "unknown";
}

struct Orders {
  Index neg = 0;  // coefficients of z^{-1} .. z^{-neg}
  Index pos = 0;  // coefficients of z^0 .. z^{pos}
};

enum class NegativeConvention {
  power,          // a_{-n} = P_E T^n x
  adjoint_power,  // a_{-n} = P_E T*^n x
};

struct LaurentCoefficients {
  std::vector<Vector> neg;  // neg[m] multiplies z^{-(m+1)}
  std::vector<Vector> pos;  // pos[n] multiplies z^n
  std::vector<bool> neg_exact;
  std::vector<bool> pos_exact;
  Index dim = 0;
  std::uint64_t tag = 0;
  bool trimmed = false;

  Orders orders() const { return {neg.size(), pos.empty() ? 0 : pos.size() - 1}; }
  std::int64_t lowest() const { return -static_cast<std::int64_t>(neg.size()); }
  std::int64_t highest() const { return static_cast<std::int64_t>(pos.size()) - 1; }
  bool has(std::int64_t n) const { return n >= lowest() && n <= highest(); }

  const Vector& at(std::int64_t n) const {
    if (!has(n)) throw Error(ErrorKind::index_range, "coefficient index " + std::to_string(n) + " not stored");
    return n >= 0 ? pos[static_cast<Index>(n)] : neg[static_cast<Index>(-n - 1)];
  }
  bool exact_at(std::int64_t n) const {
    if (!has(n)) return false;
    return n >= 0 ? pos_exact[static_cast<Index>(n)] : neg_exact[static_cast<Index>(-n - 1)];
  }

  static LaurentCoefficients zeros(Index dim, std::uint64_t tag, Orders o) {
    LaurentCoefficients f;
    f.dim = dim;
    f.tag = tag;
    f.neg.assign(o.neg, Vector::Zero(static_cast<Eigen::Index>(dim)));
    f.pos.assign(o.pos + 1, Vector::Zero(static_cast<Eigen::Index>(dim)));
    f.neg_exact.assign(o.neg, true);
    f.pos_exact.assign(o.pos + 1, true);
    return f;
  }
};

/// Coefficient map x -> (P_E A^n x)_{n>=1} , (P_E B*^n x)_{n>=0}. With
/// (A, B) = (T, T') this is U; with (T', T) it is the dual model U'.
class LaurentModel {
 public:
  LaurentModel(TruncatedOperator forward, TruncatedOperator backward, WanderingSubspace e, Orders orders,
               NegativeConvention convention = NegativeConvention::power)
      : a_(std::move(forward)), b_(std::move(backward)), e_(std::move(e)), orders_(orders), convention_(convention) {
    if (a_.size() != e_.window() || b_.size() != e_.window())
      throw Error(ErrorKind::mismatched_subspace, "operator and subspace windows differ");
    const Index d = e_.dim();
    neg_probes_.assign(orders_.neg, {});
    pos_probes_.assign(orders_.pos + 1, {});
    for (Index g = 0; g < d; ++g) {
      TrackedVector v = e_.vector(g);
      for (Index n = 0; n < orders_.neg; ++n) {
        v = convention_ == NegativeConvention::power ? a_.apply_adjoint(v) : a_.apply(v);
        neg_probes_[n].push_back(v);
      }
      TrackedVector u = e_.vector(g);
      pos_probes_[0].push_back(u);
      for (Index n = 1; n <= orders_.pos; ++n) {
        u = b_.apply(u);
        pos_probes_[n].push_back(u);
      }
    }
  }

  const TruncatedOperator& forward() const { return a_; }
  const TruncatedOperator& backward() const { return b_; }
  const WanderingSubspace& subspace() const { return e_; }
  Orders orders() const { return orders_; }
  NegativeConvention convention() const { return convention_; }
  /// neg_probes()[n-1][g] = A*^n g ; pos_probes()[n][g] = B^n g.
  const std::vector<std::vector<TrackedVector>>& neg_probes() const { return neg_probes_; }
  const std::vector<std::vector<TrackedVector>>& pos_probes() const { return pos_probes_; }

  LaurentCoefficients coefficients(const TrackedVector& x) const {
    LaurentCoefficients f = LaurentCoefficients::zeros(e_.dim(), e_.tag, orders_);
    for (Index n = 0; n < orders_.neg; ++n) f.neg_exact[n] = fill(neg_probes_[n], x, f.neg[n]);
    for (Index n = 0; n <= orders_.pos; ++n) f.pos_exact[n] = fill(pos_probes_[n], x, f.pos[n]);
    return f;
  }

  LaurentCoefficients coefficients(const Vector& x) const { return coefficients(TrackedVector(x)); }

  /// x - A B* x, the projection of x onto N(A*).
  TrackedVector kernel_part(const TrackedVector& x) const { return x - a_.apply(b_.apply_adjoint(x)); }

 private:
  static bool fill(const std::vector<TrackedVector>& probes, const TrackedVector& x, Vector& out) {
    bool exact = true;
    for (Index g = 0; g < probes.size(); ++g) {
      out(static_cast<Eigen::Index>(g)) = probes[g].value.dot(x.value);
      if (!pairing_exact(x, probes[g])) exact = false;
    }
    return exact;
  }

  TruncatedOperator a_;
  TruncatedOperator b_;
  WanderingSubspace e_;
  Orders orders_;
  NegativeConvention convention_;
  std::vector<std::vector<TrackedVector>> neg_probes_;
  std::vector<std::vector<TrackedVector>> pos_probes_;
};

inline LaurentCoefficients laurent_coefficients(const TruncatedOperator& op, const TruncatedOperator& dual,
                                                const WanderingSubspace& e, const Vector& x, Orders orders) {
  return LaurentModel(op, dual, e, orders).coefficients(x);
}

/// (M_z f)_n = f_{n-1}. Positive orders beyond `max_pos` are dropped and flagged.
inline LaurentCoefficients mz_apply(const LaurentCoefficients& f,
                                    Index max_pos = std::numeric_limits<Index>::max()) {
  LaurentCoefficients out;
  out.dim = f.dim;
  out.tag = f.tag;
  out.trimmed = f.trimmed;
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(f.dim));
  for (std::int64_t n = std::min<std::int64_t>(f.lowest() + 1, 0); n <= f.highest() + 1; ++n) {
    const Vector& v = f.has(n - 1) ? f.at(n - 1) : zero;
    const bool ex = f.exact_at(n - 1);
    if (n < 0) {
      out.neg.insert(out.neg.begin(), v);
      out.neg_exact.insert(out.neg_exact.begin(), ex);
    } else {
      out.pos.push_back(v);
      out.pos_exact.push_back(ex);
    }
  }
  if (out.pos.size() > max_pos + 1 && max_pos != std::numeric_limits<Index>::max()) {
    out.pos.resize(max_pos + 1);
    out.pos_exact.resize(max_pos + 1);
    out.trimmed = true;
  }
  return out;
}

/// (L f)_n = (f - c)_{n+1}, where c holds the coefficients of the N(M_z*)
/// component of f.
inline LaurentCoefficients l_apply(const LaurentCoefficients& f, const LaurentCoefficients& component) {
  if (f.tag != component.tag || f.dim != component.dim)
    throw Error(ErrorKind::mismatched_subspace, "component built on a different subspace");
  LaurentCoefficients out;
  out.dim = f.dim;
  out.tag = f.tag;
  out.trimmed = f.trimmed || component.trimmed;
  for (std::int64_t n = f.lowest() - 1; n <= f.highest() - 1; ++n) {
    Vector v = f.at(n + 1);
    bool ex = f.exact_at(n + 1);
    if (component.has(n + 1)) {
      v -= component.at(n + 1);
      ex = ex && component.exact_at(n + 1);
    } else {
      ex = false;
    }
    if (n < 0) {
      out.neg.insert(out.neg.begin(), v);
      out.neg_exact.insert(out.neg_exact.begin(), ex);
    } else {
      out.pos.push_back(v);
      out.pos_exact.push_back(ex);
    }
  }
  return out;
}

inline LaurentCoefficients l_apply(const LaurentCoefficients& f) {
  return l_apply(f, LaurentCoefficients::zeros(f.dim, f.tag, f.orders()));
}

struct PairingResult {
  Complex value = 0.0;
  bool exact = true;
};

/// sum_n <a_n, b_n> over the indices both series store.
inline PairingResult unitary_pairing(const LaurentCoefficients& f, const LaurentCoefficients& g) {
  if (f.tag != g.tag || f.dim != g.dim)
    throw Error(ErrorKind::mismatched_subspace, "series built on different subspaces");
  PairingResult out;
  const std::int64_t lo = std::max(f.lowest(), g.lowest());
  const std::int64_t hi = std::min(f.highest(), g.highest());
  for (std::int64_t n = lo; n <= hi; ++n) {
    out.value += g.at(n).dot(f.at(n));
    if (!f.exact_at(n) || !g.exact_at(n)) out.exact = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// (LI) and (prep)

struct LiResult {
  Status status = Status::fail;
  Index rank = 0;
  Index window = 0;
  double residual = 0.0;  // ||I - Q Q^H||_F on the window
  std::vector<Index> rank_by_depth;
};

/// Rank of span{A*^n g, B^n g : n <= depth} among window-exact vectors.
inline LiResult check_li(const TruncatedOperator& a, const TruncatedOperator& b, const WanderingSubspace& e,
                         Index depth, double tol = 1e-8) {
  LiResult out;
  out.window = e.window();
  std::vector<Vector> q;
  auto absorb = [&](const TrackedVector& v) {
    if (!v.exact() || q.size() >= out.window) return;
    const double nv = v.value.norm();
    if (nv == 0.0) return;
    Vector r = v.value / nv;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& u : q) r -= u.dot(r) * u;
    const double nr = r.norm();
    if (nr > tol) q.push_back(r / nr);
  };
  std::vector<TrackedVector> left, right;
  for (Index g = 0; g < e.dim(); ++g) {
    left.push_back(e.vector(g));
    right.push_back(e.vector(g));
    absorb(left.back());
  }
  out.rank_by_depth.push_back(q.size());
  for (Index n = 1; n <= depth; ++n) {
    for (Index g = 0; g < e.dim(); ++g) {
      left[g] = a.apply_adjoint(left[g]);
      right[g] = b.apply(right[g]);
      absorb(left[g]);
      absorb(right[g]);
    }
    out.rank_by_depth.push_back(q.size());
  }
  out.rank = q.size();
  out.residual = std::sqrt(static_cast<double>(out.window - out.rank));
  if (out.rank == out.window) {
    out.status = Status::pass;
  } else {
    const auto& r = out.rank_by_depth;
    const bool growing = r.size() >= 2 && r[r.size() - 1] > r[r.size() - 2];
    out.status = growing || depth == 0 ? Status::inconclusive : Status::fail;
  }
  return out;
}

struct PrepResult {
  bool holds = true;
  double max_violation = 0.0;
  bool exact = true;
  Index power = 0;
  Index from = 0;
  Index to = 0;
  std::string family;  // "T" or "T'"
};

/// max |<A^n e_a, e_b>| and |<B^n e_a, e_b>| over n = 1..depth.
inline PrepResult check_prep(const TruncatedOperator& a, const TruncatedOperator& b, const WanderingSubspace& e,
                             Index depth, double tol = 1e-10) {
  PrepResult out;
  std::vector<TrackedVector> basis;
  for (Index g = 0; g < e.dim(); ++g) basis.push_back(e.vector(g));
  for (int fam = 0; fam < 2; ++fam) {
    const TruncatedOperator& op = fam == 0 ? a : b;
    for (Index ga = 0; ga < e.dim(); ++ga) {
      TrackedVector v = basis[ga];
      for (Index n = 1; n <= depth; ++n) {
        v = op.apply(v);
        for (Index gb = 0; gb < e.dim(); ++gb) {
          const double m = std::abs(basis[gb].value.dot(v.value));
          if (!pairing_exact(v, basis[gb])) out.exact = false;
          if (m > out.max_violation) {
            out.max_violation = m;
            out.power = n;
            out.from = ga;
            out.to = gb;
            out.family = fam == 0 ? "T" : "T'";
          }
        }
      }
    }
  }
  out.holds = out.max_violation <= tol;
  return out;
}

// ---------------------------------------------------------------------------
// Radii

struct CompositionRadii {
  double r_minus = 0.0;
  double r_plus = std::numeric_limits<double>::infinity();
  std::vector<double> minus_sequence;  // n-th roots along the omega orbit (cycle-free case)
  std::vector<double> plus_sequence;   // (sum over W_n)^{-1/(2n)}
  bool truncated = false;
};

struct RadiiEstimate {
  std::vector<double> neg_norms;  // n = 1..depth
  std::vector<double> pos_norms;  // n = 1..depth
  std::vector<bool> neg_exact;
  std::vector<bool> pos_exact;
  double r_minus = 0.0;
  double r_plus = std::numeric_limits<double>::infinity();
  bool annulus_nonempty = false;
  bool stabilized = true;
  bool truncated = false;
  std::optional<CompositionRadii> composition;
  std::vector<std::string> notes;

  double neg_root(Index n) const { return std::pow(neg_norms.at(n - 1), 1.0 / static_cast<double>(n)); }
  double pos_root(Index n) const {
    const double v = pos_norms.at(n - 1);
    return v == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(v, -1.0 / static_cast<double>(n));
  }
};

namespace detail {

inline double largest_singular(const std::vector<TrackedVector>& columns) {
  if (columns.empty()) return 0.0;
  Matrix m(columns.front().value.size(), static_cast<Eigen::Index>(columns.size()));
  for (Index c = 0; c < columns.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = columns[c].value;
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  if (m.cols() == 1) return m.col(0).norm();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline Index exact_prefix(const std::vector<bool>& flags) {
  Index n = 0;
  while (n < flags.size() && flags[n]) ++n;
  return n;
}

}  // namespace detail

/// r-: max over the last third of ||P_E T^n||^{1/n}; r+: min over the last
/// third of ||P_E T'*^n||^{-1/n}. Only the window-exact prefix is used.
inline RadiiEstimate estimate_radii(const TruncatedOperator& op, const TruncatedOperator& dual,
                                    const WanderingSubspace& e, Index depth) {
  RadiiEstimate out;
  if (depth == 0) throw Error(ErrorKind::index_range, "radii need depth >= 1");
  std::vector<TrackedVector> left, right;
  for (Index g = 0; g < e.dim(); ++g) {
    left.push_back(e.vector(g));
    right.push_back(e.vector(g));
  }
  for (Index n = 1; n <= depth; ++n) {
    bool lx = true, rx = true;
    for (Index g = 0; g < e.dim(); ++g) {
      left[g] = op.apply_adjoint(left[g]);
      right[g] = dual.apply(right[g]);
      lx = lx && left[g].exact();
      rx = rx && right[g].exact();
    }
    out.neg_norms.push_back(detail::largest_singular(left));
    out.pos_norms.push_back(detail::largest_singular(right));
    out.neg_exact.push_back(lx);
    out.pos_exact.push_back(rx);
  }

  const Index dn = detail::exact_prefix(out.neg_exact);
  const Index dp = detail::exact_prefix(out.pos_exact);
  out.truncated = dn < depth || dp < depth;

  auto tail_range = [](Index len) {
    const Index span = (len + 2) / 3;
    return std::pair<Index, Index>{len - span + 1, len};
  };

  if (dn == 0) {
    out.r_minus = std::numeric_limits<double>::quiet_NaN();
    out.stabilized = false;
  } else {
    auto [lo, hi] = tail_range(dn);
    out.r_minus = 0.0;
    for (Index n = lo; n <= hi; ++n) out.r_minus = std::max(out.r_minus, out.neg_root(n));
    if (dn >= 6) {
      const Index span = hi - lo + 1;
      double prev = 0.0;
      for (Index n = lo - span; n < lo; ++n) prev = std::max(prev, out.neg_root(n));
      if (std::abs(prev - out.r_minus) > 1e-3 * std::max(1.0, out.r_minus)) out.stabilized = false;
    }
  }
  if (dp == 0) {
    out.r_plus = std::numeric_limits<double>::quiet_NaN();
    out.stabilized = false;
  } else {
    auto [lo, hi] = tail_range(dp);
    out.r_plus = std::numeric_limits<double>::infinity();
    for (Index n = lo; n <= hi; ++n) out.r_plus = std::min(out.r_plus, out.pos_root(n));
    if (dp >= 6) {
      const Index span = hi - lo + 1;
      double prev = std::numeric_limits<double>::infinity();
      for (Index n = lo - span; n < lo; ++n) prev = std::min(prev, out.pos_root(n));
      const bool both_inf = std::isinf(prev) && std::isinf(out.r_plus);
      if (!both_inf && std::abs(prev - out.r_plus) > 1e-3 * std::max(1.0, out.r_plus)) out.stabilized = false;
    }
  }
  out.annulus_nonempty = std::isfinite(out.r_minus) && !std::isnan(out.r_plus) && out.r_plus > out.r_minus + 1e-9;
  if (!out.stabilized) out.notes.push_back("root sequences have not stabilized within the depth");
  if (out.truncated) out.notes.push_back("norm sequences cut short by the window");
  return out;
}

/// The weight-product radii: the cycle product (or the omega-orbit limsup)
/// for r-, and the W-set sums of dual-weight products for r+ (NaN when E sits
/// on the cycle).
inline CompositionRadii composition_radii(const SystemSpec& spec, const OrbitStructure& orbits,
                                          const TruncatedOperator& dual, const WanderingSubspace& e,
                                          Index depth) {
  CompositionRadii out;
  const auto& wd = dual.composition_weights();
  if (wd.size() != spec.size()) throw Error(ErrorKind::not_applicable, "dual is not a composition operator");
  if (e.support.empty()) throw Error(ErrorKind::not_applicable, "empty subspace");
  const Orbit& orbit = orbits.orbit_containing(e.support.front());

  if (orbit.has_cycle()) {
    out.r_minus = 1.0;
    for (Index c : orbit.cycle) out.r_minus *= std::abs(spec.weight(c));
  } else {
    double log_prod = 0.0;
    bool zero = false;
    Index cur = orbit.anchor;
    for (Index n = 1; n <= depth; ++n) {
      const Image& img = spec.phi(cur);
      if (img.kind == ImageKind::root) {
        zero = true;
        break;
      }
      if (img.kind == ImageKind::outside) {
        out.truncated = true;
        break;
      }
      cur = img.index;
      log_prod += std::log(std::abs(spec.weight(cur)));
      out.minus_sequence.push_back(std::exp(log_prod / static_cast<double>(n)));
    }
    if (zero && out.minus_sequence.empty()) {
      out.r_minus = 0.0;
    } else if (zero) {
      out.r_minus = 0.0;
    } else if (!out.minus_sequence.empty()) {
      const Index len = out.minus_sequence.size();
      const Index span = (len + 2) / 3;
      out.r_minus = *std::max_element(out.minus_sequence.end() - static_cast<std::ptrdiff_t>(span),
                                      out.minus_sequence.end());
    } else {
      out.r_minus = std::numeric_limits<double>::quiet_NaN();
    }
  }

  for (Index x : e.support)
    if (orbits.on_cycle[x]) {
      out.r_plus = std::numeric_limits<double>::quiet_NaN();
      return out;
    }
  for (Index n = 1; n <= depth; ++n) {
    const PointSet wn = w_set(orbits, spec, e.support, static_cast<std::int64_t>(n));
    if (wn.truncated) out.truncated = true;
    double sum = 0.0;
    for (Index x : wn.points) {
      Complex prod = 1.0;
      Index cur = x;
      for (Index i = 0; i < n; ++i) {
        prod *= wd[cur];
        if (!spec.phi(cur).inside()) break;
        cur = spec.phi(cur).index;
      }
      sum += std::norm(prod);
    }
    out.plus_sequence.push_back(sum == 0.0 ? std::numeric_limits<double>::infinity()
                                           : std::pow(sum, -1.0 / (2.0 * static_cast<double>(n))));
  }
  const Index len = out.plus_sequence.size();
  const Index span = (len + 2) / 3;
  out.r_plus = *std::min_element(out.plus_sequence.end() - static_cast<std::ptrdiff_t>(span), out.plus_sequence.end());
  return out;
}

/// Attaches the composition variant and a note when the two disagree.
inline void attach_composition(RadiiEstimate& est, CompositionRadii comp) {
  auto differ = [](double a, double b) {
    if (std::isinf(a) && std::isinf(b)) return false;
    if (std::isnan(a) || std::isnan(b)) return false;
    return std::abs(a - b) > 1e-6 * std::max(1.0, std::abs(b));
  };
  if (differ(est.r_minus, comp.r_minus))
    est.notes.push_back("r_minus: general " + std::to_string(est.r_minus) + " vs composition formula " +
                        std::to_string(comp.r_minus));
  if (differ(est.r_plus, comp.r_plus))
    est.notes.push_back("r_plus: general " + std::to_string(est.r_plus) + " vs composition formula " +
                        std::to_string(comp.r_plus));
  est.composition = std::move(comp);
}

// ---------------------------------------------------------------------------
// Analytic case

struct ShimorinResult {
  Status status = Status::inconclusive;  // pass: coincides, fail: does not
  bool analytic = false;
  Index analytic_rank = 0;
  Index window = 0;
  double max_negative = 0.0;
};

/// With E = N(T*): T is analytic when span{T'^n k : k in N(T*)} fills the
/// window; the model then coincides with Shimorin's when every negative
/// coefficient vanishes.
inline ShimorinResult shimorin_coincidence(const TruncatedOperator& op, const TruncatedOperator& dual,
                                           const SystemSpec& spec, Index depth, double tol = 1e-12) {
  ShimorinResult out;
  out.window = spec.size();
  if (depth == 0) return out;
  const WanderingSubspace k = adjoint_kernel(spec);
  const LiResult span = check_li(op, dual, k, depth, 1e-8);
  out.analytic_rank = span.rank;
  if (span.status == Status::inconclusive) return out;
  out.analytic = span.status == Status::pass;
  const LaurentModel model(op, dual, k, {depth, 0});
  for (const auto& layer : model.neg_probes())
    for (const auto& p : layer) out.max_negative = std::max(out.max_negative, p.value.cwiseAbs().maxCoeff());
  out.status = out.analytic && out.max_negative <= tol ? Status::pass : Status::fail;
  return out;
}

// ---------------------------------------------------------------------------
// Eigenvector relation M_z* kappa(., l) g = conj(l) kappa(., l) g

struct EigenResult {
  double max_residual = 0.0;
  double bound = 0.0;
  bool within_bound = false;
  bool point_spectrum_empty = true;
};

/// v = sum_{j=1..M} conj(l)^{-j} T*^j g + sum_{j=0..M} conj(l)^j T'^j g
/// represents kappa(., l) g; T* v - conj(l) v telescopes to the two end terms.
inline EigenResult eigenrelation_check(const TruncatedOperator& op, const TruncatedOperator& dual,
                                       const WanderingSubspace& e, Complex lambda, Index order) {
  EigenResult out;
  const Complex lb = std::conj(lambda);
  std::vector<TrackedVector> neg_end, pos_end;
  for (Index g = 0; g < e.dim(); ++g) {
    const TrackedVector base = e.vector(g);
    TrackedVector v = base;
    TrackedVector star = base;
    bool neg_live = true;
    for (Index j = 1; j <= order + 1; ++j) {
      star = op.apply_adjoint(star);
      if (j == 1 && star.value.norm() == 0.0 && !star.any_taint() && !star.outside()) neg_live = false;
      if (j <= order && neg_live) {
        if (lb == Complex(0)) throw Error(ErrorKind::outside_annulus, "lambda = 0 with a nonzero negative part");
        v = v + std::pow(lb, -static_cast<double>(j)) * star;
      }
    }
    neg_end.push_back(star);
    TrackedVector dp = base;
    for (Index j = 1; j <= order; ++j) {
      dp = dual.apply(dp);
      v = v + std::pow(lb, static_cast<double>(j)) * dp;
    }
    pos_end.push_back(dp);
    const TrackedVector r = op.apply_adjoint(v) - lb * v;
    out.max_residual = std::max(out.max_residual, r.value.norm());
  }
  const double a = detail::largest_singular(neg_end);
  const double b = detail::largest_singular(pos_end);
  const double ml = std::abs(lambda);
  out.bound = (a == 0.0 ? 0.0 : a * std::pow(ml, -static_cast<double>(order))) +
              b * std::pow(ml, static_cast<double>(order + 1)) + 1e-12;
  out.within_bound = out.max_residual <= out.bound;

  // (S - l) a = 0 forces a_n = l^{-n} a_0; its partial squared norms grow without bound.
  if (lambda != Complex(0)) {
    auto partial = [&](Index m) {
      double s = 0.0;
      for (std::int64_t n = -static_cast<std::int64_t>(m); n <= static_cast<std::int64_t>(m); ++n)
        s += std::pow(ml, -2.0 * static_cast<double>(n));
      return s;
    };
    const Index m = std::max<Index>(order, 1);
    out.point_spectrum_empty = partial(2 * m) > 1.5 * partial(m);
  }
  return out;
}

}  // namespace limodel
