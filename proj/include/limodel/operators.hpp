#pragma once

// Truncated weighted composition operators on a window of l2(X), their
// adjoints, the diagonal C*C, the Cauchy dual and the wandering subspace E.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "limodel/core.hpp"
#include "limodel/dynamics.hpp"

namespace limodel {

/// A window matrix with exactness masks. `col_exact[j]` means column j of the
/// window matrix is the whole true column; `row_exact[i]` likewise for rows.
/// A graph-shaped operator sends e_x into span{e_y : phi(y) = x}, its adjoint
/// moves mass toward images.
class TruncatedOperator {
 public:
  TruncatedOperator() = default;
  TruncatedOperator(SparseMatrix matrix, std::vector<bool> col_exact, std::vector<bool> row_exact,
                    std::string label, std::vector<Complex> composition_weights = {}, bool graph_shaped = false)
      : matrix_(std::move(matrix)),
        adjoint_(matrix_.adjoint()),
        col_exact_(std::move(col_exact)),
        row_exact_(std::move(row_exact)),
        label_(std::move(label)),
        weights_(std::move(composition_weights)),
        graph_shaped_(graph_shaped) {
    matrix_.makeCompressed();
    adjoint_.makeCompressed();
  }

  Index size() const { return static_cast<Index>(matrix_.rows()); }
  const SparseMatrix& matrix() const { return matrix_; }
  const SparseMatrix& adjoint_matrix() const { return adjoint_; }
  Matrix dense() const { return Matrix(matrix_); }
  const std::vector<bool>& col_exact() const { return col_exact_; }
  const std::vector<bool>& row_exact() const { return row_exact_; }
  const std::string& label() const { return label_; }
  /// Weights w with op e_x = sum_{phi(y)=x} w(y) e_y; empty for non-composition matrices.
  const std::vector<Complex>& composition_weights() const { return weights_; }
  bool graph_shaped() const { return graph_shaped_; }

  TrackedVector apply(const TrackedVector& v) const {
    return propagate(matrix_, col_exact_, row_exact_, v, graph_shaped_ ? Flow::down : Flow::unknown);
  }
  TrackedVector apply_adjoint(const TrackedVector& v) const {
    return propagate(adjoint_, row_exact_, col_exact_, v, graph_shaped_ ? Flow::up : Flow::unknown);
  }

 private:
  enum class Flow { down, up, unknown };

  // Outside mass lives among ancestors of exits (up) or among unlisted
  // descendants (down); the two regions are taken to be disjoint. Upward moves
  // keep up-mass outside and may bring down-mass back into rows that are not
  // exact, downward moves the reverse.
  static TrackedVector propagate(const SparseMatrix& a, const std::vector<bool>& col_ok,
                                 const std::vector<bool>& row_ok, const TrackedVector& v, Flow flow) {
    TrackedVector out(a * v.value);
    const Index n = out.size();
    for (Index j = 0; j < n; ++j) {
      const bool live = v.tainted[j] || v.value(static_cast<Eigen::Index>(j)) != Complex(0);
      if (!live) continue;
      if (!col_ok[j]) {
        if (flow == Flow::up) out.up = true;
        else if (flow == Flow::down) out.down = true;
        else out.up = out.down = true;
      }
      const bool spread = v.tainted[j] || !col_ok[j];
      for (SparseMatrix::InnerIterator it(a, static_cast<Eigen::Index>(j)); it; ++it) {
        const auto i = static_cast<Index>(it.row());
        if (spread || !row_ok[i]) out.tainted[i] = true;
      }
    }
    const bool reenter = (v.down && flow != Flow::down) || (v.up && flow != Flow::up);
    if (v.up) {
      out.up = true;
      if (flow != Flow::up) out.down = true;
    }
    if (v.down) {
      out.down = true;
      if (flow == Flow::unknown) out.up = true;
    }
    if (reenter)
      for (Index i = 0; i < n; ++i)
        if (!row_ok[i]) out.tainted[i] = true;
    return out;
  }

  SparseMatrix matrix_;
  SparseMatrix adjoint_;
  std::vector<bool> col_exact_;
  std::vector<bool> row_exact_;
  std::string label_;
  std::vector<Complex> weights_;
  bool graph_shaped_ = false;
};

namespace detail {

inline TruncatedOperator composition_from_weights(const SystemSpec& spec, const std::vector<Complex>& w,
                                                  std::vector<bool> row_exact, std::string label) {
  const Index n = spec.size();
  std::vector<Eigen::Triplet<Complex>> triplets;
  std::vector<bool> col_exact(n);
  for (Index y = 0; y < n; ++y)
    if (spec.phi(y).inside() && w[y] != Complex(0))
      triplets.emplace_back(static_cast<int>(y), static_cast<int>(spec.phi(y).index), w[y]);
  for (Index x = 0; x < n; ++x) col_exact[x] = spec.preimage_complete(x);
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return TruncatedOperator(std::move(m), std::move(col_exact), std::move(row_exact), std::move(label), w, true);
}

}  // namespace detail

/// C e_x = sum_{y in phi^{-1}(x)} w(y) e_y.
inline TruncatedOperator build_composition(const SystemSpec& spec) {
  std::vector<bool> row_exact(spec.size());
  for (Index y = 0; y < spec.size(); ++y) row_exact[y] = spec.phi(y).kind != ImageKind::outside;
  return detail::composition_from_weights(spec, spec.weights(), std::move(row_exact), "C_{phi,w}");
}

/// conj(w(x) w(phi(x)) ... w(phi^{n-1}(x))) e_{phi^n(x)}; zero once a root is passed.
inline Vector adjoint_power_apply(const TruncatedOperator& op, const SystemSpec& spec, Index x, std::int64_t n) {
  if (n < 0) throw Error(ErrorKind::index_range, "negative power");
  const auto& w = op.composition_weights();
  if (w.size() != spec.size()) throw Error(ErrorKind::not_applicable, op.label() + " is not a composition operator");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(spec.size()));
  Complex coeff = 1.0;
  Index cur = x;
  for (std::int64_t k = 0; k < n; ++k) {
    const Image& img = spec.phi(cur);
    if (img.kind == ImageKind::root) return out;
    if (img.kind == ImageKind::outside)
      throw Error(ErrorKind::boundary_exit, "adjoint power of '" + spec.id(x) + "' leaves the window");
    coeff *= std::conj(w[cur]);
    cur = img.index;
  }
  out(static_cast<Eigen::Index>(cur)) = coeff;
  return out;
}

struct GramDiagonal {
  std::vector<double> values;  // sum_{y in phi^{-1}(x)} |w(y)|^2 over the window
  std::vector<bool> interior;  // phi^{-1}(x) lies entirely in the window
};

inline GramDiagonal gram_diagonal(const TruncatedOperator& op, const SystemSpec& spec) {
  const auto& w = op.composition_weights();
  if (w.size() != spec.size()) throw Error(ErrorKind::not_applicable, op.label() + " is not a composition operator");
  GramDiagonal out;
  out.values.assign(spec.size(), 0.0);
  out.interior.assign(spec.size(), false);
  for (Index x = 0; x < spec.size(); ++x) {
    for (Index y : spec.preimages(x)) out.values[x] += std::norm(w[y]);
    out.interior[x] = spec.preimage_complete(x);
  }
  return out;
}

struct LeftInvertibility {
  bool holds = false;
  double min_gram = 0.0;
  std::optional<Index> witness;
  std::vector<Index> boundary_failures;
};

inline LeftInvertibility is_left_invertible(const TruncatedOperator& op, const SystemSpec& spec, double floor) {
  const GramDiagonal g = gram_diagonal(op, spec);
  LeftInvertibility out;
  out.min_gram = std::numeric_limits<double>::infinity();
  for (Index x = 0; x < spec.size(); ++x) {
    if (!g.interior[x]) {
      if (g.values[x] < floor * floor) out.boundary_failures.push_back(x);
      continue;
    }
    if (g.values[x] < out.min_gram) {
      out.min_gram = g.values[x];
      out.witness = x;
    }
  }
  out.holds = !out.witness || out.min_gram >= floor * floor;
  return out;
}

enum class DualDenominator {
  image,    // sum over phi^{-1}(x) for the column x = phi(y)
  printed,  // sum over phi^{-1}(y); kept for comparison only
};

inline TruncatedOperator cauchy_dual(const TruncatedOperator& op, const SystemSpec& spec,
                                     DualDenominator variant = DualDenominator::image) {
  const GramDiagonal g = gram_diagonal(op, spec);
  for (Index x = 0; x < spec.size(); ++x)
    if (g.interior[x] && g.values[x] == 0.0)
      throw Error(ErrorKind::not_left_invertible, "C*C vanishes at '" + spec.id(x) + "'");
  const auto& w = op.composition_weights();
  std::vector<Complex> dual(spec.size(), Complex(0));
  std::vector<bool> row_exact(spec.size());
  for (Index y = 0; y < spec.size(); ++y) {
    const Image& img = spec.phi(y);
    if (img.kind == ImageKind::root) {
      row_exact[y] = true;
      continue;
    }
    if (img.kind == ImageKind::outside) {
      row_exact[y] = false;
      continue;
    }
    const Index ref = variant == DualDenominator::image ? img.index : y;
    if (g.values[ref] > 0.0) dual[y] = w[y] / g.values[ref];
    row_exact[y] = spec.preimage_complete(ref);
  }
  return detail::composition_from_weights(
      spec, dual, std::move(row_exact),
      variant == DualDenominator::image ? "Cauchy dual" : "Cauchy dual (printed denominator)");
}

/// T (T*T)^{-1} by a dense solve restricted to the columns in `interior`.
inline Matrix dense_cauchy_dual(const Matrix& t, const std::vector<bool>& interior) {
  std::vector<Eigen::Index> cols;
  for (Index j = 0; j < interior.size(); ++j)
    if (interior[j]) cols.push_back(static_cast<Eigen::Index>(j));
  const auto m = static_cast<Eigen::Index>(cols.size());
  Matrix ti(t.rows(), m);
  for (Eigen::Index k = 0; k < m; ++k) ti.col(k) = t.col(cols[static_cast<Index>(k)]);
  const Matrix gram = ti.adjoint() * ti;
  const Matrix solved = gram.partialPivLu().solve(Matrix::Identity(m, m));
  const Matrix d = ti * solved;
  Matrix out = Matrix::Zero(t.rows(), t.cols());
  for (Eigen::Index k = 0; k < m; ++k) out.col(cols[static_cast<Index>(k)]) = d.col(k);
  return out;
}

// ---------------------------------------------------------------------------

struct WanderingSubspace {
  Matrix basis;                          // window_size x dim, orthonormal columns
  std::vector<Index> support;
  std::vector<std::string> construction_trace;
  bool truncated = false;                // some child block is cut by the window
  std::uint64_t tag = 0;                 // identity for pairing compatibility

  Index dim() const { return static_cast<Index>(basis.cols()); }
  Index window() const { return static_cast<Index>(basis.rows()); }
  TrackedVector vector(Index b) const { return TrackedVector(basis.col(static_cast<Eigen::Index>(b))); }
  Vector project(const Vector& x) const { return basis.adjoint() * x; }
};

namespace detail {

inline std::uint64_t fingerprint(const Matrix& basis) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(static_cast<std::uint64_t>(basis.rows()));
  mix(static_cast<std::uint64_t>(basis.cols()));
  for (Eigen::Index j = 0; j < basis.cols(); ++j)
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      const double re = std::round(basis(i, j).real() * 1e12);
      const double im = std::round(basis(i, j).imag() * 1e12);
      mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(re)));
      mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(im)));
    }
  return h;
}

inline void finalize(WanderingSubspace& e) {
  e.support = support_of(e.basis, 0.0);
  e.tag = fingerprint(e.basis);
}

}  // namespace detail

/// Orthonormal basis of C^m minus span{lambda}: columns 2..m of the Householder
/// reflection sending lambda/|lambda| to a multiple of the first coordinate.
inline Matrix orthonormal_complement(const Vector& lambda) {
  const Eigen::Index m = lambda.size();
  const double nrm = lambda.norm();
  if (nrm == 0.0) throw Error(ErrorKind::zero_weight_vector, "child weight vector is zero");
  const Vector v = lambda / nrm;
  const Complex v1 = v(0);
  const Complex alpha = std::abs(v1) == 0.0 ? Complex(-1.0) : -v1 / std::abs(v1);
  Vector u = v;
  u(0) -= alpha;
  Matrix h = Matrix::Identity(m, m);
  const double un = u.squaredNorm();
  if (un > 0.0) h -= 2.0 * u * u.adjoint() / un;
  return h.rightCols(m - 1);
}

inline WanderingSubspace subspace_from_vectors(Index window, const std::vector<Vector>& vectors,
                                               std::vector<std::string> trace = {}) {
  WanderingSubspace e;
  const auto n = static_cast<Eigen::Index>(window);
  std::vector<Vector> kept;
  for (const Vector& v : vectors) {
    if (v.size() != n) throw Error(ErrorKind::mismatched_subspace, "vector length differs from window");
    Vector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : kept) r -= q.dot(r) * q;
    const double nr = r.norm();
    if (nr > 1e-12 * std::max(1.0, v.norm())) kept.push_back(r / nr);
  }
  e.basis = Matrix::Zero(n, static_cast<Eigen::Index>(kept.size()));
  for (Index k = 0; k < kept.size(); ++k) e.basis.col(static_cast<Eigen::Index>(k)) = kept[k];
  e.construction_trace = std::move(trace);
  e.construction_trace.resize(kept.size(), "explicit");
  detail::finalize(e);
  return e;
}

namespace detail {

inline void append_complements(const SystemSpec& spec, const std::vector<Index>& region,
                               std::vector<Vector>& out, std::vector<std::string>& trace, bool& truncated) {
  const auto n = static_cast<Eigen::Index>(spec.size());
  for (Index u : region) {
    const auto& kids = spec.preimages(u);
    if (!spec.preimage_complete(u)) truncated = true;
    if (kids.size() < 2) continue;
    Vector lambda(static_cast<Eigen::Index>(kids.size()));
    for (Index c = 0; c < kids.size(); ++c) lambda(static_cast<Eigen::Index>(c)) = spec.weight(kids[c]);
    const Matrix comp = orthonormal_complement(lambda);
    for (Eigen::Index col = 0; col < comp.cols(); ++col) {
      Vector v = Vector::Zero(n);
      for (Index c = 0; c < kids.size(); ++c) v(static_cast<Eigen::Index>(kids[c])) = comp(static_cast<Eigen::Index>(c), col);
      out.push_back(std::move(v));
      trace.push_back("complement:" + spec.id(u));
    }
  }
}

}  // namespace detail

/// E per orbit: with a cycle, e_x plus the child-block complements inside
/// des(x) for each x of level 1; without, e at the level anchor plus the
/// complements at every branching vertex of the orbit.
inline WanderingSubspace wandering_subspace(const SystemSpec& spec, const OrbitStructure& orbits) {
  std::vector<Vector> vectors;
  std::vector<std::string> trace;
  bool truncated = false;
  const auto n = static_cast<Eigen::Index>(spec.size());
  auto unit = [&](Index x) {
    Vector v = Vector::Zero(n);
    v(static_cast<Eigen::Index>(x)) = 1.0;
    return v;
  };

  for (const Orbit& orbit : orbits.orbits) {
    if (orbit.has_cycle()) {
      std::vector<Index> gen1;
      for (Index x : orbit.points)
        if (orbits.level[x] == 1) gen1.push_back(x);
      if (gen1.empty()) {
        vectors.push_back(unit(orbit.cycle.front()));
        trace.push_back("cycle_point:" + spec.id(orbit.cycle.front()));
        continue;
      }
      for (Index x : gen1) {
        vectors.push_back(unit(x));
        trace.push_back("generation_one:" + spec.id(x));
        const PointSet des = descendants(spec, x);
        detail::append_complements(spec, des.points, vectors, trace, truncated);
      }
    } else {
      vectors.push_back(unit(orbit.anchor));
      trace.push_back((orbit.root ? "root:" : (orbit.omega ? "omega:" : "anchor:")) + spec.id(orbit.anchor));
      const PointSet des = descendants(spec, orbit.anchor);
      detail::append_complements(spec, des.points, vectors, trace, truncated);
    }
  }

  WanderingSubspace e;
  e.basis = Matrix::Zero(n, static_cast<Eigen::Index>(vectors.size()));
  for (Index k = 0; k < vectors.size(); ++k) e.basis.col(static_cast<Eigen::Index>(k)) = vectors[k];
  e.construction_trace = std::move(trace);
  e.truncated = truncated;
  detail::finalize(e);
  return e;
}

/// The part of N(C*) that the window determines: e_r for each root r and the
/// complement of the child weight vector at every branching vertex.
inline WanderingSubspace adjoint_kernel(const SystemSpec& spec) {
  std::vector<Vector> vectors;
  std::vector<std::string> trace;
  bool truncated = false;
  const auto n = static_cast<Eigen::Index>(spec.size());
  std::vector<Index> all(spec.size());
  for (Index x = 0; x < spec.size(); ++x) {
    all[x] = x;
    if (spec.phi(x).kind == ImageKind::root) {
      Vector v = Vector::Zero(n);
      v(static_cast<Eigen::Index>(x)) = 1.0;
      vectors.push_back(std::move(v));
      trace.push_back("root:" + spec.id(x));
    }
  }
  detail::append_complements(spec, all, vectors, trace, truncated);
  WanderingSubspace e;
  e.basis = Matrix::Zero(n, static_cast<Eigen::Index>(vectors.size()));
  for (Index k = 0; k < vectors.size(); ++k) e.basis.col(static_cast<Eigen::Index>(k)) = vectors[k];
  e.construction_trace = std::move(trace);
  e.truncated = truncated;
  detail::finalize(e);
  return e;
}

}  // namespace limodel
