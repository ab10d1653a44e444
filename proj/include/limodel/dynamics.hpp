#pragma once

// Countable-set dynamical systems (X, phi, w) materialized on a finite window,
// and the combinatorics built on them: orbits, cycles, the level function,
// generation sets, descendants, the branching index, omega, k_phi and W-sets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "limodel/core.hpp"

namespace limodel {

inline constexpr Index kMaxWindowPoints = 4096;

enum class ImageKind : std::uint8_t {
  inside,   // phi(x) is a window point
  root,     // phi(x) is undefined: x is the root of a directed tree
  outside,  // phi(x) exists in X but lies beyond the window
};

struct Image {
  ImageKind kind = ImageKind::inside;
  Index index = 0;

  static Image to(Index i) { return {ImageKind::inside, i}; }
  static Image none() { return {ImageKind::root, 0}; }
  static Image beyond() { return {ImageKind::outside, 0}; }
  bool inside() const { return kind == ImageKind::inside; }
};

/// Generation rule of a built-in family. `extent` is the window size parameter
/// the family was generated with; `anchor` is the point whose level is pinned
/// to zero on branch-free rootless orbits.
struct WindowMeta {
  std::string family = "inline";
  std::int64_t extent = 0;
  std::optional<Index> anchor;
};

class SystemSpec {
 public:
  SystemSpec() = default;

  /// `preimage_complete[x]` is false when phi^{-1}(x) may contain points that
  /// lie outside the window.
  SystemSpec(std::vector<std::string> points, std::vector<Image> phi,
             std::vector<Complex> weights, std::vector<bool> preimage_complete,
             WindowMeta meta = {})
      : points_(std::move(points)),
        phi_(std::move(phi)),
        weights_(std::move(weights)),
        complete_(std::move(preimage_complete)),
        meta_(std::move(meta)) {
    validate();
    preimages_.assign(points_.size(), {});
    for (Index y = 0; y < points_.size(); ++y)
      if (phi_[y].inside()) preimages_[phi_[y].index].push_back(y);
  }

  Index size() const { return points_.size(); }
  const std::string& id(Index i) const { return points_.at(i); }
  const std::vector<std::string>& ids() const { return points_; }
  const Image& phi(Index i) const { return phi_.at(i); }
  Complex weight(Index i) const { return weights_.at(i); }
  const std::vector<Complex>& weights() const { return weights_; }
  bool preimage_complete(Index i) const { return complete_.at(i); }
  const std::vector<Index>& preimages(Index i) const { return preimages_.at(i); }
  const WindowMeta& meta() const { return meta_; }

  std::optional<Index> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Index at(const std::string& id) const {
    auto i = find(id);
    if (!i) throw Error(ErrorKind::invalid_system, "unknown point '" + id + "'");
    return *i;
  }

  /// True when no phi-image leaves the window and every preimage set is complete.
  bool closed() const {
    for (Index i = 0; i < size(); ++i)
      if (phi_[i].kind == ImageKind::outside || !complete_[i]) return false;
    return true;
  }

 private:
  void validate() {
    const Index n = points_.size();
    if (n == 0) throw Error(ErrorKind::invalid_system, "empty point set");
    if (n > kMaxWindowPoints)
      throw Error(ErrorKind::invalid_system,
                  "window has " + std::to_string(n) + " points, cap is " +
                      std::to_string(kMaxWindowPoints));
    if (phi_.size() != n || weights_.size() != n || complete_.size() != n)
      throw Error(ErrorKind::invalid_system, "phi, weights and points differ in length");
    for (Index i = 0; i < n; ++i) {
      if (!index_.emplace(points_[i], i).second)
        throw Error(ErrorKind::invalid_system, "duplicate point '" + points_[i] + "'");
      if (phi_[i].inside() && phi_[i].index >= n)
        throw Error(ErrorKind::invalid_system, "phi of '" + points_[i] + "' out of range");
      if (weights_[i] == Complex(0))
        throw Error(ErrorKind::invalid_system, "zero weight at '" + points_[i] + "'");
      if (!std::isfinite(weights_[i].real()) || !std::isfinite(weights_[i].imag()))
        throw Error(ErrorKind::invalid_system, "non-finite weight at '" + points_[i] + "'");
    }
  }

  std::vector<std::string> points_;
  std::vector<Image> phi_;
  std::vector<Complex> weights_;
  std::vector<bool> complete_;
  WindowMeta meta_;
  std::unordered_map<std::string, Index> index_;
  std::vector<std::vector<Index>> preimages_;
};

// ---------------------------------------------------------------------------

inline Index iterate(const SystemSpec& spec, Index x, std::int64_t n) {
  if (n < 0) throw Error(ErrorKind::index_range, "negative iterate count");
  Index cur = x;
  for (std::int64_t k = 0; k < n; ++k) {
    const Image& img = spec.phi(cur);
    if (img.kind == ImageKind::root)
      throw Error(ErrorKind::undefined_image, "phi undefined at root '" + spec.id(cur) + "'");
    if (img.kind == ImageKind::outside)
      throw Error(ErrorKind::boundary_exit,
                  "iterate of '" + spec.id(x) + "' leaves the window at step " +
                      std::to_string(k + 1));
    cur = img.index;
  }
  return cur;
}

struct Orbit {
  std::vector<Index> points;   // ascending
  std::vector<Index> cycle;    // phi-order from the smallest cycle index; empty if none
  std::optional<Index> root;   // point with undefined phi
  std::optional<Index> omega;  // topmost branching vertex of a cycle-free orbit
  Index anchor = 0;            // level-zero reference point

  bool has_cycle() const { return !cycle.empty(); }
};

struct OrbitStructure {
  std::vector<Orbit> orbits;
  std::vector<Index> orbit_of;
  std::vector<std::int64_t> level;
  std::vector<bool> on_cycle;
  std::vector<Index> branching_points;  // card(phi^{-1}(x)) >= 2 inside the window
  std::int64_t branching_index = 0;

  bool has_cycle() const {
    return std::any_of(orbits.begin(), orbits.end(), [](const Orbit& o) { return o.has_cycle(); });
  }
  const Orbit& orbit_containing(Index x) const { return orbits.at(orbit_of.at(x)); }
  /// omega of the first cycle-free orbit that has branching; empty otherwise.
  std::optional<Index> omega() const {
    for (const auto& o : orbits)
      if (!o.has_cycle() && o.omega) return o.omega;
    return std::nullopt;
  }
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(Index n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  Index find(Index x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<Index> parent_;
};

// Floyd tortoise/hare on the functional graph. Returns a point on the cycle
// reachable from `start`, or nothing if the forward orbit terminates.
inline std::optional<Index> find_cycle_point(const SystemSpec& spec, Index start) {
  auto step = [&](Index x) -> std::optional<Index> {
    const Image& img = spec.phi(x);
    if (!img.inside()) return std::nullopt;
    return img.index;
  };
  Index tortoise = start;
  Index hare = start;
  const Index bound = 2 * spec.size() + 2;
  for (Index k = 0; k < bound; ++k) {
    auto t = step(tortoise);
    auto h1 = step(hare);
    if (!t || !h1) return std::nullopt;
    auto h2 = step(*h1);
    if (!h2) return std::nullopt;
    tortoise = *t;
    hare = *h2;
    if (tortoise == hare) return tortoise;
  }
  throw Error(ErrorKind::window_too_small, "cycle detection exceeded the window bound");
}

}  // namespace detail

inline OrbitStructure analyze_orbits(const SystemSpec& spec) {
  const Index n = spec.size();
  OrbitStructure out;
  out.orbit_of.assign(n, 0);
  out.level.assign(n, 0);
  out.on_cycle.assign(n, false);

  detail::DisjointSets sets(n);
  for (Index x = 0; x < n; ++x)
    if (spec.phi(x).inside()) sets.unite(x, spec.phi(x).index);

  std::vector<Index> rep_to_orbit(n, n);
  for (Index x = 0; x < n; ++x) {
    const Index r = sets.find(x);
    if (rep_to_orbit[r] == n) {
      rep_to_orbit[r] = out.orbits.size();
      out.orbits.emplace_back();
    }
    out.orbit_of[x] = rep_to_orbit[r];
    out.orbits[rep_to_orbit[r]].points.push_back(x);
  }

  for (Index oi = 0; oi < out.orbits.size(); ++oi) {
    Orbit& orbit = out.orbits[oi];
    auto on_cycle = detail::find_cycle_point(spec, orbit.points.front());

    if (on_cycle) {
      std::vector<Index> cyc;
      Index cur = *on_cycle;
      do {
        cyc.push_back(cur);
        cur = spec.phi(cur).index;
      } while (cur != *on_cycle);
      auto smallest = std::min_element(cyc.begin(), cyc.end());
      std::rotate(cyc.begin(), smallest, cyc.end());
      orbit.cycle = cyc;
      orbit.anchor = cyc.front();
      for (Index c : cyc) out.on_cycle[c] = true;

      // depth below the cycle
      std::queue<Index> frontier;
      std::vector<bool> seen(n, false);
      for (Index c : cyc) {
        seen[c] = true;
        out.level[c] = 0;
        frontier.push(c);
      }
      while (!frontier.empty()) {
        const Index u = frontier.front();
        frontier.pop();
        for (Index y : spec.preimages(u)) {
          if (seen[y]) continue;
          seen[y] = true;
          out.level[y] = out.level[u] + 1;
          frontier.push(y);
        }
      }
      continue;
    }

    // Cycle-free: the orbit is a tree hanging from a unique terminal point.
    Index terminal = orbit.points.front();
    while (spec.phi(terminal).inside()) terminal = spec.phi(terminal).index;
    if (spec.phi(terminal).kind == ImageKind::root) orbit.root = terminal;

    Index walk = terminal;
    while (true) {
      const auto& pre = spec.preimages(walk);
      if (pre.size() >= 2) {
        orbit.omega = walk;
        break;
      }
      if (pre.empty()) break;
      walk = pre.front();
    }

    std::vector<std::int64_t> depth(n, 0);
    std::queue<Index> frontier;
    frontier.push(terminal);
    while (!frontier.empty()) {
      const Index u = frontier.front();
      frontier.pop();
      for (Index y : spec.preimages(u)) {
        depth[y] = depth[u] + 1;
        frontier.push(y);
      }
    }

    if (orbit.root) {
      orbit.anchor = *orbit.root;
    } else if (orbit.omega) {
      orbit.anchor = *orbit.omega;
    } else if (spec.meta().anchor && out.orbit_of[*spec.meta().anchor] == oi) {
      orbit.anchor = *spec.meta().anchor;
    } else {
      orbit.anchor = terminal;
    }
    for (Index x : orbit.points) out.level[x] = depth[x] - depth[orbit.anchor];
  }

  for (Index x = 0; x < n; ++x) {
    if (spec.preimages(x).size() >= 2) {
      out.branching_points.push_back(x);
      out.branching_index = std::max(out.branching_index, out.level[x]);
    }
  }
  return out;
}

/// {x : m <= level(x) <= n}, ascending.
inline std::vector<Index> gen_range(const OrbitStructure& orbits, std::int64_t m, std::int64_t n) {
  if (m > n) throw Error(ErrorKind::index_range, "gen_range requires m <= n");
  std::vector<Index> out;
  for (Index x = 0; x < orbits.level.size(); ++x)
    if (orbits.level[x] >= m && orbits.level[x] <= n) out.push_back(x);
  return out;
}

struct PointSet {
  std::vector<Index> points;  // ascending
  bool truncated = false;     // the true set may extend beyond the window
};

/// Reverse-reachability: every point whose forward orbit reaches x.
inline PointSet descendants(const SystemSpec& spec, Index x) {
  PointSet out;
  std::vector<bool> seen(spec.size(), false);
  std::queue<Index> frontier;
  seen[x] = true;
  frontier.push(x);
  while (!frontier.empty()) {
    const Index u = frontier.front();
    frontier.pop();
    out.points.push_back(u);
    if (!spec.preimage_complete(u)) out.truncated = true;
    for (Index y : spec.preimages(u)) {
      if (seen[y]) continue;
      seen[y] = true;
      frontier.push(y);
    }
  }
  std::sort(out.points.begin(), out.points.end());
  return out;
}

/// Smallest n with the support inside the generations 1..n (orbits with a
/// cycle) or 0..n measured from the anchor (cycle-free orbits). Empty support
/// gives 1.
inline std::int64_t k_phi(const OrbitStructure& orbits, const std::vector<Index>& support) {
  if (support.empty()) return 1;
  std::int64_t k = 0;
  for (Index x : support) {
    const Orbit& orbit = orbits.orbit_containing(x);
    const std::int64_t lvl = orbits.level.at(x);
    if (orbit.has_cycle() && lvl < 1)
      throw Error(ErrorKind::not_applicable,
                  "support point on the cycle; k_phi needs levels >= 1");
    if (!orbit.has_cycle() && lvl < 0)
      throw Error(ErrorKind::unbounded_support, "support point above the level anchor");
    k = std::max(k, lvl);
  }
  return k;
}

inline std::vector<Index> support_of(const Matrix& basis, double tol = 0.0) {
  std::vector<Index> out;
  if (basis.cols() == 0) return out;
  for (Eigen::Index i = 0; i < basis.rows(); ++i)
    if (basis.row(i).cwiseAbs().maxCoeff() > tol) out.push_back(static_cast<Index>(i));
  return out;
}

/// W^{E,phi}_n. On orbits with a cycle W_0 = Gen(1, k); on cycle-free orbits
/// W_0 = Gen(0, k) restricted to des(omega). Positive n takes phi-preimages,
/// negative n takes phi-images.
inline PointSet w_set(const OrbitStructure& orbits, const SystemSpec& spec,
                      const std::vector<Index>& support, std::int64_t n) {
  PointSet out;
  if (support.empty()) return out;
  const std::int64_t k = k_phi(orbits, support);

  std::vector<Index> touched;
  for (Index x : support) touched.push_back(orbits.orbit_of.at(x));
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  std::vector<bool> in_w(spec.size(), false);
  for (Index oi : touched) {
    const Orbit& orbit = orbits.orbits[oi];
    if (orbit.has_cycle()) {
      if (n < 0) throw Error(ErrorKind::index_range, "W_n with n < 0 on an orbit with a cycle");
      for (Index x : orbit.points)
        if (orbits.level[x] >= 1 && orbits.level[x] <= k) in_w[x] = true;
    } else {
      PointSet des = descendants(spec, orbit.anchor);
      for (Index x : des.points)
        if (orbits.level[x] >= 0 && orbits.level[x] <= k) in_w[x] = true;
    }
  }

  std::vector<Index> current;
  for (Index x = 0; x < spec.size(); ++x)
    if (in_w[x]) current.push_back(x);

  for (std::int64_t step = 0; step < (n < 0 ? -n : n); ++step) {
    std::vector<Index> next;
    for (Index x : current) {
      if (n > 0) {
        if (!spec.preimage_complete(x)) out.truncated = true;
        for (Index y : spec.preimages(x)) next.push_back(y);
      } else {
        const Image& img = spec.phi(x);
        if (img.inside())
          next.push_back(img.index);
        else if (img.kind == ImageKind::outside)
          out.truncated = true;
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    current = std::move(next);
  }
  out.points = std::move(current);
  return out;
}

// ---------------------------------------------------------------------------
// Directed trees.

struct DirectedTree {
  std::vector<std::optional<Index>> parent;
  std::vector<std::vector<Index>> children;
  std::optional<Index> root;
  std::vector<Index> branching_vertices;

  Index size() const { return parent.size(); }

  /// Throws unless parent/children are dual and the graph is a connected
  /// acyclic tree (checked by Kahn's topological sort from the top).
  void validate() const {
    const Index n = size();
    if (children.size() != n) throw Error(ErrorKind::invalid_system, "children size mismatch");
    Index tops = 0;
    for (Index v = 0; v < n; ++v) {
      if (!parent[v]) ++tops;
      for (Index c : children[v])
        if (!parent[c] || *parent[c] != v)
          throw Error(ErrorKind::invalid_system, "child without matching parent");
      if (parent[v]) {
        const auto& sib = children[*parent[v]];
        if (std::find(sib.begin(), sib.end(), v) == sib.end())
          throw Error(ErrorKind::invalid_system, "parent without matching child");
      }
    }
    if (tops != 1) throw Error(ErrorKind::invalid_system, "tree window must have exactly one top vertex");
    std::vector<Index> order;
    for (Index v = 0; v < n; ++v)
      if (!parent[v]) order.push_back(v);
    for (Index i = 0; i < order.size(); ++i)
      for (Index c : children[order[i]]) order.push_back(c);
    if (order.size() != n) throw Error(ErrorKind::invalid_system, "tree has a cycle or is disconnected");
  }

  /// Builds the tree of a cycle-free system: parent = phi. The top vertex of a
  /// rootless window (phi leaves the window) has no recorded parent.
  static DirectedTree from_system(const SystemSpec& spec) {
    DirectedTree t;
    const Index n = spec.size();
    t.parent.assign(n, std::nullopt);
    t.children.assign(n, {});
    for (Index v = 0; v < n; ++v) {
      const Image& img = spec.phi(v);
      if (img.inside()) {
        t.parent[v] = img.index;
        t.children[img.index].push_back(v);
      } else if (img.kind == ImageKind::root) {
        t.root = v;
      }
    }
    for (Index v = 0; v < n; ++v)
      if (t.children[v].size() >= 2) t.branching_vertices.push_back(v);
    t.validate();
    return t;
  }
};

}  // namespace limodel
