#pragma once

// Built-in system families: finite cycles, bilateral shifts, a ray attached to
// a cycle, rooted rays, rooted trees and rootless trees with attached rays.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "limodel/core.hpp"
#include "limodel/dynamics.hpp"

namespace limodel::systems {

/// Points "1".."n", phi(i) = i+1, phi(n) = 1, w(i) = weights[i-1].
inline SystemSpec cycle(const std::vector<Complex>& weights) {
  const Index n = weights.size();
  if (n == 0) throw Error(ErrorKind::invalid_system, "cycle needs at least one point");
  std::vector<std::string> ids;
  std::vector<Image> phi;
  for (Index i = 0; i < n; ++i) {
    ids.push_back(std::to_string(i + 1));
    phi.push_back(Image::to((i + 1) % n));
  }
  return SystemSpec(ids, phi, weights, std::vector<bool>(n, true),
                    {"cycle", static_cast<std::int64_t>(n), std::nullopt});
}

enum class BilateralRule { unit, half_below_zero };

inline Complex bilateral_weight(BilateralRule rule, std::int64_t n) {
  if (rule == BilateralRule::half_below_zero && n <= 0) return 0.5;
  return 1.0;
}

/// Points -N..N, phi(n) = n-1, w(n) = lambda_n. phi(-N) leaves the window and
/// phi^{-1}(N) = {N+1} does not fit.
inline SystemSpec bilateral(std::int64_t half_width, const std::function<Complex(std::int64_t)>& weight) {
  if (half_width < 1) throw Error(ErrorKind::invalid_system, "bilateral window needs half-width >= 1");
  std::vector<std::string> ids;
  std::vector<Image> phi;
  std::vector<Complex> w;
  std::vector<bool> complete;
  for (std::int64_t k = -half_width; k <= half_width; ++k) {
    ids.push_back(std::to_string(k));
    phi.push_back(k == -half_width ? Image::beyond() : Image::to(static_cast<Index>(k - 1 + half_width)));
    w.push_back(weight(k));
    complete.push_back(k < half_width);
  }
  return SystemSpec(ids, phi, w, complete, {"bilateral", half_width, static_cast<Index>(half_width)});
}

inline SystemSpec bilateral(std::int64_t half_width, BilateralRule rule) {
  return bilateral(half_width, [rule](std::int64_t n) { return bilateral_weight(rule, n); });
}

/// Cycle 0 -> k -> k-1 -> ... -> 0 with a ray (1,0), (1,1), ... attached at k:
/// phi(i) = i-1 for 1 <= i <= k, phi(0) = k, phi((1,0)) = k, phi((1,i)) = (1,i-1).
inline SystemSpec ray_cycle(std::int64_t k, const std::vector<Complex>& cycle_weights,
                            const std::function<Complex(std::int64_t)>& ray_weight, std::int64_t ray_length) {
  if (k < 0) throw Error(ErrorKind::invalid_system, "ray_cycle needs k >= 0");
  if (ray_length < 1) throw Error(ErrorKind::invalid_system, "ray_cycle needs a ray of length >= 1");
  if (cycle_weights.size() != static_cast<Index>(k + 1))
    throw Error(ErrorKind::invalid_system, "ray_cycle needs k+1 cycle weights");
  std::vector<std::string> ids;
  std::vector<Image> phi;
  std::vector<Complex> w;
  std::vector<bool> complete;
  const auto top = static_cast<Index>(k);
  for (std::int64_t i = 0; i <= k; ++i) {
    ids.push_back(std::to_string(i));
    phi.push_back(Image::to(i == 0 ? top : static_cast<Index>(i - 1)));
    w.push_back(cycle_weights[static_cast<Index>(i)]);
    complete.push_back(true);
  }
  for (std::int64_t i = 0; i < ray_length; ++i) {
    ids.push_back("(1," + std::to_string(i) + ")");
    phi.push_back(Image::to(i == 0 ? top : static_cast<Index>(k + i)));
    w.push_back(ray_weight(i));
    complete.push_back(i + 1 < ray_length);
  }
  return SystemSpec(ids, phi, w, complete, {"ray_cycle", ray_length, std::nullopt});
}

/// Points 0..N, 0 the root, phi(i) = i-1, w(i) = weight for i >= 1.
inline SystemSpec rooted_ray(std::int64_t length, Complex weight = 1.0) {
  if (length < 1) throw Error(ErrorKind::invalid_system, "rooted_ray needs length >= 1");
  std::vector<std::string> ids;
  std::vector<Image> phi;
  std::vector<Complex> w;
  std::vector<bool> complete;
  for (std::int64_t i = 0; i <= length; ++i) {
    ids.push_back(std::to_string(i));
    phi.push_back(i == 0 ? Image::none() : Image::to(static_cast<Index>(i - 1)));
    w.push_back(i == 0 ? Complex(1.0) : weight);
    complete.push_back(i < length);
  }
  return SystemSpec(ids, phi, w, complete, {"rooted_ray", length, std::nullopt});
}

/// Root "r", a spine s1..s_m below it, and one ray b<j>_1, b<j>_2, ... per
/// entry of `ray_weights` hanging from the last spine vertex (or the root).
inline SystemSpec branching_tree(std::int64_t spine, const std::vector<Complex>& ray_weights,
                                 std::int64_t ray_length, Complex spine_weight = 1.0) {
  if (spine < 0 || ray_length < 1 || ray_weights.empty())
    throw Error(ErrorKind::invalid_system, "branching_tree needs spine >= 0, rays and ray length >= 1");
  std::vector<std::string> ids{"r"};
  std::vector<Image> phi{Image::none()};
  std::vector<Complex> w{1.0};
  std::vector<bool> complete{true};
  for (std::int64_t s = 1; s <= spine; ++s) {
    ids.push_back("s" + std::to_string(s));
    phi.push_back(Image::to(static_cast<Index>(s - 1)));
    w.push_back(spine_weight);
    complete.push_back(true);
  }
  const auto branch = static_cast<Index>(spine);
  for (Index j = 0; j < ray_weights.size(); ++j) {
    for (std::int64_t i = 1; i <= ray_length; ++i) {
      ids.push_back("b" + std::to_string(j) + "_" + std::to_string(i));
      phi.push_back(Image::to(i == 1 ? branch : ids.size() - 2));
      w.push_back(ray_weights[j]);
      complete.push_back(i < ray_length);
    }
  }
  return SystemSpec(ids, phi, w, complete, {"branching_tree", ray_length, std::nullopt});
}

/// A rootless backbone b_{-N}..b_N (phi(b_n) = b_{n-1}) with rays r<j>_0,
/// r<j>_1, ... attached at b_0. Weights: `above` on b_n with n <= 0, `below`
/// on b_n with n > 0, ray_weights[j] along ray j.
inline SystemSpec ray_line(std::int64_t half_width, Complex above, Complex below,
                           const std::vector<Complex>& ray_weights) {
  if (half_width < 1) throw Error(ErrorKind::invalid_system, "ray_line needs half-width >= 1");
  std::vector<std::string> ids;
  std::vector<Image> phi;
  std::vector<Complex> w;
  std::vector<bool> complete;
  for (std::int64_t k = -half_width; k <= half_width; ++k) {
    ids.push_back("b" + std::to_string(k));
    phi.push_back(k == -half_width ? Image::beyond() : Image::to(ids.size() - 2));
    w.push_back(k <= 0 ? above : below);
    complete.push_back(k < half_width);
  }
  const auto hub = static_cast<Index>(half_width);
  for (Index j = 0; j < ray_weights.size(); ++j) {
    for (std::int64_t i = 0; i < half_width; ++i) {
      ids.push_back("r" + std::to_string(j) + "_" + std::to_string(i));
      phi.push_back(Image::to(i == 0 ? hub : ids.size() - 2));
      w.push_back(ray_weights[j]);
      complete.push_back(i + 1 < half_width);
    }
  }
  return SystemSpec(ids, phi, w, complete, {"ray_line", half_width, hub});
}

struct TreeNode {
  std::string id;
  std::optional<std::string> parent;  // empty for the root
  Complex weight = 1.0;
  bool complete = true;               // all children are listed
};

/// Directed tree from explicit parent links; phi = parent.
inline SystemSpec rooted_tree(const std::vector<TreeNode>& nodes) {
  std::map<std::string, Index> pos;
  for (Index i = 0; i < nodes.size(); ++i) pos.emplace(nodes[i].id, i);
  std::vector<std::string> ids;
  std::vector<Image> phi;
  std::vector<Complex> w;
  std::vector<bool> complete;
  for (const TreeNode& node : nodes) {
    ids.push_back(node.id);
    if (!node.parent) {
      phi.push_back(Image::none());
    } else {
      auto it = pos.find(*node.parent);
      if (it == pos.end()) throw Error(ErrorKind::invalid_system, "unknown parent '" + *node.parent + "'");
      phi.push_back(Image::to(it->second));
    }
    w.push_back(node.weight);
    complete.push_back(node.complete);
  }
  SystemSpec spec(ids, phi, w, complete, {"rooted_tree", static_cast<std::int64_t>(nodes.size()), std::nullopt});
  DirectedTree::from_system(spec);
  return spec;
}

}  // namespace limodel::systems
