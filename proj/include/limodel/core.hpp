#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace limodel {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
using Index = std::size_t;

inline constexpr const char* kVersion = "0.3.1";

/// Failure categories raised by the library. Every throw site picks exactly one.
enum class ErrorKind {
  boundary_exit,       // an iterate left the materialized window
  undefined_image,     // phi is undefined at a root
  window_too_small,    // a structural query cannot complete inside the window
  unbounded_support,   // k_phi has no finite answer in the window
  index_range,         // negative W-set index on an orbit with a cycle
  invalid_system,      // malformed SystemSpec (zero weight, bad phi, ...)
  not_left_invertible,
  zero_weight_vector,
  mismatched_subspace,
  outside_annulus,
  formal_mode,         // point evaluation requested while r+ <= r-
  singular_resolvent,
  not_applicable,
  config_parse,
  config_validation,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::boundary_exit: return "boundary_exit";
    case ErrorKind::undefined_image: return "undefined_image";
    case ErrorKind::window_too_small: return "window_too_small";
    case ErrorKind::unbounded_support: return "unbounded_support";
    case ErrorKind::index_range: return "index_range";
    case ErrorKind::invalid_system: return "invalid_system";
    case ErrorKind::not_left_invertible: return "not_left_invertible";
    case ErrorKind::zero_weight_vector: return "zero_weight_vector";
    case ErrorKind::mismatched_subspace: return "mismatched_subspace";
    case ErrorKind::outside_annulus: return "outside_annulus";
    case ErrorKind::formal_mode: return "formal_mode";
    case ErrorKind::singular_resolvent: return "singular_resolvent";
    case ErrorKind::not_applicable: return "not_applicable";
    case ErrorKind::config_parse: return "config_parse";
    case ErrorKind::config_validation: return "config_validation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// ---------------------------------------------------------------------------
// Window vectors with exactness bookkeeping.
//
// A window vector is the restriction to the materialized window of a vector in
// l2(X). `tainted[i]` marks entries whose value may differ from the true one;
// `up` and `down` record that the true vector may carry mass outside the
// window, among ancestors of points whose image leaves the window or among
// unlisted preimages. A freshly built window vector is exact.
// ---------------------------------------------------------------------------
struct TrackedVector {
  Vector value;
  std::vector<bool> tainted;
  bool up = false;
  bool down = false;

  TrackedVector() = default;
  explicit TrackedVector(Vector v)
      : value(std::move(v)), tainted(static_cast<std::size_t>(value.size()), false) {}

  static TrackedVector basis(Index n, Index i, Complex scale = 1.0) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
    v(static_cast<Eigen::Index>(i)) = scale;
    return TrackedVector(std::move(v));
  }

  Index size() const { return static_cast<Index>(value.size()); }
  bool outside() const { return up || down; }

  bool exact() const {
    if (outside()) return false;
    for (bool t : tainted)
      if (t) return false;
    return true;
  }

  bool any_taint() const {
    for (bool t : tainted)
      if (t) return true;
    return false;
  }
};

/// True when <a, b> computed on the window equals the inner product of the
/// underlying l2(X) vectors.
inline bool pairing_exact(const TrackedVector& a, const TrackedVector& b) {
  if ((a.up && b.up) || (a.down && b.down)) return false;
  for (Index i = 0; i < a.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (a.tainted[i] && (b.tainted[i] || b.value(k) != Complex(0))) return false;
    if (b.tainted[i] && a.value(k) != Complex(0)) return false;
  }
  return true;
}

inline TrackedVector operator-(const TrackedVector& a, const TrackedVector& b) {
  TrackedVector out(a.value - b.value);
  for (Index i = 0; i < out.size(); ++i) out.tainted[i] = a.tainted[i] || b.tainted[i];
  out.up = a.up || b.up;
  out.down = a.down || b.down;
  return out;
}

inline TrackedVector operator+(const TrackedVector& a, const TrackedVector& b) {
  TrackedVector out(a.value + b.value);
  for (Index i = 0; i < out.size(); ++i) out.tainted[i] = a.tainted[i] || b.tainted[i];
  out.up = a.up || b.up;
  out.down = a.down || b.down;
  return out;
}

inline TrackedVector operator*(Complex s, const TrackedVector& a) {
  TrackedVector out(s * a.value);
  out.tainted = a.tainted;
  out.up = a.up && s != Complex(0);
  out.down = a.down && s != Complex(0);
  return out;
}

}  // namespace limodel
