#pragma once

// Dense reference computations that share no code with the library beyond
// reading a system's raw data.

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "limodel/dynamics.hpp"

namespace oracle {

using limodel::Complex;
using limodel::Index;
using limodel::Matrix;
using limodel::Vector;

/// phi as plain indices, -1 for no image inside the window.
struct Graph {
  std::vector<long> phi;
  std::vector<Complex> w;
  std::vector<bool> complete;
};

inline Graph graph(const limodel::SystemSpec& s) {
  Graph g;
  for (Index x = 0; x < s.size(); ++x) {
    g.phi.push_back(s.phi(x).inside() ? static_cast<long>(s.phi(x).index) : -1);
    g.w.push_back(s.weight(x));
    g.complete.push_back(s.preimage_complete(x));
  }
  return g;
}

/// (C f)(y) = w(y) f(phi(y)).
inline Matrix composition(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.phi.size());
  Matrix c = Matrix::Zero(n, n);
  for (Eigen::Index y = 0; y < n; ++y)
    if (g.phi[y] >= 0) c(y, g.phi[y]) = g.w[y];
  return c;
}

/// T (T*T)^{-1} with a full inverse of the Gram matrix restricted to `cols`.
inline Matrix cauchy_dual(const Matrix& t, const std::vector<Eigen::Index>& cols) {
  const auto m = static_cast<Eigen::Index>(cols.size());
  Matrix sub(t.rows(), m);
  for (Eigen::Index k = 0; k < m; ++k) sub.col(k) = t.col(cols[k]);
  const Matrix gram = sub.adjoint() * sub;
  const Matrix dual = sub * gram.inverse();
  Matrix out = Matrix::Zero(t.rows(), t.cols());
  for (Eigen::Index k = 0; k < m; ++k) out.col(cols[k]) = dual.col(k);
  return out;
}

inline std::vector<Eigen::Index> complete_columns(const Graph& g) {
  std::vector<Eigen::Index> cols;
  for (std::size_t x = 0; x < g.complete.size(); ++x)
    if (g.complete[x]) cols.push_back(static_cast<Eigen::Index>(x));
  return cols;
}

inline Matrix power(const Matrix& m, int n) {
  Matrix r = Matrix::Identity(m.rows(), m.cols());
  for (int k = 0; k < n; ++k) r = m * r;
  return r;
}

inline Complex szego(Complex z, Complex l) { return 1.0 / (1.0 - z * std::conj(l)); }

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = nd(rng);
    v(i) = Complex(re, nd(rng));
  }
  return v;
}

/// Nonzero complex weight with modulus in [0.5, 2].
inline Complex random_weight(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mod(0.5, 2.0), arg(0.0, 6.283185307179586);
  return std::polar(mod(rng), arg(rng));
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace oracle
