#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "emgda/core.hpp"

namespace emgda {

enum class KernelKind { gaussian, linear };

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double gamma = 1.0;

  static KernelSpec gaussian(double gamma) {
    require(gamma > 0.0, "kernel: gamma must be positive");
    return {KernelKind::gaussian, gamma};
  }
  static KernelSpec linear() { return {KernelKind::linear, 0.0}; }

  bool operator==(const KernelSpec&) const = default;
};

inline std::string to_string(KernelKind k) { return k == KernelKind::gaussian ? "gaussian" : "linear"; }

inline KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "gaussian") return KernelKind::gaussian;
  if (s == "linear") return KernelKind::linear;
  throw Error("unknown kernel kind '" + s + "'");
}

template <typename A, typename B>
double kernel(const KernelSpec& spec, const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  require(a.size() == b.size(), "kernel: dimension mismatch");
  if (spec.kind == KernelKind::linear) return a.dot(b);
  require(spec.gamma > 0.0, "kernel: gamma must be positive");
  return std::exp(-spec.gamma * (a - b).squaredNorm());
}

/// Pairwise kernel matrix between the rows of x (N x d) and z (M x d).
/// Gaussian distances use |a|^2 + |b|^2 - 2<a,b>, clamped at zero.
inline Matrix gram(const KernelSpec& spec, const Matrix& x, const Matrix& z) {
  require(x.cols() == z.cols(), "gram: dimension mismatch");
  Matrix k = x * z.transpose();
  if (spec.kind == KernelKind::linear) return k;
  require(spec.gamma > 0.0, "kernel: gamma must be positive");
  const Vector xn = x.rowwise().squaredNorm();
  const Vector zn = z.rowwise().squaredNorm();
  for (Index j = 0; j < k.cols(); ++j) {
    for (Index i = 0; i < k.rows(); ++i) {
      const double d2 = std::max(0.0, xn(i) + zn(j) - 2.0 * k(i, j));
      k(i, j) = std::exp(-spec.gamma * d2);
    }
  }
  return k;
}

/// Symmetric Gram matrix of x with itself; the diagonal is exact.
inline Matrix gram(const KernelSpec& spec, const Matrix& x) {
  Matrix k = gram(spec, x, x);
  // Enforce exact symmetry; the product above is symmetric only up to rounding.
  for (Index j = 0; j < k.cols(); ++j) {
    for (Index i = j + 1; i < k.rows(); ++i) k(j, i) = k(i, j);
    if (spec.kind == KernelKind::gaussian) k(j, j) = 1.0;
  }
  return k;
}

}  // namespace emgda
