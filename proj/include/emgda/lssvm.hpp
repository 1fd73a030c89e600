#pragma once

#include <optional>
#include <utility>

#include "emgda/kernels.hpp"
#include "emgda/signals.hpp"

namespace emgda {

/// Dual-form one-vs-all LS-SVM. Score of class g at x is
/// sum_i alphas(i,g) * k(x_i, x) + biases(g).
struct LssvmModel {
  KernelSpec kernel;
  double C = 1.0;
  int num_classes = 0;
  Matrix support_inputs;  // N x d
  Matrix alphas;          // N x G
  Vector biases;          // G
  std::optional<NormStats> norm_stats;  // provenance only; inputs are expected pre-normalized

  Index input_dim() const { return support_inputs.cols(); }
};

struct Prediction {
  Labels labels;
  Matrix scores;  // M x G
};

/// The (N+1)x(N+1) LS-SVM system
///
///   [ 0   1^T       ] [ b ]   [ 0 ]
///   [ 1   K + I/C   ] [ a ] = [ y ]
///
/// solved through a Cholesky factorization of H = K + I/C and the Schur
/// complement on the bias row. With v = H^-1 1 and s = 1^T v the solution is
/// a = P y where P = H^-1 - v v^T / s, which is also the lower-right block of
/// the inverse system matrix used by the leave-one-out identity.
class DualSystem {
public:
  DualSystem(const Matrix& gram_matrix, double c) {
    require(c > 0.0, "lssvm: C must be positive");
    require(gram_matrix.rows() == gram_matrix.cols(), "lssvm: gram matrix must be square");
    require(gram_matrix.rows() >= 1, "lssvm: empty training set");
    Matrix h = gram_matrix;
    h.diagonal().array() += 1.0 / c;
    llt_.compute(h);
    if (llt_.info() != Eigen::Success) throw NumericError("lssvm: system matrix is not positive definite");
    v_ = llt_.solve(Vector::Ones(h.rows()));
    s_ = v_.sum();
    if (!v_.allFinite() || !(s_ > 0.0)) throw NumericError("lssvm: singular bias constraint");
  }

  Index size() const { return v_.size(); }

  /// Solves every column of `targets` (N x G). A column whose targets are all
  /// equal to c has the exact solution a = 0, b = c, which is returned as is.
  std::pair<Matrix, Vector> solve(const Matrix& targets) const {
    require(targets.rows() == size(), "lssvm: target rows != N");
    const Index g = targets.cols();
    Matrix alphas = Matrix::Zero(size(), g);
    Vector biases(g);
    for (Index c = 0; c < g; ++c) {
      const auto col = targets.col(c);
      if ((col.array() == col(0)).all()) {
        biases(c) = col(0);
        continue;
      }
      const Vector hy = llt_.solve(col);
      biases(c) = hy.sum() / s_;
      alphas.col(c) = hy - biases(c) * v_;
    }
    if (!alphas.allFinite() || !biases.allFinite()) throw NumericError("lssvm: non-finite solution");
    return {std::move(alphas), std::move(biases)};
  }

  /// P = H^-1 - v v^T / s (N x N, symmetric). O(N^3), computed once.
  const Matrix& projector() const {
    if (!projector_) {
      Matrix p = llt_.solve(Matrix::Identity(size(), size()));
      p.noalias() -= v_ * v_.transpose() / s_;
      if (!p.allFinite()) throw NumericError("lssvm: failed to invert system matrix");
      projector_ = std::move(p);
    }
    return *projector_;
  }

private:
  Eigen::LLT<Matrix> llt_;
  Vector v_;
  double s_ = 0.0;
  mutable std::optional<Matrix> projector_;
};

inline LssvmModel fit(const Dataset& train, const KernelSpec& kernel_spec, double c) {
  validate(train);
  require(train.size() >= 1, "lssvm: empty training set");
  require(train.num_classes >= 1, "lssvm: need at least one class");
  const DualSystem sys(gram(kernel_spec, train.features), c);
  auto [alphas, biases] = sys.solve(one_vs_all_targets(train.labels, train.num_classes));
  LssvmModel m;
  m.kernel = kernel_spec;
  m.C = c;
  m.num_classes = train.num_classes;
  m.support_inputs = train.features;
  m.alphas = std::move(alphas);
  m.biases = std::move(biases);
  m.norm_stats = train.norm_stats;
  return m;
}

inline Matrix decision_values(const LssvmModel& m, const Matrix& x) {
  require(x.cols() == m.input_dim(), "lssvm: input dimension mismatch");
  Matrix s = gram(m.kernel, x, m.support_inputs) * m.alphas;
  s.rowwise() += m.biases.transpose();
  return s;
}

inline Prediction predict(const LssvmModel& m, const Matrix& x) {
  Prediction p;
  p.scores = decision_values(m, x);
  p.labels = argmax_rows(p.scores);
  return p;
}

/// Signed leave-one-out residuals y_i - f^{(-i)}(x_i) for every sample and
/// one-vs-all machine, via a_i / P_ii.
inline Matrix loo_residuals(const Dataset& train, const KernelSpec& kernel_spec, double c) {
  validate(train);
  require(train.size() >= 3, "loo_residuals: need at least 3 samples");
  const DualSystem sys(gram(kernel_spec, train.features), c);
  const auto [alphas, biases] = sys.solve(one_vs_all_targets(train.labels, train.num_classes));
  const Vector d = sys.projector().diagonal();
  if ((d.array() <= 0.0).any()) throw NumericError("loo_residuals: non-positive inverse diagonal");
  return alphas.array().colwise() / d.array();
}

/// 1/2 |w|^2 + C/2 sum xi^2 summed over the one-vs-all machines, with
/// |w_g|^2 = a_g^T K a_g and xi = a / C.
inline double primal_objective(const LssvmModel& m) {
  const Matrix k = gram(m.kernel, m.support_inputs);
  double total = 0.0;
  for (Index g = 0; g < m.alphas.cols(); ++g) {
    const auto a = m.alphas.col(g);
    total += 0.5 * a.dot(k * a) + 0.5 * m.C * (a / m.C).squaredNorm();
  }
  return total;
}

}  // namespace emgda
