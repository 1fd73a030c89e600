#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "emgda/lssvm.hpp"
#include "emgda/sources.hpp"

namespace emgda {

/// Per-source, per-class transfer weights (K x G). Feasible set: entries
/// >= 0 and every class column inside the unit L2 ball.
struct BetaWeights {
  Matrix values;

  Index sources() const { return values.rows(); }
  Index classes() const { return values.cols(); }
};

/// Euclidean projection onto {beta >= 0, |beta_col|_2 <= 1}: clip, then shrink.
inline void project_beta_column(Eigen::Ref<Vector> col) {
  col = col.cwiseMax(0.0);
  const double n = col.norm();
  if (n > 1.0) col /= n;
}

inline BetaWeights project(BetaWeights beta) {
  for (Index g = 0; g < beta.values.cols(); ++g) {
    Vector col = beta.values.col(g);
    project_beta_column(col);
    beta.values.col(g) = col;
  }
  return beta;
}

inline bool feasible(const BetaWeights& beta, double tol = 0.0) {
  for (Index g = 0; g < beta.values.cols(); ++g) {
    if ((beta.values.col(g).array() < 0.0).any()) return false;
    if (beta.values.col(g).norm() > 1.0 + tol) return false;
  }
  return true;
}

struct MaOptions {
  int iterations = 300;
  double eta0 = 1.0;
};

struct MaModel {
  LssvmModel base;  // trained on beta-adjusted targets
  BetaWeights beta;
  SourceSet sources;
};

/// sum_k beta(k,g) * scores[k](:, g)  (M x G)
inline Matrix source_contribution(const SourceScores& scores, const BetaWeights& beta) {
  require(static_cast<Index>(scores.size()) == beta.sources(), "multi adapt: source count mismatch");
  if (scores.empty()) return Matrix();
  Matrix out = Matrix::Zero(scores.front().rows(), beta.classes());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out += scores[k] * beta.values.row(static_cast<Index>(k)).asDiagonal();
  }
  return out;
}

/// Leave-one-out output of one class machine as an affine function of that
/// class's beta column: yhat_loo(beta) = offset + slope * beta.
///
/// With modified targets t = y - S beta the LOO residual is a_i / P_ii and
/// a = P t, so the full LOO prediction (residual machine plus the source
/// combination) is y - D^-1 P y + D^-1 P S beta.
struct LooAffine {
  Vector targets;  // +-1
  Vector offset;
  Matrix slope;  // N x K

  Vector predict(const Vector& beta_col) const { return offset + slope * beta_col; }

  /// Convex LOO bound: sum_i max(0, 1 - y_i * yhat_i(beta)).
  double bound(const Vector& beta_col) const {
    return (1.0 - targets.cwiseProduct(predict(beta_col)).array()).max(0.0).sum();
  }
};

inline std::vector<LooAffine> loo_affine(const DualSystem& sys, const Matrix& targets, const SourceScores& scores) {
  const Matrix& p = sys.projector();
  const Vector inv_d = p.diagonal().cwiseInverse();
  if (!inv_d.allFinite() || (p.diagonal().array() <= 0.0).any()) throw NumericError("multi adapt: LOO diagonal is degenerate");
  const Index n = targets.rows();
  const Index k = static_cast<Index>(scores.size());
  std::vector<LooAffine> out(static_cast<std::size_t>(targets.cols()));
  for (Index g = 0; g < targets.cols(); ++g) {
    Matrix s(n, k);
    for (Index j = 0; j < k; ++j) s.col(j) = scores[static_cast<std::size_t>(j)].col(g);
    auto& la = out[static_cast<std::size_t>(g)];
    la.targets = targets.col(g);
    la.offset = la.targets - inv_d.asDiagonal() * (p * la.targets);
    la.slope = inv_d.asDiagonal() * (p * s);
  }
  return out;
}

/// Projected subgradient on the (mean-scaled) LOO hinge bound, step
/// eta0 / sqrt(t), starting at zero. Returns the best iterate seen; `trace`
/// receives the bound at every evaluated iterate (index 0 is beta = 0).
inline Vector minimize_loo_bound(const LooAffine& la, const MaOptions& opt, std::vector<double>* trace = nullptr) {
  const Index k = la.slope.cols();
  const double inv_n = 1.0 / static_cast<double>(la.targets.size());
  Vector beta = Vector::Zero(k);
  Vector best = beta;
  double best_val = la.bound(beta);
  if (trace) trace->push_back(best_val);
  for (int t = 1; t <= opt.iterations; ++t) {
    const Vector margin = la.targets.cwiseProduct(la.predict(beta));
    Vector grad = Vector::Zero(k);
    for (Index i = 0; i < margin.size(); ++i) {
      if (margin(i) < 1.0) grad -= la.targets(i) * la.slope.row(i).transpose();
    }
    grad *= inv_n;
    if (grad.isZero(0.0)) break;
    beta -= (opt.eta0 / std::sqrt(static_cast<double>(t))) * grad;
    project_beta_column(beta);
    const double val = la.bound(beta);
    if (trace) trace->push_back(val);
    if (val < best_val) {
      best_val = val;
      best = beta;
    }
  }
  return best;
}

struct MaSolution {
  Matrix alphas;
  Vector biases;
  BetaWeights beta;
  std::vector<std::vector<double>> bound_trace;  // per class
};

/// Multi Adapt on a precomputed training kernel matrix and source scores.
/// If `fixed_beta` is given, beta is not optimized.
inline MaSolution solve_ma(const Matrix& train_gram, const Labels& labels, int num_classes, const SourceScores& scores,
                           double c, const MaOptions& opt = {}, const BetaWeights* fixed_beta = nullptr) {
  if (scores.empty()) throw Error("multi adapt: need at least one source (use No Transfer)");
  const Index n = static_cast<Index>(labels.size());
  check_scores(scores, n, num_classes);
  const DualSystem sys(train_gram, c);
  const Matrix y = one_vs_all_targets(labels, num_classes);
  MaSolution sol;
  if (fixed_beta) {
    require(fixed_beta->sources() == static_cast<Index>(scores.size()) && fixed_beta->classes() == num_classes,
            "multi adapt: beta shape mismatch");
    sol.beta = *fixed_beta;
  } else {
    require(n >= 3, "multi adapt: need at least 3 samples for the LOO bound");
    sol.beta.values = Matrix::Zero(static_cast<Index>(scores.size()), num_classes);
    const auto affine = loo_affine(sys, y, scores);
    sol.bound_trace.resize(affine.size());
    for (Index g = 0; g < num_classes; ++g) {
      sol.beta.values.col(g) = minimize_loo_bound(affine[static_cast<std::size_t>(g)], opt, &sol.bound_trace[static_cast<std::size_t>(g)]);
    }
  }
  const Matrix targets = y - source_contribution(scores, sol.beta);
  std::tie(sol.alphas, sol.biases) = sys.solve(targets);
  return sol;
}

inline MaModel fit_ma_scores(const Dataset& train, const SourceScores& train_scores, const KernelSpec& kernel_spec,
                             double c, const MaOptions& opt = {}, const BetaWeights* fixed_beta = nullptr) {
  validate(train);
  auto sol = solve_ma(gram(kernel_spec, train.features), train.labels, train.num_classes, train_scores, c, opt, fixed_beta);
  MaModel m;
  m.base.kernel = kernel_spec;
  m.base.C = c;
  m.base.num_classes = train.num_classes;
  m.base.support_inputs = train.features;
  m.base.alphas = std::move(sol.alphas);
  m.base.biases = std::move(sol.biases);
  m.base.norm_stats = train.norm_stats;
  m.beta = std::move(sol.beta);
  return m;
}

inline MaModel fit_ma(const Dataset& train, const SourceSet& sources, const KernelSpec& kernel_spec, double c,
                      const MaOptions& opt = {}) {
  if (sources.empty()) throw Error("multi adapt: need at least one source (use No Transfer)");
  MaModel m = fit_ma_scores(train, source_scores(sources, train.features), kernel_spec, c, opt);
  m.sources = sources;
  return m;
}

inline Prediction predict_ma(const MaModel& m, const Matrix& x, const SourceScores& scores) {
  check_scores(scores, x.rows(), m.base.num_classes);
  Prediction p;
  p.scores = decision_values(m.base, x) + source_contribution(scores, m.beta);
  p.labels = argmax_rows(p.scores);
  return p;
}

inline Prediction predict_ma(const MaModel& m, const Matrix& x) {
  require(static_cast<Index>(m.sources.size()) == m.beta.sources(), "multi adapt: model has no attached sources");
  return predict_ma(m, x, source_scores(m.sources, x));
}

}  // namespace emgda
