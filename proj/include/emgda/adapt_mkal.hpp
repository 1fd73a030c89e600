#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "emgda/kernels.hpp"
#include "emgda/signals.hpp"
#include "emgda/sources.hpp"

namespace emgda {

/// Multiclass multi-kernel learner over K+1 blocks: block 0 is a Gaussian
/// kernel on raw features plus a constant (the bias feature), block k >= 1 a
/// linear kernel on source k's score vector. The class-indexed feature map
/// puts each block's encoding into the slot of its class, so each block's
/// hyperplane is represented by an N x G coefficient matrix over the
/// training inputs.
struct MkalConfig {
  double p = 2.0;
  double lambda = 1e-2;
  int online_epochs = 5;
  int batch_sweeps = 20;
  std::uint64_t seed = 0;
};

struct MkalModel {
  double p = 2.0;
  double lambda = 1e-2;
  KernelSpec raw_kernel;
  int num_classes = 0;
  Matrix training_inputs;        // N x d
  SourceScores training_scores;  // K entries of N x G
  std::vector<Matrix> dual_coeffs;  // K+1 entries of N x G
  Vector block_norms;               // K+1, |w^k|_2

  Index num_blocks() const { return static_cast<Index>(dual_coeffs.size()); }
};

/// (sum_k n_k^p)^(1/p), computed with max-scaling.
inline double group_norm(const Vector& block_norms, double p) {
  const double m = block_norms.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  return m * std::pow((block_norms.cwiseAbs() / m).array().pow(p).sum(), 1.0 / p);
}

/// Block kernel between query rows and the training rows.
inline Matrix mkal_block_gram(const MkalModel& m, Index block, const Matrix& x, const SourceScores& scores) {
  if (block == 0) return (gram(m.raw_kernel, x, m.training_inputs).array() + 1.0).matrix();
  const auto k = static_cast<std::size_t>(block - 1);
  require(k < scores.size(), "mkal: missing source scores for a block");
  return scores[k] * m.training_scores[k].transpose();
}

inline Matrix mkal_scores(const MkalModel& m, const Matrix& x, const SourceScores& scores) {
  require(x.cols() == m.training_inputs.cols(), "mkal: input dimension mismatch");
  if (static_cast<Index>(scores.size()) != m.num_blocks() - 1) throw Error("mkal: missing source scores for a block");
  check_scores(scores, x.rows(), m.num_classes);
  Matrix out = Matrix::Zero(x.rows(), m.num_classes);
  for (Index b = 0; b < m.num_blocks(); ++b) {
    if (m.dual_coeffs[static_cast<std::size_t>(b)].isZero(0.0)) continue;
    out += mkal_block_gram(m, b, x, scores) * m.dual_coeffs[static_cast<std::size_t>(b)];
  }
  return out;
}

inline Prediction predict_mkal(const MkalModel& m, const Matrix& x, const SourceScores& scores) {
  Prediction p;
  p.scores = mkal_scores(m, x, scores);
  p.labels = argmax_rows(p.scores);
  return p;
}

/// Mean multiclass hinge max(0, 1 - (f_y - max_{g != y} f_g)).
inline double multiclass_hinge(const Matrix& scores, const Labels& labels) {
  double total = 0.0;
  for (Index i = 0; i < scores.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    double other = -std::numeric_limits<double>::infinity();
    for (Index g = 0; g < scores.cols(); ++g)
      if (g != y) other = std::max(other, scores(i, g));
    total += std::max(0.0, 1.0 - (scores(i, y) - other));
  }
  return scores.rows() > 0 ? total / static_cast<double>(scores.rows()) : 0.0;
}

/// Full objective (lambda/2)|w|_{2,p}^2 + mean hinge, evaluated from the
/// stored coefficients with freshly built kernel matrices.
inline double mkal_objective(const MkalModel& m, const Labels& labels) {
  Vector norms(m.num_blocks());
  for (Index b = 0; b < m.num_blocks(); ++b) {
    const Matrix k = mkal_block_gram(m, b, m.training_inputs, m.training_scores);
    const Matrix& c = m.dual_coeffs[static_cast<std::size_t>(b)];
    norms(b) = std::sqrt(std::max(0.0, (c.transpose() * k * c).trace()));
  }
  const double gn = group_norm(norms, m.p);
  return 0.5 * m.lambda * gn * gn + multiclass_hinge(mkal_scores(m, m.training_inputs, m.training_scores), labels);
}

namespace detail {

/// Trainer state. All blocks share one accumulator A of signed margin
/// violations (difference maps are identical across blocks); block k's
/// hyperplane is w^k = scale_k * A / (lambda * t) in that block's feature
/// space, where scale_k = (n_k / |n|_q)^(q-2) is the gradient of the
/// squared (2,q) group norm, q = p / (p - 1), and n_k = |A|_{K_k}.
class MkalTrainer {
public:
  MkalTrainer(const std::vector<Matrix>& grams, const Labels& labels, int num_classes, double p, double lambda)
      : grams_(grams), labels_(labels), classes_(num_classes), p_(p), lambda_(lambda) {
    require(num_classes >= 2, "mkal: need at least two classes");
    const Index n = static_cast<Index>(labels.size());
    q_ = p < 2.0 ? p / (p - 1.0) : 2.0;
    acc_ = Matrix::Zero(n, num_classes);
    u_.assign(grams_.size(), Matrix::Zero(n, num_classes));
    normsq_ = Vector::Zero(static_cast<Index>(grams_.size()));
  }

  Index blocks() const { return static_cast<Index>(grams_.size()); }

  Vector scales() const {
    Vector n = normsq_.cwiseMax(0.0).cwiseSqrt();
    Vector s = Vector::Ones(blocks());
    if (q_ == 2.0) return s;
    const double total = group_norm(n, q_);
    if (total == 0.0) return s;
    for (Index k = 0; k < blocks(); ++k) s(k) = n(k) > 0.0 ? std::pow(n(k) / total, q_ - 2.0) : 0.0;
    return s;
  }

  /// Training-set scores f(x_i, g) for all i.
  Matrix all_scores() const {
    Matrix f = Matrix::Zero(acc_.rows(), classes_);
    if (steps_ == 0) return f;
    const Vector s = scales();
    for (Index k = 0; k < blocks(); ++k) f += s(k) * u_[static_cast<std::size_t>(k)];
    return f / (lambda_ * static_cast<double>(steps_));
  }

  /// Most violating wrong class for sample i under scores row f; returns the
  /// class and the margin f_y - f_yhat.
  std::pair<int, double> worst_rival(const Eigen::Ref<const Vector>& f, int y) const {
    int rival = -1;
    for (int g = 0; g < classes_; ++g) {
      if (g == y) continue;
      if (rival < 0 || f(g) > f(rival)) rival = g;
    }
    return {rival, f(y) - f(rival)};
  }

  void online_epoch(Rng& rng) {
    std::vector<Index> order(acc_.rows());
    std::iota(order.begin(), order.end(), 0);
    shuffle_in_place(order, rng);
    for (Index i : order) {
      const int y = labels_[static_cast<std::size_t>(i)];
      Vector f = Vector::Zero(classes_);
      if (steps_ > 0) {
        const Vector s = scales();
        for (Index k = 0; k < blocks(); ++k) f += s(k) * u_[static_cast<std::size_t>(k)].row(i).transpose();
        f /= lambda_ * static_cast<double>(steps_);
      }
      const auto [rival, margin] = worst_rival(f, y);
      if (margin < 1.0) {
        add(i, y, 1.0);
        add(i, rival, -1.0);
      }
      ++steps_;
    }
  }

  void batch_sweep() {
    const Matrix f = all_scores();
    std::vector<std::pair<Index, int>> hits;
    for (Index i = 0; i < f.rows(); ++i) {
      const int y = labels_[static_cast<std::size_t>(i)];
      const auto [rival, margin] = worst_rival(f.row(i).transpose(), y);
      if (margin < 1.0) hits.emplace_back(i, rival);
    }
    for (const auto& [i, rival] : hits) {
      add(i, labels_[static_cast<std::size_t>(i)], 1.0);
      add(i, rival, -1.0);
    }
    steps_ += acc_.rows();
  }

  /// Objective from tracked quantities, for checkpoint selection.
  double objective() const {
    if (steps_ == 0) return multiclass_hinge(Matrix::Zero(acc_.rows(), classes_), labels_);
    const double gn = group_norm(block_norms(), p_);
    return 0.5 * lambda_ * gn * gn + multiclass_hinge(all_scores(), labels_);
  }

  Vector block_norms() const {
    if (steps_ == 0) return Vector::Zero(blocks());
    return scales().cwiseProduct(normsq_.cwiseMax(0.0).cwiseSqrt()) / (lambda_ * static_cast<double>(steps_));
  }

  std::vector<Matrix> coefficients() const {
    std::vector<Matrix> out;
    const Vector s = scales();
    for (Index k = 0; k < blocks(); ++k) {
      out.push_back(steps_ == 0 ? Matrix(Matrix::Zero(acc_.rows(), classes_))
                                : Matrix(acc_ * (s(k) / (lambda_ * static_cast<double>(steps_)))));
    }
    return out;
  }

private:
  void add(Index i, int g, double delta) {
    for (Index k = 0; k < blocks(); ++k) {
      auto& u = u_[static_cast<std::size_t>(k)];
      const Matrix& kk = grams_[static_cast<std::size_t>(k)];
      normsq_(k) += 2.0 * delta * u(i, g) + delta * delta * kk(i, i);
      u.col(g) += delta * kk.col(i);
    }
    acc_(i, g) += delta;
  }

  const std::vector<Matrix>& grams_;
  const Labels& labels_;
  int classes_;
  double p_;
  double lambda_;
  double q_ = 2.0;
  Matrix acc_;
  std::vector<Matrix> u_;  // K_k * A per block
  Vector normsq_;          // A^T K_k A traces per block
  long long steps_ = 0;
};

}  // namespace detail

/// Online pass (seeded shuffles) followed by synchronous batch sweeps; the
/// checkpoint (after any epoch/sweep, or w = 0) with the lowest objective is kept.
inline std::vector<Matrix> train_mkal_blocks(const std::vector<Matrix>& block_grams, const Labels& labels,
                                             int num_classes, const MkalConfig& cfg) {
  require(cfg.p > 1.0 && cfg.p <= 2.0, "mkal: p must lie in (1, 2]");
  require(cfg.lambda > 0.0, "mkal: lambda must be positive");
  require(!labels.empty(), "mkal: empty training set");
  detail::MkalTrainer tr(block_grams, labels, num_classes, cfg.p, cfg.lambda);
  std::vector<Matrix> best = tr.coefficients();
  double best_obj = tr.objective();
  auto checkpoint = [&] {
    const double obj = tr.objective();
    if (obj < best_obj) {
      best_obj = obj;
      best = tr.coefficients();
    }
  };
  Rng rng(derive_seed(cfg.seed, 0x6b616c));
  for (int e = 0; e < cfg.online_epochs; ++e) {
    tr.online_epoch(rng);
    checkpoint();
  }
  for (int s = 0; s < cfg.batch_sweeps; ++s) {
    tr.batch_sweep();
    checkpoint();
  }
  return best;
}

inline MkalModel fit_mkal(const Dataset& train, const SourceScores& train_scores, const KernelSpec& raw_kernel,
                          const MkalConfig& cfg) {
  validate(train);
  require(cfg.p > 1.0 && cfg.p <= 2.0, "mkal: p must lie in (1, 2]");
  if (train_scores.empty()) throw Error("mkal: need at least one source");
  check_scores(train_scores, train.size(), train.num_classes);
  MkalModel m;
  m.p = cfg.p;
  m.lambda = cfg.lambda;
  m.raw_kernel = raw_kernel;
  m.num_classes = train.num_classes;
  m.training_inputs = train.features;
  m.training_scores = train_scores;
  std::vector<Matrix> grams;
  grams.push_back((gram(raw_kernel, train.features).array() + 1.0).matrix());
  for (const auto& s : train_scores) grams.push_back(s * s.transpose());
  m.dual_coeffs = train_mkal_blocks(grams, train.labels, train.num_classes, cfg);
  m.block_norms.resize(m.num_blocks());
  for (Index b = 0; b < m.num_blocks(); ++b) {
    const Matrix& c = m.dual_coeffs[static_cast<std::size_t>(b)];
    m.block_norms(b) = std::sqrt(std::max(0.0, (c.transpose() * grams[static_cast<std::size_t>(b)] * c).trace()));
  }
  return m;
}

inline MkalModel fit_mkal(const Dataset& train, const SourceSet& sources, const KernelSpec& raw_kernel,
                          const MkalConfig& cfg) {
  if (sources.empty()) throw Error("mkal: need at least one source");
  return fit_mkal(train, source_scores(sources, train.features), raw_kernel, cfg);
}

}  // namespace emgda
