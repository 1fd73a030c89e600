#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "emgda/core.hpp"

namespace emgda {

/// counts(r, c) = test samples of true class c predicted as r.
struct ConfusionMatrix {
  Matrix counts;

  int classes() const { return static_cast<int>(counts.rows()); }
  double total() const { return counts.sum(); }

  /// Column-normalized; columns without test samples stay zero.
  Matrix normalized() const {
    Matrix n = Matrix::Zero(counts.rows(), counts.cols());
    for (Index c = 0; c < counts.cols(); ++c) {
      const double s = counts.col(c).sum();
      if (s > 0.0) n.col(c) = counts.col(c) / s;
    }
    return n;
  }

  double accuracy() const {
    const double t = total();
    return t > 0.0 ? counts.trace() / t : 0.0;
  }
};

inline ConfusionMatrix empty_confusion(int num_classes) { return {Matrix::Zero(num_classes, num_classes)}; }

inline ConfusionMatrix confusion(const Labels& predicted, const Labels& truth, int num_classes) {
  require(predicted.size() == truth.size(), "confusion: length mismatch");
  require(num_classes >= 1, "confusion: need at least one class");
  ConfusionMatrix m = empty_confusion(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int r = predicted[i], c = truth[i];
    require(r >= 0 && r < num_classes && c >= 0 && c < num_classes, "confusion: label out of range");
    m.counts(r, c) += 1.0;
  }
  return m;
}

inline void accumulate(ConfusionMatrix& into, const ConfusionMatrix& add) {
  require(into.counts.rows() == add.counts.rows(), "confusion: class count mismatch");
  into.counts += add.counts;
}

/// normalized(a) - normalized(b)
inline Matrix confusion_diff(const ConfusionMatrix& a, const ConfusionMatrix& b) {
  require(a.classes() == b.classes(), "confusion_diff: shape mismatch");
  return a.normalized() - b.normalized();
}

struct Similarity {
  double fraction = 0.0;
  std::vector<int> matching_classes;
  int num_classes = 0;
};

/// Row ids of the four largest entries in column c (ties to the smaller id).
inline std::vector<int> top4(const Matrix& m, Index c) {
  std::vector<int> ids(static_cast<std::size_t>(m.rows()));
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) { return m(a, c) > m(b, c); });
  ids.resize(4);
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Share of true classes whose top-4 predicted classes agree in at least 3.
inline Similarity top4_similarity(const ConfusionMatrix& a, const ConfusionMatrix& b) {
  require(a.classes() == b.classes(), "top4_similarity: shape mismatch");
  require(a.classes() >= 4, "top4_similarity: need at least 4 classes");
  const Matrix na = a.normalized(), nb = b.normalized();
  Similarity s;
  s.num_classes = a.classes();
  for (Index c = 0; c < na.cols(); ++c) {
    const auto sa = top4(na, c), sb = top4(nb, c);
    std::vector<int> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    if (common.size() >= 3) s.matching_classes.push_back(static_cast<int>(c));
  }
  s.fraction = static_cast<double>(s.matching_classes.size()) / static_cast<double>(s.num_classes);
  return s;
}

/// "72% (13/18)"
inline std::string format_similarity(const Similarity& s) {
  return std::to_string(std::lround(100.0 * s.fraction)) + "% (" + std::to_string(s.matching_classes.size()) + "/" +
         std::to_string(s.num_classes) + ")";
}

/// Pearson correlation; NaN when either side has zero variance.
inline double pearson(const Vector& a, const Vector& b) {
  require(a.size() == b.size() && a.size() >= 2, "pearson: need two equal-length vectors of length >= 2");
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double va = da.squaredNorm(), vb = db.squaredNorm();
  if (va == 0.0 || vb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::clamp(da.dot(db) / std::sqrt(va * vb), -1.0, 1.0);
}

struct CorrelationTable {
  std::vector<std::string> names;
  Matrix values;  // NaN marks an undefined pair
};

/// Pairwise correlation of per-class recognition rates (normalized diagonals).
inline CorrelationTable recognition_correlation(const std::vector<std::pair<std::string, ConfusionMatrix>>& runs) {
  CorrelationTable t;
  if (runs.empty()) return t;
  const int g = runs.front().second.classes();
  std::vector<Vector> diag;
  for (const auto& [name, cm] : runs) {
    require(cm.classes() == g, "recognition_correlation: class count mismatch");
    t.names.push_back(name);
    diag.push_back(cm.normalized().diagonal());
  }
  const auto n = static_cast<Index>(runs.size());
  t.values.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    t.values(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) t.values(i, j) = t.values(j, i) = pearson(diag[static_cast<std::size_t>(i)], diag[static_cast<std::size_t>(j)]);
  }
  return t;
}

}  // namespace emgda
