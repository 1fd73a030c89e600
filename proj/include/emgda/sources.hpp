#pragma once

#include <memory>
#include <vector>

#include "emgda/lssvm.hpp"

namespace emgda {

/// Pre-trained source models, shared (read-only) between target models.
using SourceSet = std::vector<std::shared_ptr<const LssvmModel>>;

/// Per-source decision values on a common set of inputs: entry k is M x G.
using SourceScores = std::vector<Matrix>;

/// scores[k](j, g) = score of source k, class g at row j of x.
inline SourceScores source_scores(const SourceSet& sources, const Matrix& x) {
  SourceScores out;
  out.reserve(sources.size());
  for (const auto& s : sources) {
    require(s != nullptr, "source_scores: null source model");
    out.push_back(decision_values(*s, x));
  }
  return out;
}

inline SourceScores select_rows(const SourceScores& scores, const std::vector<Index>& rows) {
  SourceScores out;
  out.reserve(scores.size());
  for (const auto& m : scores) out.push_back(emgda::select_rows(m, rows));
  return out;
}

inline void check_scores(const SourceScores& scores, Index rows, int num_classes) {
  for (const auto& m : scores) {
    require(m.rows() == rows, "source scores: row count mismatch");
    require(m.cols() == num_classes, "source scores: class count mismatch");
  }
}

/// Horizontal concatenation [s^1 | s^2 | ... ] (M x K*G), optionally led by
/// an extra block.
inline Matrix stack_scores(const SourceScores& scores, const Matrix* lead = nullptr) {
  Index rows = lead ? lead->rows() : (scores.empty() ? 0 : scores.front().rows());
  Index cols = lead ? lead->cols() : 0;
  for (const auto& m : scores) cols += m.cols();
  Matrix out(rows, cols);
  Index at = 0;
  if (lead) {
    out.leftCols(lead->cols()) = *lead;
    at = lead->cols();
  }
  for (const auto& m : scores) {
    require(m.rows() == rows, "stack_scores: row count mismatch");
    out.middleCols(at, m.cols()) = m;
    at += m.cols();
  }
  return out;
}

}  // namespace emgda
