#pragma once

#include <limits>

#include "emgda/lssvm.hpp"
#include "emgda/modelsel.hpp"
#include "emgda/sources.hpp"

namespace emgda {

/// Cross-validated LS-SVM hyperparameters on a fixed design matrix. Gaussian
/// kernels search the full (C, gamma) grid, linear kernels only C. One kernel
/// matrix per gamma is shared by all folds and C values.
inline Selection<Params> select_lssvm(const Matrix& x, const Labels& y, int num_classes, KernelKind kind,
                                      const Grid& grid) {
  const auto candidates = kind == KernelKind::gaussian ? gamma_major(grid.candidates()) : grid.c_only();
  Matrix full;
  double cached_gamma = std::numeric_limits<double>::quiet_NaN();
  auto evaluate = [&](const std::vector<Index>& tr, const std::vector<Index>& va, const Params& p) {
    const KernelSpec spec = kind == KernelKind::gaussian ? KernelSpec::gaussian(p.gamma) : KernelSpec::linear();
    if (full.size() == 0 || (kind == KernelKind::gaussian && p.gamma != cached_gamma)) {
      full = gram(spec, x);
      cached_gamma = p.gamma;
    }
    const DualSystem sys(full(tr, tr), p.C);
    const auto [alphas, biases] = sys.solve(one_vs_all_targets(select_items(y, tr), num_classes));
    Matrix s = full(va, tr) * alphas;
    s.rowwise() += biases.transpose();
    return argmax_rows(s);
  };
  return pick_preferred(cross_validate_or_default(y, num_classes, candidates, grid.folds, grid.seed, evaluate));
}

/// Gaussian LS-SVM on target features only, hyperparameters by CV.
inline LssvmModel fit_no_transfer(const Dataset& train, const Grid& grid, Selection<Params>* report = nullptr) {
  validate(train);
  const auto sel = select_lssvm(train.features, train.labels, train.num_classes, KernelKind::gaussian, grid);
  if (report) *report = sel;
  return fit(train, KernelSpec::gaussian(sel.best.gamma), sel.best.C);
}

/// Linear LS-SVM over normalized, concatenated source scores. Target raw
/// features never enter this model.
struct PriorFeaturesModel {
  NormStats score_norm;
  LssvmModel model;
};

inline PriorFeaturesModel fit_prior_features(const Labels& labels, int num_classes, const SourceScores& train_scores,
                                             const Grid& grid, Selection<Params>* report = nullptr) {
  if (train_scores.empty()) throw Error("prior features: need at least one source");
  check_scores(train_scores, static_cast<Index>(labels.size()), num_classes);
  PriorFeaturesModel out;
  const Matrix stacked = stack_scores(train_scores);
  out.score_norm = fit_normalizer(stacked);
  Dataset ds;
  ds.features = apply_normalizer(stacked, out.score_norm);
  ds.labels = labels;
  ds.num_classes = num_classes;
  const auto sel = select_lssvm(ds.features, labels, num_classes, KernelKind::linear, grid);
  if (report) *report = sel;
  out.model = fit(ds, KernelSpec::linear(), sel.best.C);
  return out;
}

inline PriorFeaturesModel fit_prior_features(const Dataset& train, const SourceSet& sources, const Grid& grid) {
  return fit_prior_features(train.labels, train.num_classes, source_scores(sources, train.features), grid);
}

inline Prediction predict_prior_features(const PriorFeaturesModel& m, const SourceScores& scores) {
  return predict(m.model, apply_normalizer(stack_scores(scores), m.score_norm));
}

}  // namespace emgda
