#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "emgda/lssvm.hpp"
#include "emgda/sources.hpp"

namespace emgda {

struct StratifiedSplit {
  std::vector<Index> first;   // ~63% of each class, trains layer 1
  std::vector<Index> second;  // remainder, trains layer 2
};

/// Per class: round-half-up(ratio * n_g) samples, clamped to [1, n_g], go to
/// the first side (chosen by a seeded shuffle); the rest to the second side.
inline StratifiedSplit stratified_split(const Labels& labels, int num_classes, double ratio, std::uint64_t seed) {
  require(ratio > 0.0 && ratio < 1.0, "stratified_split: ratio must lie in (0, 1)");
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));
  Rng rng(derive_seed(seed, 0x5b117));
  StratifiedSplit out;
  for (auto& members : by_class) {
    if (members.empty()) continue;
    shuffle_in_place(members, rng);
    const auto n = static_cast<Index>(members.size());
    const Index take = std::clamp<Index>(static_cast<Index>(std::floor(ratio * static_cast<double>(n) + 0.5)), 1, n);
    out.first.insert(out.first.end(), members.begin(), members.begin() + take);
    out.second.insert(out.second.end(), members.begin() + take, members.end());
  }
  std::sort(out.first.begin(), out.first.end());
  std::sort(out.second.begin(), out.second.end());
  return out;
}

/// Two-layer stacking: a target LS-SVM on the first split, then a Gaussian
/// LS-SVM over normalized [target scores | source 1 scores | ...] computed on
/// the held-out second split.
struct Hl2lModel {
  LssvmModel layer1;
  LssvmModel layer2;
  NormStats score_norm;
  std::uint64_t split_seed = 0;
  double split_ratio = 0.63;
  Index num_sources = 0;
  SourceSet sources;
  StratifiedSplit split;

  Index stack_dim() const { return (num_sources + 1) * layer1.num_classes; }
};

struct Hl2lParams {
  KernelSpec kernel1;
  double C1 = 1.0;
  KernelSpec kernel2;
  double C2 = 1.0;
};

/// Layer-2 input: [layer1 scores | source scores], (K+1)*G columns.
inline Matrix hl2l_stack(const LssvmModel& layer1, const Matrix& x, const SourceScores& scores) {
  const Matrix target = decision_values(layer1, x);
  return stack_scores(scores, &target);
}

/// Layer-2 training set for a given first layer: normalized stacked scores of
/// the second split and the statistics used.
inline std::pair<Dataset, NormStats> hl2l_layer2_data(const LssvmModel& layer1, const Dataset& second,
                                                      const SourceScores& second_scores) {
  Dataset ds;
  const Matrix stacked = hl2l_stack(layer1, second.features, second_scores);
  NormStats st = fit_normalizer(stacked);
  ds.features = apply_normalizer(stacked, st);
  ds.labels = second.labels;
  ds.num_classes = second.num_classes;
  return {std::move(ds), std::move(st)};
}

inline Hl2lModel fit_hl2l(const Dataset& train, const SourceScores& train_scores, const Hl2lParams& params,
                          std::uint64_t seed, double ratio = 0.63) {
  validate(train);
  if (train_scores.empty()) throw Error("h-l2l: need at least one source");
  check_scores(train_scores, train.size(), train.num_classes);
  Hl2lModel m;
  m.split_seed = seed;
  m.split_ratio = ratio;
  m.num_sources = static_cast<Index>(train_scores.size());
  m.split = stratified_split(train.labels, train.num_classes, ratio, seed);
  if (m.split.second.empty()) throw Error("insufficient data for stacking");
  m.layer1 = fit(subset(train, m.split.first), params.kernel1, params.C1);
  const Dataset second = subset(train, m.split.second);
  auto [layer2_data, stats] = hl2l_layer2_data(m.layer1, second, select_rows(train_scores, m.split.second));
  m.score_norm = std::move(stats);
  m.layer2 = fit(layer2_data, params.kernel2, params.C2);
  return m;
}

inline Hl2lModel fit_hl2l(const Dataset& train, const SourceSet& sources, const Hl2lParams& params,
                          std::uint64_t seed) {
  if (sources.empty()) throw Error("h-l2l: need at least one source");
  Hl2lModel m = fit_hl2l(train, source_scores(sources, train.features), params, seed);
  m.sources = sources;
  return m;
}

inline Prediction predict_hl2l(const Hl2lModel& m, const Matrix& x, const SourceScores& scores) {
  require(static_cast<Index>(scores.size()) == m.num_sources, "h-l2l: source count mismatch");
  check_scores(scores, x.rows(), m.layer1.num_classes);
  const Matrix stacked = hl2l_stack(m.layer1, x, scores);
  require(stacked.cols() == m.stack_dim(), "h-l2l: stacked dimension mismatch");
  return predict(m.layer2, apply_normalizer(stacked, m.score_norm));
}

inline Prediction predict_hl2l(const Hl2lModel& m, const Matrix& x) {
  require(static_cast<Index>(m.sources.size()) == m.num_sources, "h-l2l: model has no attached sources");
  return predict_hl2l(m, x, source_scores(m.sources, x));
}

}  // namespace emgda
