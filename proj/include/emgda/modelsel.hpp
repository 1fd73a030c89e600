#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "emgda/core.hpp"
#include "emgda/signals.hpp"

namespace emgda {

struct Params {
  double C = 1.0;
  double gamma = 1.0;
  bool operator==(const Params&) const = default;
};

struct Grid {
  std::vector<double> C_values{0.01, 0.1, 1, 10, 100, 1000};
  std::vector<double> gamma_values{0.01, 0.1, 1, 10, 100, 1000};
  int folds = 5;
  std::uint64_t seed = 0;

  /// Candidates in preference order: ascending C, then ascending gamma.
  std::vector<Params> candidates() const {
    require(!C_values.empty() && !gamma_values.empty(), "grid: empty value set");
    std::vector<double> cs = C_values, gs = gamma_values;
    std::sort(cs.begin(), cs.end());
    std::sort(gs.begin(), gs.end());
    std::vector<Params> out;
    for (double c : cs)
      for (double g : gs) out.push_back({c, g});
    return out;
  }

  /// Same grid with the gamma axis collapsed (for linear-kernel models).
  std::vector<Params> c_only() const {
    std::vector<double> cs = C_values;
    std::sort(cs.begin(), cs.end());
    std::vector<Params> out;
    for (double c : cs) out.push_back({c, 0.0});
    return out;
  }
};

/// Stratified k-fold assignment. Each class is shuffled and dealt round-robin,
/// continuing the fold cursor across classes, so per-class fold counts differ
/// by at most one and fold sizes by at most one.
inline std::vector<std::vector<Index>> stratified_folds(const Labels& labels, int num_classes, int folds,
                                                        std::uint64_t seed) {
  require(folds >= 2, "cv: need at least 2 folds");
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));
  Rng rng(derive_seed(seed, 0xf01d));
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  std::size_t cursor = 0;
  for (auto& members : by_class) {
    shuffle_in_place(members, rng);
    for (Index i : members) out[cursor++ % static_cast<std::size_t>(folds)].push_back(i);
  }
  for (auto& f : out) {
    if (f.empty()) throw Error("cv: degenerate fold (fewer samples than folds)");
    std::sort(f.begin(), f.end());
  }
  return out;
}

template <typename P>
struct CvEntry {
  P params;
  double accuracy = 0.0;  // pooled held-out accuracy
};

template <typename P>
struct Selection {
  P best;
  double best_accuracy = 0.0;
  std::vector<CvEntry<P>> table;
};

/// Generic CV driver. `evaluate(train_idx, val_idx, params)` returns predicted
/// labels for val_idx. The first candidate with the highest pooled accuracy
/// wins, so candidate order encodes the tie-break preference.
template <typename P, typename Evaluate>
Selection<P> cross_validate(const Labels& labels, int num_classes, const std::vector<P>& candidates, int folds,
                            std::uint64_t seed, Evaluate&& evaluate) {
  require(!candidates.empty(), "cv: no candidates");
  require(static_cast<std::size_t>(folds) <= labels.size(), "cv: more folds than samples");
  Selection<P> sel;
  const auto parts = stratified_folds(labels, num_classes, folds, seed);
  std::vector<std::vector<Index>> train_parts(parts.size());
  for (std::size_t f = 0; f < parts.size(); ++f) {
    for (std::size_t h = 0; h < parts.size(); ++h) {
      if (h != f) train_parts[f].insert(train_parts[f].end(), parts[h].begin(), parts[h].end());
    }
    std::sort(train_parts[f].begin(), train_parts[f].end());
  }
  std::size_t best_hits = 0;
  bool have_best = false;
  for (const P& params : candidates) {
    std::size_t hits = 0;
    for (std::size_t f = 0; f < parts.size(); ++f) {
      const Labels pred = evaluate(train_parts[f], parts[f], params);
      require(pred.size() == parts[f].size(), "cv: evaluator returned wrong number of labels");
      for (std::size_t j = 0; j < pred.size(); ++j) hits += pred[j] == labels[static_cast<std::size_t>(parts[f][j])] ? 1 : 0;
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(labels.size());
    sel.table.push_back({params, acc});
    if (!have_best || hits > best_hits) {
      best_hits = hits;
      sel.best = params;
      sel.best_accuracy = acc;
      have_best = true;
    }
  }
  return sel;
}

/// Folds actually usable for n samples: min(requested, n); below 2 there is
/// no cross-validation and the first (most regularized) candidate is used.
inline int usable_folds(int requested, Index n) {
  return static_cast<int>(std::min<Index>(requested, n));
}

template <typename P, typename Evaluate>
Selection<P> cross_validate_or_default(const Labels& labels, int num_classes, const std::vector<P>& candidates,
                                       int folds, std::uint64_t seed, Evaluate&& evaluate) {
  const int k = usable_folds(folds, static_cast<Index>(labels.size()));
  if (k < 2) {
    Selection<P> sel;
    sel.best = candidates.front();
    sel.table.push_back({candidates.front(), 0.0});
    return sel;
  }
  return cross_validate(labels, num_classes, candidates, k, seed, evaluate);
}

/// Same candidates, gamma-major, so callers can reuse one kernel matrix per
/// gamma across all C values. Pair with `pick_preferred`.
inline std::vector<Params> gamma_major(const std::vector<Params>& candidates) {
  std::vector<Params> out = candidates;
  std::stable_sort(out.begin(), out.end(), [](const Params& a, const Params& b) {
    return a.gamma != b.gamma ? a.gamma < b.gamma : a.C < b.C;
  });
  return out;
}

/// Re-pick the winner independent of evaluation order: highest accuracy,
/// then smaller C, then smaller gamma. The table is returned C-major.
inline Selection<Params> pick_preferred(Selection<Params> sel) {
  std::stable_sort(sel.table.begin(), sel.table.end(), [](const auto& a, const auto& b) {
    return a.params.C != b.params.C ? a.params.C < b.params.C : a.params.gamma < b.params.gamma;
  });
  for (std::size_t i = 0; i < sel.table.size(); ++i) {
    if (i == 0 || sel.table[i].accuracy > sel.best_accuracy) {
      sel.best = sel.table[i].params;
      sel.best_accuracy = sel.table[i].accuracy;
    }
  }
  return sel;
}

/// Dataset-level selection over the (C, gamma) grid. `fit_fn(fold_train,
/// params)` returns any callable mapping a feature matrix to labels.
template <typename FitFn>
Selection<Params> select(const Dataset& train, FitFn&& fit_fn, const Grid& grid) {
  require(static_cast<Index>(grid.folds) <= train.size(), "select: folds exceed N");
  return cross_validate(train.labels, train.num_classes, grid.candidates(), grid.folds, grid.seed,
                        [&](const std::vector<Index>& tr, const std::vector<Index>& va, const Params& p) {
                          const auto predictor = fit_fn(subset(train, tr), p);
                          return Labels(predictor(select_rows(train.features, va)));
                        });
}

}  // namespace emgda
