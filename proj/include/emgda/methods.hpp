#pragma once

#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "emgda/adapt_hl2l.hpp"
#include "emgda/adapt_ma.hpp"
#include "emgda/adapt_mkal.hpp"
#include "emgda/baselines.hpp"

namespace emgda {

enum class Method { NoTransfer, PriorFeatures, MA, MKAL, HL2L };

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> m{Method::NoTransfer, Method::PriorFeatures, Method::MA, Method::MKAL, Method::HL2L};
  return m;
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::NoTransfer: return "NoTransfer";
    case Method::PriorFeatures: return "PriorFeatures";
    case Method::MA: return "MA";
    case Method::MKAL: return "MKAL";
    case Method::HL2L: return "HL2L";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  for (Method m : all_methods())
    if (to_string(m) == s) return m;
  throw Error("unknown method: " + s);
}

inline bool needs_sources(Method m) { return m != Method::NoTransfer; }

/// Hyperparameter search spaces for every method.
struct MethodSettings {
  Grid grid;
  MaOptions ma;
  std::vector<double> mkal_p{1.05, 1.25, 1.5, 2.0};
  std::vector<double> mkal_lambda{1e-4, 1e-3, 1e-2, 1e-1};
  int mkal_online_epochs = 5;
  int mkal_batch_sweeps = 20;
  double hl2l_ratio = 0.63;
};

/// A trained method behind a uniform predictor over (features, source scores).
struct FittedMethod {
  Method method = Method::NoTransfer;
  std::string params;
  std::function<Prediction(const Matrix&, const SourceScores&)> predict;
};

namespace methods_detail {

template <typename... A>
std::string fmt(const char* f, A... args) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

inline Grid with_seed(Grid g, std::uint64_t seed) {
  g.seed = seed;
  return g;
}

inline Selection<Params> select_ma(const Dataset& train, const SourceScores& scores, const MethodSettings& st,
                                   std::uint64_t seed) {
  const auto candidates = gamma_major(st.grid.candidates());
  Matrix full;
  double cached = std::numeric_limits<double>::quiet_NaN();
  auto evaluate = [&](const std::vector<Index>& tr, const std::vector<Index>& va, const Params& p) {
    if (full.size() == 0 || p.gamma != cached) {
      full = gram(KernelSpec::gaussian(p.gamma), train.features);
      cached = p.gamma;
    }
    const SourceScores tr_scores = select_rows(scores, tr);
    const auto sol = solve_ma(full(tr, tr), select_items(train.labels, tr), train.num_classes, tr_scores, p.C, st.ma);
    Matrix s = full(va, tr) * sol.alphas;
    s.rowwise() += sol.biases.transpose();
    s += source_contribution(select_rows(scores, va), sol.beta);
    return argmax_rows(s);
  };
  const int folds = train.size() >= 4 ? st.grid.folds : 1;
  return pick_preferred(cross_validate_or_default(train.labels, train.num_classes, candidates, folds, seed, evaluate));
}

struct MkalParams {
  double p = 2.0;
  double lambda = 1e-2;
};

/// Candidates ordered so ties favor stronger regularization, then larger p.
inline std::vector<MkalParams> mkal_candidates(const MethodSettings& st) {
  std::vector<double> ps = st.mkal_p, ls = st.mkal_lambda;
  std::sort(ls.begin(), ls.end(), std::greater<>());
  std::sort(ps.begin(), ps.end(), std::greater<>());
  std::vector<MkalParams> out;
  for (double l : ls)
    for (double p : ps) out.push_back({p, l});
  return out;
}

inline Selection<MkalParams> select_mkal(const Dataset& train, const SourceScores& scores, double gamma,
                                         const MethodSettings& st, std::uint64_t seed) {
  std::vector<Matrix> full;
  full.push_back((gram(KernelSpec::gaussian(gamma), train.features).array() + 1.0).matrix());
  for (const auto& s : scores) full.push_back(s * s.transpose());
  auto evaluate = [&](const std::vector<Index>& tr, const std::vector<Index>& va, const MkalParams& mp) {
    std::vector<Matrix> blocks;
    for (const auto& k : full) blocks.push_back(k(tr, tr));
    MkalConfig cfg{mp.p, mp.lambda, st.mkal_online_epochs, st.mkal_batch_sweeps, seed};
    const auto coeffs = train_mkal_blocks(blocks, select_items(train.labels, tr), train.num_classes, cfg);
    Matrix s = Matrix::Zero(static_cast<Index>(va.size()), train.num_classes);
    for (std::size_t b = 0; b < full.size(); ++b) s += full[b](va, tr) * coeffs[b];
    return argmax_rows(s);
  };
  return cross_validate_or_default(train.labels, train.num_classes, mkal_candidates(st), st.grid.folds, seed, evaluate);
}

/// (C2, gamma2) by cross-validating the whole two-layer pipeline: each fold
/// splits its training part, fits layer 1 with the given parameters and
/// layer 2 per candidate, and is scored on its held-out part.
inline Selection<Params> select_hl2l_layer2(const Dataset& train, const SourceScores& scores, const Params& layer1,
                                            const MethodSettings& st, std::uint64_t split_seed, std::uint64_t cv_seed) {
  struct FoldCache {
    bool stacked = false;
    Dataset l2;
    Matrix val_inputs;
    Labels fallback;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    Matrix k_tr, k_va;
  };
  std::map<Index, FoldCache> cache;
  auto evaluate = [&](const std::vector<Index>& tr, const std::vector<Index>& va, const Params& p) {
    FoldCache& fc = cache[va.front()];
    if (fc.l2.num_classes == 0 && fc.fallback.empty()) {
      const Dataset part = subset(train, tr);
      const auto sp = stratified_split(part.labels, part.num_classes, st.hl2l_ratio, split_seed);
      const LssvmModel l1 = fit(subset(part, sp.first), KernelSpec::gaussian(layer1.gamma), layer1.C);
      const Matrix xva = select_rows(train.features, va);
      if (sp.second.empty()) {
        fc.fallback = predict(l1, xva).labels;
      } else {
        const SourceScores part_scores = select_rows(scores, tr);
        auto [l2, norm] = hl2l_layer2_data(l1, subset(part, sp.second), select_rows(part_scores, sp.second));
        fc.l2 = std::move(l2);
        fc.val_inputs = apply_normalizer(hl2l_stack(l1, xva, select_rows(scores, va)), norm);
        fc.stacked = true;
      }
    }
    if (!fc.stacked) return fc.fallback;
    if (p.gamma != fc.gamma) {
      fc.k_tr = gram(KernelSpec::gaussian(p.gamma), fc.l2.features);
      fc.k_va = gram(KernelSpec::gaussian(p.gamma), fc.val_inputs, fc.l2.features);
      fc.gamma = p.gamma;
    }
    const DualSystem sys(fc.k_tr, p.C);
    const auto [alphas, biases] = sys.solve(one_vs_all_targets(fc.l2.labels, fc.l2.num_classes));
    Matrix s = fc.k_va * alphas;
    s.rowwise() += biases.transpose();
    return argmax_rows(s);
  };
  return pick_preferred(cross_validate_or_default(train.labels, train.num_classes, gamma_major(st.grid.candidates()),
                                                  st.grid.folds, cv_seed, evaluate));
}

}  // namespace methods_detail

/// Fits `method` on the target training set, selecting its hyperparameters by
/// cross-validation on that set. `train_scores` holds the source models'
/// scores on the training rows (ignored by No Transfer).
inline FittedMethod fit_method(Method method, const Dataset& train, const SourceScores& train_scores,
                               const MethodSettings& st, std::uint64_t seed) {
  namespace md = methods_detail;
  validate(train);
  FittedMethod out;
  out.method = method;
  const Grid grid = md::with_seed(st.grid, derive_seed(seed, 0xc5));
  switch (method) {
    case Method::NoTransfer: {
      Selection<Params> sel;
      auto m = std::make_shared<LssvmModel>(fit_no_transfer(train, grid, &sel));
      out.params = md::fmt("C=%g gamma=%g", sel.best.C, sel.best.gamma);
      out.predict = [m](const Matrix& x, const SourceScores&) { return predict(*m, x); };
      break;
    }
    case Method::PriorFeatures: {
      Selection<Params> sel;
      auto m = std::make_shared<PriorFeaturesModel>(fit_prior_features(train.labels, train.num_classes, train_scores, grid, &sel));
      out.params = "C=" + md::fmt("%g", sel.best.C);
      out.predict = [m](const Matrix&, const SourceScores& s) { return predict_prior_features(*m, s); };
      break;
    }
    case Method::MA: {
      MethodSettings local = st;
      local.grid = grid;
      const auto sel = md::select_ma(train, train_scores, local, grid.seed);
      auto m = std::make_shared<MaModel>(fit_ma_scores(train, train_scores, KernelSpec::gaussian(sel.best.gamma), sel.best.C, st.ma));
      out.params = md::fmt("C=%g gamma=%g", sel.best.C, sel.best.gamma);
      out.predict = [m](const Matrix& x, const SourceScores& s) { return predict_ma(*m, x, s); };
      break;
    }
    case Method::MKAL: {
      if (train_scores.empty()) throw Error("mkal: need at least one source");
      const auto gsel = select_lssvm(train.features, train.labels, train.num_classes, KernelKind::gaussian, grid);
      const auto sel = md::select_mkal(train, train_scores, gsel.best.gamma, st, grid.seed);
      MkalConfig cfg{sel.best.p, sel.best.lambda, st.mkal_online_epochs, st.mkal_batch_sweeps, grid.seed};
      auto m = std::make_shared<MkalModel>(fit_mkal(train, train_scores, KernelSpec::gaussian(gsel.best.gamma), cfg));
      out.params = md::fmt("gamma=%g p=%g lambda=%g", gsel.best.gamma, sel.best.p, sel.best.lambda);
      out.predict = [m](const Matrix& x, const SourceScores& s) { return predict_mkal(*m, x, s); };
      break;
    }
    case Method::HL2L: {
      if (train_scores.empty()) throw Error("h-l2l: need at least one source");
      const std::uint64_t split_seed = derive_seed(seed, 0x12);
      const auto split = stratified_split(train.labels, train.num_classes, st.hl2l_ratio, split_seed);
      if (split.second.empty()) throw Error("insufficient data for stacking");
      const auto s1 = select_lssvm(train.features, train.labels, train.num_classes, KernelKind::gaussian, grid);
      const auto s2 = md::select_hl2l_layer2(train, train_scores, s1.best, st, split_seed, grid.seed);
      const Hl2lParams hp{KernelSpec::gaussian(s1.best.gamma), s1.best.C, KernelSpec::gaussian(s2.best.gamma), s2.best.C};
      auto m = std::make_shared<Hl2lModel>(fit_hl2l(train, train_scores, hp, split_seed, st.hl2l_ratio));
      out.params = md::fmt("C1=%g gamma1=%g C2=%g gamma2=%g", s1.best.C, s1.best.gamma, s2.best.C, s2.best.gamma);
      out.predict = [m](const Matrix& x, const SourceScores& s) { return predict_hl2l(*m, x, s); };
      break;
    }
  }
  return out;
}

}  // namespace emgda
