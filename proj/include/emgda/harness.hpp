#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "emgda/analysis.hpp"
#include "emgda/methods.hpp"

namespace emgda {

/// II: intact targets from intact sources; AA: amputee from amputee;
/// AI: amputee targets from intact sources.
enum class Experiment { II, AA, AI };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::II: return "II";
    case Experiment::AA: return "AA";
    case Experiment::AI: return "AI";
  }
  return "?";
}

inline Experiment experiment_from_string(const std::string& s) {
  if (s == "II") return Experiment::II;
  if (s == "AA") return Experiment::AA;
  if (s == "AI") return Experiment::AI;
  throw Error("unknown experiment '" + s + "'");
}

/// One subject's normalized train/test datasets.
struct SubjectData {
  std::string id;
  Condition condition = Condition::intact;
  Dataset train;
  Dataset test;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::II;
  std::vector<Method> methods = all_methods();
  std::vector<Index> sizes;
  std::vector<std::uint64_t> seeds{0};
  MethodSettings settings;
  Index source_train_cap = 600;  // 0 = no cap
  std::uint64_t base_seed = 0;
  int jobs = 1;
  std::vector<std::string> targets;  // restrict targets to these subject ids; empty = all eligible
};

inline void validate(const ExperimentConfig& cfg) {
  require(!cfg.methods.empty(), "config: no methods");
  require(!cfg.sizes.empty(), "config: empty size schedule");
  for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
    require(cfg.sizes[i] >= 1, "config: sizes must be positive");
    require(i == 0 || cfg.sizes[i] > cfg.sizes[i - 1], "config: size schedule must be strictly increasing");
  }
  require(!cfg.seeds.empty(), "config: seeds must be nonempty");
  require(cfg.jobs >= 1, "config: jobs must be >= 1");
}

/// (target, sources) index pairs for an experiment over a cohort.
struct Roles {
  std::vector<std::size_t> targets;
  std::vector<std::vector<std::size_t>> sources;  // per target
};

inline Roles assign_roles(const std::vector<SubjectData>& cohort, Experiment e, const std::vector<std::string>& only = {}) {
  for (const auto& id : only)
    require(std::any_of(cohort.begin(), cohort.end(), [&](const SubjectData& s) { return s.id == id; }),
            "experiment: unknown target subject '" + id + "'");
  const Condition target_cond = e == Experiment::II ? Condition::intact : Condition::amputee;
  const Condition source_cond = e == Experiment::AA ? Condition::amputee : Condition::intact;
  Roles r;
  for (std::size_t t = 0; t < cohort.size(); ++t) {
    if (cohort[t].condition != target_cond) continue;
    if (!only.empty() && std::find(only.begin(), only.end(), cohort[t].id) == only.end()) continue;
    std::vector<std::size_t> src;
    for (std::size_t s = 0; s < cohort.size(); ++s)
      if (s != t && cohort[s].condition == source_cond) src.push_back(s);
    r.targets.push_back(t);
    r.sources.push_back(std::move(src));
  }
  require(!r.targets.empty(), "experiment " + to_string(e) + ": no eligible targets in cohort");
  return r;
}

struct CurvePoint {
  Method method;
  Index size = 0;
  double mean = 0.0, min = 0.0, max = 0.0;
};

struct RawAccuracy {
  Method method;
  Index size = 0;
  std::string target;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::string params;
  ConfusionMatrix confusion;      // this cell's test predictions
  std::vector<int> train_counts;  // training vectors per class
};

struct ExperimentResult {
  int num_classes = 0;
  std::vector<CurvePoint> curves;
  std::vector<RawAccuracy> raw;
  std::map<std::pair<Method, Index>, ConfusionMatrix> confusions;
  std::vector<std::string> warnings;
  std::vector<std::string> source_models_trained;  // subject ids
};

/// Runs `count` jobs on up to `jobs` threads; job i writes only its own slot,
/// so results do not depend on scheduling. The first failure (by job index)
/// is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), std::max<std::size_t>(count, 1));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// The first n entries of a seeded permutation of 0..available-1, sorted.
/// Subsets for growing n under one seed are nested.
inline std::vector<Index> nested_subset(Index available, std::uint64_t seed, Index n) {
  require(n >= 0 && n <= available, "nested_subset: size exceeds available rows");
  std::vector<Index> order(static_cast<std::size_t>(available));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle_in_place(order, rng);
  order.resize(static_cast<std::size_t>(n));
  std::sort(order.begin(), order.end());
  return order;
}

/// No Transfer source model on (at most `cap` randomly chosen) training rows.
inline LssvmModel train_source(const SubjectData& s, const ExperimentConfig& cfg, std::uint64_t seed) {
  Dataset data = s.train;
  if (cfg.source_train_cap > 0 && data.size() > cfg.source_train_cap) {
    std::vector<Index> rows(static_cast<std::size_t>(data.size()));
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(derive_seed(seed, 0xca9));
    shuffle_in_place(rows, rng);
    rows.resize(static_cast<std::size_t>(cfg.source_train_cap));
    std::sort(rows.begin(), rows.end());
    data = subset(data, rows);
  }
  Grid grid = cfg.settings.grid;
  grid.seed = derive_seed(seed, 0x9d);
  return fit_no_transfer(data, grid);
}

/// The full protocol: for each target and seed, a random permutation of its
/// training rows gives nested training sets along the size schedule; every
/// method is fitted per size and scored on the target's test set.
inline ExperimentResult run_experiment(const std::vector<SubjectData>& cohort, const ExperimentConfig& cfg) {
  validate(cfg);
  require(!cohort.empty(), "run_experiment: empty cohort");
  const int g = cohort.front().train.num_classes;
  for (const auto& s : cohort) {
    require(s.train.num_classes == g && s.test.num_classes == g, "run_experiment: class count differs across subjects");
    require(s.train.dim() == cohort.front().train.dim(), "run_experiment: feature dimension differs across subjects");
    require(s.test.size() > 0, "run_experiment: subject " + s.id + " has no test data");
  }
  const Roles roles = assign_roles(cohort, cfg.experiment, cfg.targets);
  const bool use_sources = std::any_of(cfg.methods.begin(), cfg.methods.end(), needs_sources);

  ExperimentResult res;
  res.num_classes = g;

  // Source models, each trained once.
  std::vector<std::shared_ptr<const LssvmModel>> models(cohort.size());
  if (use_sources) {
    std::vector<std::size_t> needed;
    for (const auto& src : roles.sources) needed.insert(needed.end(), src.begin(), src.end());
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    for (std::size_t t = 0; t < roles.targets.size(); ++t)
      require(!roles.sources[t].empty(), "experiment " + to_string(cfg.experiment) + ": target " +
                                             cohort[roles.targets[t]].id + " has no sources");
    parallel_for(needed.size(), cfg.jobs, [&](std::size_t i) {
      const std::size_t s = needed[i];
      models[s] = std::make_shared<const LssvmModel>(train_source(cohort[s], cfg, derive_seed(cfg.base_seed, 0x50, s)));
    });
    for (std::size_t s : needed) res.source_models_trained.push_back(cohort[s].id);
  }

  // Per-target source scores on all training and test rows.
  struct TargetScores {
    SourceScores train, test;
  };
  std::vector<TargetScores> scores(roles.targets.size());
  if (use_sources) {
    parallel_for(roles.targets.size(), cfg.jobs, [&](std::size_t t) {
      const auto& subj = cohort[roles.targets[t]];
      SourceSet set;
      for (std::size_t s : roles.sources[t]) set.push_back(models[s]);
      scores[t].train = source_scores(set, subj.train.features);
      scores[t].test = source_scores(set, subj.test.features);
    });
  }

  // Usable sizes per target.
  std::vector<std::vector<Index>> sizes(roles.targets.size());
  for (std::size_t t = 0; t < roles.targets.size(); ++t) {
    const auto& subj = cohort[roles.targets[t]];
    for (Index n : cfg.sizes) {
      if (n <= subj.train.size()) {
        sizes[t].push_back(n);
      } else {
        res.warnings.push_back("target " + subj.id + ": size " + std::to_string(n) + " exceeds " +
                               std::to_string(subj.train.size()) + " training vectors; truncated");
      }
    }
  }

  struct Job {
    std::size_t target;
    std::size_t seed_index;
    std::size_t size_index;
    std::size_t method_index;
  };
  struct Outcome {
    double accuracy = 0.0;
    ConfusionMatrix cm;
    std::string params;
    std::vector<int> counts;
  };
  std::vector<Job> jobs;
  for (std::size_t t = 0; t < roles.targets.size(); ++t)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
      for (std::size_t z = 0; z < sizes[t].size(); ++z)
        for (std::size_t m = 0; m < cfg.methods.size(); ++m) jobs.push_back({t, s, z, m});

  std::vector<Outcome> outcomes(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto& subj = cohort[roles.targets[job.target]];
    const std::uint64_t seed = cfg.seeds[job.seed_index];
    const Index n = sizes[job.target][job.size_index];
    const auto rows = nested_subset(subj.train.size(), derive_seed(cfg.base_seed, seed, roles.targets[job.target]), n);
    const Dataset train = subset(subj.train, rows);
    const Method method = cfg.methods[job.method_index];
    const SourceScores train_scores = needs_sources(method) ? select_rows(scores[job.target].train, rows) : SourceScores{};
    const auto fitted = fit_method(method, train, train_scores, cfg.settings,
                                   derive_seed(cfg.base_seed, seed, roles.targets[job.target], job.size_index, job.method_index));
    const auto pred = fitted.predict(subj.test.features, needs_sources(method) ? scores[job.target].test : SourceScores{});
    auto& out = outcomes[j];
    out.cm = confusion(pred.labels, subj.test.labels, g);
    out.accuracy = accuracy(pred.labels, subj.test.labels);
    out.params = fitted.params;
    out.counts.assign(static_cast<std::size_t>(g), 0);
    for (int l : train.labels) ++out.counts[static_cast<std::size_t>(l)];
  });

  // Aggregation: per (method, size) the per-target accuracy is the mean over
  // seeds; the curve reports mean, min and max over targets.
  std::map<std::pair<Method, Index>, std::map<std::size_t, std::vector<double>>> per_target;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    const Method method = cfg.methods[job.method_index];
    const Index n = sizes[job.target][job.size_index];
    const auto key = std::make_pair(method, n);
    per_target[key][job.target].push_back(outcomes[j].accuracy);
    auto it = res.confusions.find(key);
    if (it == res.confusions.end()) it = res.confusions.emplace(key, empty_confusion(g)).first;
    accumulate(it->second, outcomes[j].cm);
    res.raw.push_back({method, n, cohort[roles.targets[job.target]].id, cfg.seeds[job.seed_index], outcomes[j].accuracy,
                       outcomes[j].params, outcomes[j].cm, outcomes[j].counts});
  }
  for (Method method : cfg.methods) {
    for (Index n : cfg.sizes) {
      const auto it = per_target.find({method, n});
      if (it == per_target.end()) continue;
      CurvePoint p{method, n, 0.0, 1.0, 0.0};
      for (const auto& [t, accs] : it->second) {
        double a = 0.0;
        for (double v : accs) a += v;
        a /= static_cast<double>(accs.size());
        p.mean += a;
        p.min = std::min(p.min, a);
        p.max = std::max(p.max, a);
      }
      p.mean = std::clamp(p.mean / static_cast<double>(it->second.size()), p.min, p.max);
      res.curves.push_back(p);
    }
  }
  std::stable_sort(res.raw.begin(), res.raw.end(), [&](const RawAccuracy& a, const RawAccuracy& b) {
    auto rank = [&](Method m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) - cfg.methods.begin(); };
    if (a.method != b.method) return rank(a.method) < rank(b.method);
    return a.size < b.size;
  });
  return res;
}

}  // namespace emgda
