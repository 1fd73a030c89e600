#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "emgda/emgda.hpp"

using namespace emgda;

namespace {

constexpr const char* kVersion = "1.0.0";

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// "a:b:step" (inclusive) or "x,y,z".
std::vector<long long> parse_int_schedule(const std::string& s, const std::string& what) {
  std::vector<long long> out;
  try {
    const auto colon = split_list(s);
    if (s.find(':') != std::string::npos) {
      std::vector<long long> parts;
      std::size_t start = 0;
      for (;;) {
        const auto pos = s.find(':', start);
        parts.push_back(std::stoll(s.substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
      }
      if (parts.size() == 2) parts.push_back(1);
      if (parts.size() != 3 || parts[2] <= 0 || parts[1] < parts[0]) throw Error(what + ": expected a:b or a:b:step with a <= b");
      for (long long v = parts[0]; v <= parts[1]; v += parts[2]) out.push_back(v);
    } else {
      for (const auto& x : colon) out.push_back(std::stoll(x));
    }
  } catch (const std::logic_error&) {
    throw Error(what + ": cannot parse '" + s + "'");
  }
  if (out.empty()) throw Error(what + ": empty list");
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& x : split_list(s)) {
    try {
      out.push_back(std::stod(x));
    } catch (const std::logic_error&) {
      throw Error(what + ": cannot parse '" + x + "'");
    }
  }
  if (out.empty()) throw Error(what + ": empty list");
  return out;
}

/// Turns a --config JSON object into "--key value" tokens. They go in front of
/// the command-line flags, and every option keeps its last value, so flags win.
std::vector<std::string> config_tokens(const fs::path& path) {
  const Json cfg = read_json(path);
  if (!cfg.is_object()) throw Error(path.string() + ": config must be a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (const auto& v : value) text += (text.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
    } else {
      text = value.dump();
    }
    out.push_back("--" + key);
    out.push_back(text);
  }
  return out;
}

// ---- synth ----

struct SynthArgs {
  int subjects = 4;
  int classes = 8;
  int channels = 12;
  std::uint64_t seed = 0;
  double shift = 0.3;
  double amputee_fraction = 0.0;
  double degradation = 0.3;
  double noise_floor = 0.05;
  int reps = 6;
  double movement_ms = 1000.0;
  double rest_ms = 300.0;
  double rate_hz = 2000.0;
  std::string out_dir;
};

int cmd_synth(const SynthArgs& a) {
  CohortOptions opt;
  opt.subjects = a.subjects;
  opt.base_seed = a.seed;
  opt.shift_strength = a.shift;
  opt.amputee_fraction = a.amputee_fraction;
  opt.num_classes = a.classes;
  opt.channels = a.channels;
  opt.noise_floor = a.noise_floor;
  opt.amputee_degradation = a.degradation;
  const RecordingPlan plan{a.reps, a.movement_ms, a.rest_ms, a.rate_hz};
  const auto cohort = generate_cohort(opt);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  Json subjects = Json::array();
  for (const auto& spec : cohort) {
    const Recording rec = generate_recording(spec, plan);
    write_recording(rec, dir / (spec.subject_id + ".json"));
    subjects.push_back({{"subject_id", spec.subject_id}, {"condition", to_string(spec.condition)}, {"recording", spec.subject_id + ".json"}});
    std::cout << spec.subject_id << " (" << to_string(spec.condition) << "): " << rec.length() << " samples\n";
  }
  write_json(dir / "cohort.json", Json{{"version", kVersion},
                                       {"subjects", subjects},
                                       {"options",
                                        {{"subjects", a.subjects},
                                         {"classes", a.classes},
                                         {"channels", a.channels},
                                         {"seed", a.seed},
                                         {"shift", a.shift},
                                         {"amputee_fraction", a.amputee_fraction},
                                         {"degradation", a.degradation},
                                         {"noise_floor", a.noise_floor},
                                         {"reps", a.reps},
                                         {"movement_ms", a.movement_ms},
                                         {"rest_ms", a.rest_ms},
                                         {"rate_hz", a.rate_hz}}}});
  return 0;
}

// ---- features ----

struct FeaturesArgs {
  std::string in_dir;
  std::string out_dir;
  double window_ms = 200.0;
  double step_ms = 10.0;
  std::string feature_mode = "concat";
  std::string test_reps = "5,6";
};

int cmd_features(const FeaturesArgs& a) {
  const fs::path in(a.in_dir), out(a.out_dir);
  const Json cohort = read_json(in / "cohort.json");
  const WindowSpec spec{a.window_ms, a.step_ms};
  const FeatureMode mode = feature_mode_from_string(a.feature_mode);
  std::set<int> test_reps;
  for (long long r : parse_int_schedule(a.test_reps, "--test-reps")) test_reps.insert(static_cast<int>(r));
  fs::create_directories(out);
  Json subjects = Json::array();
  for (const auto& s : cohort.at("subjects")) {
    const Recording rec = read_recording(in / s.at("recording").get<std::string>());
    const auto [train, test] = prepare_subject(rec, spec, test_reps, mode);
    require(test.size() > 0, "subject " + rec.subject_id + ": no windows in the test repetitions");
    const std::string stem = rec.subject_id;
    write_dataset({rec.subject_id, rec.condition, train}, out / (stem + "_train.csv"));
    write_dataset({rec.subject_id, rec.condition, test}, out / (stem + "_test.csv"));
    subjects.push_back({{"subject_id", rec.subject_id},
                        {"condition", to_string(rec.condition)},
                        {"train", stem + "_train.csv"},
                        {"test", stem + "_test.csv"}});
    std::cout << stem << ": " << train.size() << " train / " << test.size() << " test vectors, d=" << train.dim() << '\n';
  }
  write_json(out / "datasets.json", Json{{"version", kVersion},
                                         {"window_ms", a.window_ms},
                                         {"step_ms", a.step_ms},
                                         {"feature_mode", a.feature_mode},
                                         {"test_reps", std::vector<int>(test_reps.begin(), test_reps.end())},
                                         {"subjects", subjects}});
  return 0;
}

// ---- run ----

struct RunArgs {
  std::string data_dir;
  std::string out_dir;
  std::string experiment = "II";
  std::string methods = "NoTransfer,PriorFeatures,MA,MKAL,HL2L";
  std::string sizes = "120:2160:120";
  std::string seeds = "0";
  std::uint64_t base_seed = 0;
  int jobs = 1;
  long long source_cap = 600;
  std::string grid_c = "0.01,0.1,1,10,100,1000";
  std::string grid_gamma = "0.01,0.1,1,10,100,1000";
  int folds = 5;
  std::string mkal_p = "1.05,1.25,1.5,2";
  std::string mkal_lambda = "1e-4,1e-3,1e-2,1e-1";
};

std::vector<SubjectData> load_cohort(const fs::path& dir) {
  const Json manifest = read_json(dir / "datasets.json");
  std::vector<SubjectData> cohort;
  for (const auto& s : manifest.at("subjects")) {
    auto train = read_dataset(dir / s.at("train").get<std::string>());
    auto test = read_dataset(dir / s.at("test").get<std::string>());
    cohort.push_back({train.subject_id, train.condition, std::move(train.data), std::move(test.data)});
  }
  require(!cohort.empty(), dir.string() + ": no subjects");
  return cohort;
}

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg;
  cfg.experiment = experiment_from_string(a.experiment);
  cfg.methods.clear();
  for (const auto& m : split_list(a.methods)) cfg.methods.push_back(method_from_string(m));
  for (long long n : parse_int_schedule(a.sizes, "--sizes")) cfg.sizes.push_back(static_cast<Index>(n));
  cfg.seeds.clear();
  for (long long s : parse_int_schedule(a.seeds, "--seeds")) {
    require(s >= 0, "--seeds: seeds must be nonnegative");
    cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  cfg.base_seed = a.base_seed;
  cfg.jobs = a.jobs;
  require(a.source_cap >= 0, "--source-cap must be >= 0");
  cfg.source_train_cap = static_cast<Index>(a.source_cap);
  cfg.settings.grid.C_values = parse_doubles(a.grid_c, "--grid-c");
  cfg.settings.grid.gamma_values = parse_doubles(a.grid_gamma, "--grid-gamma");
  cfg.settings.grid.folds = a.folds;
  cfg.settings.mkal_p = parse_doubles(a.mkal_p, "--mkal-p");
  cfg.settings.mkal_lambda = parse_doubles(a.mkal_lambda, "--mkal-lambda");
  require(a.folds >= 2, "--folds must be >= 2");
  validate(cfg);

  const auto cohort = load_cohort(a.data_dir);
  const ExperimentResult res = run_experiment(cohort, cfg);

  const fs::path out(a.out_dir);
  fs::create_directories(out);
  write_curves(out / "curves.csv", res.curves);
  write_raw_accuracy(out / "raw_accuracy.csv", res.raw);
  Json confusions = Json::array();
  for (const auto& [key, cm] : res.confusions) {
    const std::string name = confusion_filename(key.first, key.second);
    write_confusion(out / name, cm);
    confusions.push_back({{"method", to_string(key.first)}, {"size", key.second}, {"file", name}});
  }

  // Per-size comparisons across methods: recognition correlation, and each
  // method's top-4 similarity against No Transfer.
  std::set<Index> sizes;
  for (const auto& [key, cm] : res.confusions) sizes.insert(key.second);
  std::vector<SimilarityRow> sims;
  for (Index n : sizes) {
    std::vector<std::pair<std::string, ConfusionMatrix>> runs;
    for (Method m : cfg.methods) {
      const auto it = res.confusions.find({m, n});
      if (it != res.confusions.end()) runs.emplace_back(to_string(m), it->second);
    }
    write_correlation(out / ("correlation_" + std::to_string(n) + ".csv"), recognition_correlation(runs));
    const auto nt = res.confusions.find({Method::NoTransfer, n});
    if (nt == res.confusions.end() || res.num_classes < 4) continue;
    for (const auto& [name, cm] : runs)
      if (name != to_string(Method::NoTransfer))
        sims.push_back({name + "@" + std::to_string(n), name, to_string(Method::NoTransfer), top4_similarity(cm, nt->second)});
  }
  if (!sims.empty()) write_similarity(out / "similarity.csv", sims);

  Json methods = Json::array();
  for (Method m : cfg.methods) methods.push_back(to_string(m));
  write_json(out / "manifest.json",
             Json{{"version", kVersion},
                  {"experiment", to_string(cfg.experiment)},
                  {"data_dir", a.data_dir},
                  {"methods", methods},
                  {"sizes", cfg.sizes},
                  {"seeds", cfg.seeds},
                  {"base_seed", cfg.base_seed},
                  {"source_train_cap", cfg.source_train_cap},
                  {"grid", {{"C", cfg.settings.grid.C_values}, {"gamma", cfg.settings.grid.gamma_values}, {"folds", cfg.settings.grid.folds}}},
                  {"mkal", {{"p", cfg.settings.mkal_p}, {"lambda", cfg.settings.mkal_lambda}}},
                  {"num_classes", res.num_classes},
                  {"source_models_trained", res.source_models_trained},
                  {"confusions", confusions},
                  {"warnings", res.warnings}});

  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  std::printf("%-14s %6s %8s %8s %8s\n", "method", "size", "mean", "min", "max");
  for (const auto& c : res.curves)
    std::printf("%-14s %6lld %8.4f %8.4f %8.4f\n", to_string(c.method).c_str(), static_cast<long long>(c.size), c.mean, c.min, c.max);
  return 0;
}

// ---- analyze ----

struct AnalyzeArgs {
  std::vector<std::string> runs;
  std::string out_dir;
  long long size = 0;  // 0 = largest size common to all runs
};

int cmd_analyze(const AnalyzeArgs& a) {
  require(!a.runs.empty(), "analyze: need at least one run directory");
  struct Run {
    std::string experiment;
    std::map<std::pair<std::string, Index>, fs::path> files;
  };
  std::vector<Run> runs;
  std::set<Index> common_sizes;
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    const fs::path dir(a.runs[i]);
    const Json m = read_json(dir / "manifest.json");
    Run r;
    r.experiment = m.at("experiment").get<std::string>();
    std::set<Index> sizes;
    for (const auto& c : m.at("confusions")) {
      const auto key = std::make_pair(c.at("method").get<std::string>(), c.at("size").get<Index>());
      r.files[key] = dir / c.at("file").get<std::string>();
      sizes.insert(key.second);
    }
    if (i == 0) {
      common_sizes = sizes;
    } else {
      std::set<Index> keep;
      std::set_intersection(common_sizes.begin(), common_sizes.end(), sizes.begin(), sizes.end(), std::inserter(keep, keep.begin()));
      common_sizes = keep;
    }
    runs.push_back(std::move(r));
  }
  require(!common_sizes.empty(), "analyze: runs share no training size");
  const Index size = a.size > 0 ? static_cast<Index>(a.size) : *common_sizes.rbegin();
  require(common_sizes.count(size) > 0, "analyze: size " + std::to_string(size) + " is not present in every run");

  // Labels are "<experiment>/<method>"; repeated experiments get a run suffix.
  std::vector<std::pair<std::string, ConfusionMatrix>> named;
  std::map<std::string, int> seen;
  std::vector<std::string> prefixes;
  for (const auto& r : runs) {
    const int k = seen[r.experiment]++;
    prefixes.push_back(k == 0 ? r.experiment : r.experiment + "-r" + std::to_string(k + 1));
  }
  int g = -1;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& [key, file] : runs[i].files) {
      if (key.second != size) continue;
      ConfusionMatrix cm = read_confusion(file);
      if (g < 0) g = cm.classes();
      require(cm.classes() == g, "analyze: incompatible class counts across inputs");
      named.emplace_back(prefixes[i] + "/" + key.first, std::move(cm));
    }
  }

  const fs::path out(a.out_dir);
  fs::create_directories(out);
  write_correlation(out / "correlation.csv", recognition_correlation(named));

  // Differences and similarities between run pairs, per shared method.
  std::vector<SimilarityRow> sims;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      for (const auto& [key, file] : runs[i].files) {
        if (key.second != size) continue;
        const auto other = runs[j].files.find(key);
        if (other == runs[j].files.end()) continue;
        const auto ca = read_confusion(file), cb = read_confusion(other->second);
        const Matrix d = confusion_diff(ca, cb);
        write_matrix_csv(out / ("diff_" + key.first + "_" + prefixes[i] + "_" + prefixes[j] + ".csv"), d);
        std::printf("%s %s-%s diagonal range [%+.0f%%, %+.0f%%]\n", key.first.c_str(), prefixes[i].c_str(), prefixes[j].c_str(),
                    100.0 * d.diagonal().minCoeff(), 100.0 * d.diagonal().maxCoeff());
        if (g >= 4) {
          sims.push_back({key.first, prefixes[i], prefixes[j], top4_similarity(ca, cb)});
          std::printf("%s %s vs %s top-4 similarity %s\n", key.first.c_str(), prefixes[i].c_str(), prefixes[j].c_str(),
                      format_similarity(sims.back().similarity).c_str());
        }
      }
    }
  }
  if (!sims.empty()) write_similarity(out / "similarity.csv", sims);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain adaptation for multichannel EMG posture classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort of recordings");
  synth->add_option("--subjects", sa.subjects, "Number of subjects")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--classes", sa.classes, "Classes including rest (G)")->check(CLI::Range(2, 1000))->capture_default_str();
  synth->add_option("--channels", sa.channels, "Channels (C)")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--seed", sa.seed, "Cohort seed")->capture_default_str();
  synth->add_option("--shift", sa.shift, "Domain shift strength")->check(CLI::NonNegativeNumber)->capture_default_str();
  synth->add_option("--amputee-fraction", sa.amputee_fraction, "Share of amputee subjects")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--degradation", sa.degradation, "Amputee degradation in [0, 1)")->check(CLI::Range(0.0, 0.999))->capture_default_str();
  synth->add_option("--noise-floor", sa.noise_floor, "Additive noise stddev")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--reps", sa.reps, "Repetitions per movement")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--movement-ms", sa.movement_ms, "Movement segment length")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--rest-ms", sa.rest_ms, "Rest segment length")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--rate-hz", sa.rate_hz, "Sampling rate")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--out-dir", sa.out_dir, "Output directory")->required();

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "Window recordings into normalized train/test datasets");
  features->add_option("--in-dir", fa.in_dir, "Directory holding cohort.json and recordings")->required();
  features->add_option("--out-dir", fa.out_dir, "Output directory")->required();
  features->add_option("--window-ms", fa.window_ms, "Window length")->check(CLI::PositiveNumber)->capture_default_str();
  features->add_option("--step-ms", fa.step_ms, "Window step")->check(CLI::PositiveNumber)->capture_default_str();
  features->add_option("--feature-mode", fa.feature_mode, "concat or averaged")
      ->check(CLI::IsMember({"concat", "averaged"}))
      ->capture_default_str();
  features->add_option("--test-reps", fa.test_reps, "Held-out repetitions, e.g. 5,6")->capture_default_str();

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run one experiment and write curves, confusions and a manifest");
  run->add_option("--data-dir", ra.data_dir, "Directory holding datasets.json")->required();
  run->add_option("--out-dir", ra.out_dir, "Output directory")->required();
  run->add_option("--experiment", ra.experiment, "II, AA or AI")->check(CLI::IsMember({"II", "AA", "AI"}))->capture_default_str();
  run->add_option("--methods", ra.methods, "Comma-separated methods")
      ->check(CLI::Validator(
          [](std::string& v) {
            for (const auto& m : split_list(v)) {
              try {
                method_from_string(m);
              } catch (const Error&) {
                return "unknown method '" + m + "'";
              }
            }
            return std::string();
          },
          "METHODS"))
      ->capture_default_str();
  run->add_option("--sizes", ra.sizes, "a:b:step or a comma list")->capture_default_str();
  run->add_option("--seeds", ra.seeds, "Comma list or a:b range")->capture_default_str();
  run->add_option("--base-seed", ra.base_seed, "Seed for all derived randomness")->capture_default_str();
  run->add_option("--jobs", ra.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--source-cap", ra.source_cap, "Max training vectors per source model (0 = all)")->capture_default_str();
  run->add_option("--grid-c", ra.grid_c, "C values")->capture_default_str();
  run->add_option("--grid-gamma", ra.grid_gamma, "Gaussian gamma values")->capture_default_str();
  run->add_option("--folds", ra.folds, "Cross-validation folds")->capture_default_str();
  run->add_option("--mkal-p", ra.mkal_p, "MKAL p values")->capture_default_str();
  run->add_option("--mkal-lambda", ra.mkal_lambda, "MKAL lambda values")->capture_default_str();

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Compare stored confusion matrices across runs");
  analyze->add_option("--runs", aa.runs, "Run output directories")->required()->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');
  analyze->add_option("--out-dir", aa.out_dir, "Output directory")->required();
  analyze->add_option("--size", aa.size, "Training size to compare (default: largest shared)");

  for (auto* sub : {synth, features, run, analyze}) sub->add_option("--config", "JSON file with default flag values");

  // Splice config-file values in front of the subcommand's own flags.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] != "--config") continue;
      const auto tokens = config_tokens(args[i + 1]);
      std::size_t sub = 0;
      while (sub < args.size() && args[sub].rfind("-", 0) == 0) ++sub;
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(std::min(sub + 1, args.size())), tokens.begin(), tokens.end());
      break;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*features) return cmd_features(fa);
    if (*run) return cmd_run(ra);
    if (*analyze) return cmd_analyze(aa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
