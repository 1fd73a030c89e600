#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "emgda/core.hpp"

namespace emgda {

enum class Condition { intact, amputee };

inline std::string to_string(Condition c) { return c == Condition::intact ? "intact" : "amputee"; }

inline Condition condition_from_string(const std::string& s) {
  if (s == "intact") return Condition::intact;
  if (s == "amputee") return Condition::amputee;
  throw Error("unknown condition '" + s + "'");
}

/// Raw multichannel signal with per-sample posture label (0 = rest) and
/// repetition index.
struct Recording {
  std::string subject_id;
  Condition condition = Condition::intact;
  double sampling_rate_hz = 2000.0;
  int num_classes = 0;
  Matrix samples;  // T x C
  Labels labels;
  std::vector<int> repetitions;

  Index length() const { return samples.rows(); }
  int channels() const { return static_cast<int>(samples.cols()); }
};

inline void validate(const Recording& rec) {
  require(rec.sampling_rate_hz > 0.0, "recording: sampling rate must be positive");
  require(rec.samples.cols() >= 1, "recording: need at least one channel");
  require(static_cast<Index>(rec.labels.size()) == rec.length(), "recording: labels length != T");
  require(static_cast<Index>(rec.repetitions.size()) == rec.length(), "recording: repetitions length != T");
  require(rec.samples.allFinite(), "recording: non-finite sample value");
  for (int l : rec.labels) {
    require(l >= 0 && (rec.num_classes <= 0 || l < rec.num_classes), "recording: label out of range");
  }
}

struct WindowSpec {
  double window_ms = 200.0;
  double step_ms = 10.0;

  /// Window and step lengths in whole samples at the given rate.
  std::pair<Index, Index> in_samples(double rate_hz) const {
    require(window_ms > 0.0 && step_ms > 0.0, "window spec: durations must be positive");
    require(step_ms <= window_ms, "window spec: step longer than window");
    const auto w = static_cast<Index>(std::lround(window_ms * rate_hz / 1000.0));
    const auto s = static_cast<Index>(std::lround(step_ms * rate_hz / 1000.0));
    require(w >= 1 && s >= 1, "window spec: window or step rounds to zero samples");
    return {w, s};
  }
};

struct Window {
  Matrix data;  // W x C
  int label = 0;
  int repetition = 0;
};

/// Sliding-window segmentation. Windows sit at offsets 0, S, 2S, ... while
/// they fit; the label is the majority (ties to the smaller id) and a window
/// touching two distinct movement classes is dropped.
inline std::vector<Window> segment(const Recording& rec, const WindowSpec& spec) {
  validate(rec);
  const auto [w, s] = spec.in_samples(rec.sampling_rate_hz);
  if (rec.length() < w) throw Error("recording too short");

  const Index count = (rec.length() - w) / s + 1;
  std::vector<Window> out;
  out.reserve(static_cast<std::size_t>(count));
  std::map<int, Index> tally;
  for (Index k = 0; k < count; ++k) {
    const Index off = k * s;
    tally.clear();
    for (Index t = off; t < off + w; ++t) ++tally[rec.labels[static_cast<std::size_t>(t)]];
    int movements = 0;
    for (const auto& [label, n] : tally) movements += label != 0 ? 1 : 0;
    if (movements > 1) continue;
    int label = tally.begin()->first;
    Index best = tally.begin()->second;
    for (const auto& [l, n] : tally) {
      if (n > best) {
        best = n;
        label = l;
      }
    }
    Window win;
    win.data = rec.samples.block(off, 0, w, rec.samples.cols());
    win.label = label;
    win.repetition = rec.repetitions[static_cast<std::size_t>(off + w / 2)];
    out.push_back(std::move(win));
  }
  return out;
}

/// [MAV_1..MAV_C, VAR_1..VAR_C, WL_1..WL_C]; variance uses 1/(W-1).
inline Vector extract_features(const Matrix& window) {
  const Index w = window.rows();
  const Index c = window.cols();
  require(w >= 2, "extract_features: window needs at least 2 samples");
  require(window.allFinite(), "extract_features: non-finite value");
  Vector f(3 * c);
  for (Index ch = 0; ch < c; ++ch) {
    const auto col = window.col(ch);
    const double mean = col.mean();
    f(ch) = col.cwiseAbs().mean();
    f(c + ch) = (col.array() - mean).square().sum() / static_cast<double>(w - 1);
    f(2 * c + ch) = (col.tail(w - 1) - col.head(w - 1)).cwiseAbs().sum();
  }
  return f;
}

inline std::vector<std::string> feature_names(int channels) {
  std::vector<std::string> names;
  for (const char* block : {"MAV", "VAR", "WL"}) {
    for (int c = 1; c <= channels; ++c) names.push_back(std::string(block) + "_" + std::to_string(c));
  }
  return names;
}

struct NormStats {
  Vector mean;
  Vector stddev;
};

struct Dataset {
  Matrix features;  // N x d
  Labels labels;
  int num_classes = 0;
  std::vector<std::string> feature_names;
  std::optional<NormStats> norm_stats;
  std::vector<int> repetitions;  // optional provenance, empty or N entries

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
};

inline void validate(const Dataset& ds) {
  require(static_cast<Index>(ds.labels.size()) == ds.size(), "dataset: labels length != N");
  require(ds.features.allFinite(), "dataset: non-finite feature");
  for (int l : ds.labels) require(l >= 0 && l < ds.num_classes, "dataset: label out of range");
}

inline Dataset subset(const Dataset& ds, const std::vector<Index>& rows) {
  Dataset out;
  out.features = select_rows(ds.features, rows);
  out.labels = select_items(ds.labels, rows);
  out.num_classes = ds.num_classes;
  out.feature_names = ds.feature_names;
  out.norm_stats = ds.norm_stats;
  if (!ds.repetitions.empty()) out.repetitions = select_items(ds.repetitions, rows);
  return out;
}

inline Dataset build_dataset(const std::vector<Recording>& recs, const WindowSpec& spec) {
  if (recs.empty()) throw Error("no data");
  const int channels = recs.front().channels();
  const int classes = recs.front().num_classes;
  std::vector<Vector> rows;
  Dataset ds;
  for (const auto& rec : recs) {
    if (rec.channels() != channels) throw Error("build_dataset: mixed channel counts");
    require(rec.num_classes == classes, "build_dataset: mixed class counts");
    for (const auto& win : segment(rec, spec)) {
      rows.push_back(extract_features(win.data));
      ds.labels.push_back(win.label);
      ds.repetitions.push_back(win.repetition);
    }
  }
  ds.features.resize(static_cast<Index>(rows.size()), 3 * channels);
  for (std::size_t i = 0; i < rows.size(); ++i) ds.features.row(static_cast<Index>(i)) = rows[i].transpose();
  ds.num_classes = classes;
  ds.feature_names = feature_names(channels);
  return ds;
}

/// Per-dimension mean and 1/(N-1) standard deviation.
inline NormStats fit_normalizer(const Matrix& x) {
  NormStats st;
  const Index n = x.rows();
  st.mean = n > 0 ? Vector(x.colwise().mean().transpose()) : Vector::Zero(x.cols());
  st.stddev = Vector::Zero(x.cols());
  if (n > 1) {
    for (Index j = 0; j < x.cols(); ++j) {
      st.stddev(j) = std::sqrt((x.col(j).array() - st.mean(j)).square().sum() / static_cast<double>(n - 1));
    }
  }
  return st;
}

inline NormStats fit_normalizer(const Dataset& train) { return fit_normalizer(train.features); }

inline Matrix apply_normalizer(const Matrix& x, const NormStats& st) {
  require(x.cols() == st.mean.size(), "apply_normalizer: dimension mismatch");
  Matrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    if (st.stddev(j) > 0.0) {
      out.col(j) = (x.col(j).array() - st.mean(j)) / st.stddev(j);
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

inline Dataset apply_normalizer(const Dataset& ds, const NormStats& st) {
  Dataset out = ds;
  out.features = apply_normalizer(ds.features, st);
  out.norm_stats = st;
  return out;
}

enum class FeatureMode { concat, averaged };

inline FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "concat") return FeatureMode::concat;
  if (s == "averaged") return FeatureMode::averaged;
  throw Error("unknown feature mode '" + s + "'");
}

/// Collapse normalized [MAV|VAR|WL] blocks into their per-channel mean (d = C).
inline Dataset average_blocks(const Dataset& ds) {
  require(ds.dim() % 3 == 0, "average_blocks: dimension is not 3C");
  const Index c = ds.dim() / 3;
  Dataset out = ds;
  out.features = (ds.features.leftCols(c) + ds.features.middleCols(c, c) + ds.features.rightCols(c)) / 3.0;
  out.feature_names.clear();
  for (Index ch = 1; ch <= c; ++ch) out.feature_names.push_back("AVG_" + std::to_string(ch));
  return out;
}

/// Train/test split by repetition index: windows whose repetition is in
/// `test_reps` form the test side.
inline std::pair<Dataset, Dataset> split_by_repetition(const Dataset& ds, const std::set<int>& test_reps) {
  require(static_cast<Index>(ds.repetitions.size()) == ds.size(), "split_by_repetition: dataset has no repetition indices");
  std::vector<Index> train, test;
  for (Index i = 0; i < ds.size(); ++i) {
    (test_reps.count(ds.repetitions[static_cast<std::size_t>(i)]) ? test : train).push_back(i);
  }
  return {subset(ds, train), subset(ds, test)};
}

/// Full per-subject pipeline: windows -> features -> split -> normalize with
/// training statistics -> optional block averaging.
inline std::pair<Dataset, Dataset> prepare_subject(const Recording& rec, const WindowSpec& spec,
                                                   const std::set<int>& test_reps, FeatureMode mode) {
  Dataset all = build_dataset({rec}, spec);
  auto [train, test] = split_by_repetition(all, test_reps);
  require(train.size() > 0, "prepare_subject: empty training side");
  const NormStats st = fit_normalizer(train);
  train = apply_normalizer(train, st);
  test = apply_normalizer(test, st);
  if (mode == FeatureMode::averaged) {
    train = average_blocks(train);
    test = average_blocks(test);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace emgda
