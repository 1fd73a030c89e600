#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emgda/analysis.hpp"
#include "emgda/harness.hpp"
#include "emgda/signals.hpp"

namespace emgda {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace io_detail {

/// Shortest text that parses back to the same double (17 significant digits).
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double to_double(const std::string& s, const std::string& where) {
  if (s == "nan" || s == "NaN" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(where + ": malformed number '" + s + "'");
  }
  if (used != s.size()) throw Error(where + ": malformed number '" + s + "'");
  return v;
}

inline int to_int(const std::string& s, const std::string& where) {
  const double v = to_double(s, where);
  if (!(v == std::floor(v))) throw Error(where + ": expected an integer, got '" + s + "'");
  return static_cast<int>(v);
}

inline std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  return in;
}

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

inline void finish(std::ofstream& out, const fs::path& p) {
  out.flush();
  if (!out) throw Error("write failed: " + p.string());
}

inline Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector vec_from(const Json& a) {
  Vector v(static_cast<Index>(a.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = a.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

}  // namespace io_detail

inline Json to_json(const NormStats& st) { return {{"mean", io_detail::vec_json(st.mean)}, {"stddev", io_detail::vec_json(st.stddev)}}; }

inline NormStats norm_stats_from_json(const Json& j) {
  NormStats st{io_detail::vec_from(j.at("mean")), io_detail::vec_from(j.at("stddev"))};
  require(st.mean.size() == st.stddev.size(), "norm_stats: mean/stddev length mismatch");
  return st;
}

inline void write_json(const fs::path& p, const Json& j) {
  auto out = io_detail::open_out(p);
  out << j.dump(2) << '\n';
  io_detail::finish(out, p);
}

inline Json read_json(const fs::path& p) {
  auto in = io_detail::open_in(p);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

// ---- recordings: <stem>.json metadata plus <stem>.csv samples ----

inline void write_recording(const Recording& rec, const fs::path& json_path) {
  require(static_cast<Index>(rec.labels.size()) == rec.length() && static_cast<Index>(rec.repetitions.size()) == rec.length(),
          "recording: labels/repetitions length != T");
  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  write_json(json_path, Json{{"subject_id", rec.subject_id},
                             {"condition", to_string(rec.condition)},
                             {"sampling_rate_hz", rec.sampling_rate_hz},
                             {"channels", rec.channels()},
                             {"num_classes", rec.num_classes},
                             {"samples_file", csv_path.filename().string()}});
  auto out = io_detail::open_out(csv_path);
  for (int c = 1; c <= rec.channels(); ++c) out << "ch_" << c << ',';
  out << "label,repetition\n";
  for (Index t = 0; t < rec.length(); ++t) {
    for (Index c = 0; c < rec.samples.cols(); ++c) out << io_detail::num(rec.samples(t, c)) << ',';
    out << rec.labels[static_cast<std::size_t>(t)] << ',' << rec.repetitions[static_cast<std::size_t>(t)] << '\n';
  }
  io_detail::finish(out, csv_path);
}

inline Recording read_recording(const fs::path& json_path) {
  const Json meta = read_json(json_path);
  Recording rec;
  int channels = 0;
  try {
    rec.subject_id = meta.at("subject_id").get<std::string>();
    rec.condition = condition_from_string(meta.at("condition").get<std::string>());
    rec.sampling_rate_hz = meta.at("sampling_rate_hz").get<double>();
    rec.num_classes = meta.at("num_classes").get<int>();
    channels = meta.at("channels").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(json_path.string() + ": " + e.what());
  }
  require(channels >= 1 && rec.sampling_rate_hz > 0.0 && rec.num_classes >= 1, json_path.string() + ": invalid metadata");
  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  if (meta.contains("samples_file")) csv_path = json_path.parent_path() / meta["samples_file"].get<std::string>();
  auto in = io_detail::open_in(csv_path);
  std::string line;
  std::getline(in, line);
  require(static_cast<int>(io_detail::split(line).size()) == channels + 2, csv_path.string() + ": header does not match channel count");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = io_detail::split(line);
    require(static_cast<int>(cells.size()) == channels + 2, csv_path.string() + ": wrong column count");
    for (int c = 0; c < channels; ++c) values.push_back(io_detail::to_double(cells[static_cast<std::size_t>(c)], csv_path.string()));
    const int label = io_detail::to_int(cells[static_cast<std::size_t>(channels)], csv_path.string());
    const int rep = io_detail::to_int(cells[static_cast<std::size_t>(channels) + 1], csv_path.string());
    require(label >= 0 && label < rec.num_classes, csv_path.string() + ": label out of range");
    require(rep >= 1, csv_path.string() + ": repetition must be positive");
    rec.labels.push_back(label);
    rec.repetitions.push_back(rep);
  }
  const auto t = static_cast<Index>(rec.labels.size());
  rec.samples = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), t, channels);
  require(rec.samples.allFinite(), csv_path.string() + ": non-finite sample");
  return rec;
}

// ---- datasets: CSV f_1..f_d,label plus a JSON sidecar ----

struct DatasetFile {
  std::string subject_id;
  Condition condition = Condition::intact;
  Dataset data;
};

inline fs::path sidecar_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

inline void write_dataset(const DatasetFile& f, const fs::path& csv_path) {
  const Dataset& ds = f.data;
  validate(ds);
  auto out = io_detail::open_out(csv_path);
  for (Index j = 1; j <= ds.dim(); ++j) out << "f_" << j << ',';
  out << "label\n";
  for (Index i = 0; i < ds.size(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) out << io_detail::num(ds.features(i, j)) << ',';
    out << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
  io_detail::finish(out, csv_path);
  Json meta{{"subject_id", f.subject_id},
            {"condition", to_string(f.condition)},
            {"num_classes", ds.num_classes},
            {"feature_names", ds.feature_names}};
  meta["norm_stats"] = ds.norm_stats ? to_json(*ds.norm_stats) : Json(nullptr);
  write_json(sidecar_path(csv_path), meta);
}

inline DatasetFile read_dataset(const fs::path& csv_path) {
  const Json meta = read_json(sidecar_path(csv_path));
  DatasetFile f;
  try {
    f.subject_id = meta.at("subject_id").get<std::string>();
    f.condition = condition_from_string(meta.at("condition").get<std::string>());
    f.data.num_classes = meta.at("num_classes").get<int>();
    f.data.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
    if (!meta.at("norm_stats").is_null()) f.data.norm_stats = norm_stats_from_json(meta["norm_stats"]);
  } catch (const nlohmann::json::exception& e) {
    throw Error(sidecar_path(csv_path).string() + ": " + e.what());
  }
  auto in = io_detail::open_in(csv_path);
  std::string line;
  std::getline(in, line);
  const auto cols = io_detail::split(line).size();
  require(cols >= 2, csv_path.string() + ": need at least one feature column");
  const auto d = static_cast<Index>(cols - 1);
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = io_detail::split(line);
    require(cells.size() == cols, csv_path.string() + ": wrong column count");
    for (Index j = 0; j < d; ++j) values.push_back(io_detail::to_double(cells[static_cast<std::size_t>(j)], csv_path.string()));
    f.data.labels.push_back(io_detail::to_int(cells.back(), csv_path.string()));
  }
  const auto n = static_cast<Index>(f.data.labels.size());
  f.data.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), n, d);
  require(f.data.feature_names.empty() || static_cast<Index>(f.data.feature_names.size()) == d,
          csv_path.string() + ": feature_names length != d");
  validate(f.data);
  return f;
}

// ---- harness outputs ----

inline void write_matrix_csv(const fs::path& p, const Matrix& m, const std::vector<std::string>& header = {}) {
  auto out = io_detail::open_out(p);
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
  }
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << (std::isnan(m(r, c)) ? std::string("nan") : io_detail::num(m(r, c)));
    out << '\n';
  }
  io_detail::finish(out, p);
}

/// Counts with a header row "true_0..true_{G-1}"; row r = predicted class r.
inline void write_confusion(const fs::path& p, const ConfusionMatrix& cm) {
  std::vector<std::string> header;
  for (int c = 0; c < cm.classes(); ++c) header.push_back("true_" + std::to_string(c));
  write_matrix_csv(p, cm.counts, header);
}

inline ConfusionMatrix read_confusion(const fs::path& p) {
  auto in = io_detail::open_in(p);
  std::string line;
  std::getline(in, line);
  const auto g = static_cast<Index>(io_detail::split(line).size());
  require(g >= 1, p.string() + ": empty header");
  ConfusionMatrix cm = empty_confusion(static_cast<int>(g));
  Index r = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    require(r < g, p.string() + ": more rows than classes");
    const auto cells = io_detail::split(line);
    require(static_cast<Index>(cells.size()) == g, p.string() + ": wrong column count");
    for (Index c = 0; c < g; ++c) {
      const double v = io_detail::to_double(cells[static_cast<std::size_t>(c)], p.string());
      require(v >= 0.0 && v == std::floor(v), p.string() + ": counts must be nonnegative integers");
      cm.counts(r, c) = v;
    }
    ++r;
  }
  require(r == g, p.string() + ": expected a square matrix");
  return cm;
}

inline std::string confusion_filename(Method m, Index size) {
  return "confusion_" + to_string(m) + "_" + std::to_string(size) + ".csv";
}

inline void write_curves(const fs::path& p, const std::vector<CurvePoint>& curves) {
  auto out = io_detail::open_out(p);
  out << "method,size,mean,min,max\n";
  for (const auto& c : curves)
    out << to_string(c.method) << ',' << c.size << ',' << io_detail::num(c.mean) << ',' << io_detail::num(c.min) << ','
        << io_detail::num(c.max) << '\n';
  io_detail::finish(out, p);
}

inline void write_raw_accuracy(const fs::path& p, const std::vector<RawAccuracy>& raw) {
  auto out = io_detail::open_out(p);
  out << "method,size,target,seed,accuracy,params\n";
  for (const auto& r : raw)
    out << to_string(r.method) << ',' << r.size << ',' << r.target << ',' << r.seed << ',' << io_detail::num(r.accuracy) << ",\""
        << r.params << "\"\n";
  io_detail::finish(out, p);
}

struct SimilarityRow {
  std::string method;
  std::string left, right;
  Similarity similarity;
};

/// Columns: method, pair, similarity ("NN% (k/G)"), fraction, matching classes.
inline void write_similarity(const fs::path& p, const std::vector<SimilarityRow>& rows) {
  auto out = io_detail::open_out(p);
  out << "method,pair,similarity,fraction,matching_classes\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.left << " vs " << r.right << ",\"" << format_similarity(r.similarity) << "\","
        << io_detail::num(r.similarity.fraction) << ',';
    for (std::size_t i = 0; i < r.similarity.matching_classes.size(); ++i) out << (i ? " " : "") << r.similarity.matching_classes[i];
    out << '\n';
  }
  io_detail::finish(out, p);
}

/// Square table with a leading name column; undefined pairs are written as "nan".
inline void write_correlation(const fs::path& p, const CorrelationTable& t) {
  auto out = io_detail::open_out(p);
  out << "run";
  for (const auto& n : t.names) out << ',' << n;
  out << '\n';
  for (Index i = 0; i < t.values.rows(); ++i) {
    out << t.names[static_cast<std::size_t>(i)];
    for (Index j = 0; j < t.values.cols(); ++j)
      out << ',' << (std::isnan(t.values(i, j)) ? std::string("nan") : io_detail::num(t.values(i, j)));
    out << '\n';
  }
  io_detail::finish(out, p);
}

}  // namespace emgda
