#pragma once

#include <functional>
#include <string>
#include <vector>

#include "emgda/adapt_hl2l.hpp"
#include "emgda/adapt_ma.hpp"
#include "emgda/adapt_mkal.hpp"
#include "emgda/baselines.hpp"
#include "emgda/io.hpp"

namespace emgda {

/// Looks up a source model by the id stored in a document.
using SourceResolver = std::function<std::shared_ptr<const LssvmModel>(const std::string&)>;

namespace serialize_detail {

/// {rows, cols, data} with data in row-major order.
inline Json matrix_json(const Matrix& m) {
  Json data = Json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from(const Json& j) {
  const auto rows = j.at("rows").get<Index>(), cols = j.at("cols").get<Index>();
  const Json& data = j.at("data");
  require(rows >= 0 && cols >= 0 && static_cast<Index>(data.size()) == rows * cols, "model document: matrix size mismatch");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

inline Json kernel_json(const KernelSpec& k) { return {{"kind", to_string(k.kind)}, {"gamma", k.gamma}}; }

inline KernelSpec kernel_from(const Json& j) {
  const auto kind = kernel_kind_from_string(j.at("kind").get<std::string>());
  return kind == KernelKind::gaussian ? KernelSpec::gaussian(j.at("gamma").get<double>()) : KernelSpec::linear();
}

inline void expect_type(const Json& j, const char* type) {
  if (!j.contains("type") || j["type"] != type) throw Error(std::string("model document: expected type '") + type + "'");
}

inline std::vector<std::string> check_ids(const std::vector<std::string>& ids, std::size_t k) {
  require(ids.empty() || ids.size() == k, "model document: source id count != source count");
  return ids;
}

inline SourceSet resolve(const Json& ids, const SourceResolver& resolver) {
  SourceSet out;
  if (!resolver) return out;
  for (const auto& id : ids) {
    auto m = resolver(id.get<std::string>());
    if (!m) throw Error("model document: unresolved source '" + id.get<std::string>() + "'");
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace serialize_detail

inline Json to_json(const LssvmModel& m) {
  namespace sd = serialize_detail;
  Json j{{"type", "lssvm"},
         {"kernel", sd::kernel_json(m.kernel)},
         {"C", m.C},
         {"num_classes", m.num_classes},
         {"biases", io_detail::vec_json(m.biases)},
         {"alphas", sd::matrix_json(m.alphas)},
         {"support_inputs", sd::matrix_json(m.support_inputs)}};
  j["norm_stats"] = m.norm_stats ? to_json(*m.norm_stats) : Json(nullptr);
  return j;
}

inline LssvmModel lssvm_from_json(const Json& j) {
  namespace sd = serialize_detail;
  sd::expect_type(j, "lssvm");
  try {
    LssvmModel m;
    m.kernel = sd::kernel_from(j.at("kernel"));
    m.C = j.at("C").get<double>();
    m.num_classes = j.at("num_classes").get<int>();
    m.biases = io_detail::vec_from(j.at("biases"));
    m.alphas = sd::matrix_from(j.at("alphas"));
    m.support_inputs = sd::matrix_from(j.at("support_inputs"));
    if (!j.at("norm_stats").is_null()) m.norm_stats = norm_stats_from_json(j["norm_stats"]);
    require(m.alphas.rows() == m.support_inputs.rows() && m.alphas.cols() == m.num_classes && m.biases.size() == m.num_classes,
            "lssvm document: inconsistent shapes");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("lssvm document: ") + e.what());
  }
}

/// Sources are stored by id; `source_ids` may be empty for score-only models.
inline Json to_json(const MaModel& m, const std::vector<std::string>& source_ids = {}) {
  return {{"type", "multi_adapt"},
          {"base", to_json(m.base)},
          {"beta", serialize_detail::matrix_json(m.beta.values)},
          {"sources", serialize_detail::check_ids(source_ids, static_cast<std::size_t>(m.beta.sources()))}};
}

inline MaModel ma_from_json(const Json& j, const SourceResolver& resolver = {}) {
  serialize_detail::expect_type(j, "multi_adapt");
  MaModel m;
  m.base = lssvm_from_json(j.at("base"));
  m.beta.values = serialize_detail::matrix_from(j.at("beta"));
  m.sources = serialize_detail::resolve(j.at("sources"), resolver);
  require(m.beta.classes() == m.base.num_classes, "multi_adapt document: beta shape mismatch");
  return m;
}

inline Json to_json(const MkalModel& m) {
  namespace sd = serialize_detail;
  Json blocks = Json::array(), coeffs = Json::array(), scores = Json::array();
  blocks.push_back({{"kind", "input"}, {"kernel", sd::kernel_json(m.raw_kernel)}, {"offset", 1.0}});
  for (std::size_t k = 0; k < m.training_scores.size(); ++k) blocks.push_back({{"kind", "source_scores"}, {"source", k}});
  for (const auto& c : m.dual_coeffs) coeffs.push_back(sd::matrix_json(c));
  for (const auto& s : m.training_scores) scores.push_back(sd::matrix_json(s));
  const Index n = m.training_inputs.rows();
  return {{"type", "mkal"},
          {"p", m.p},
          {"lambda", m.lambda},
          {"num_classes", m.num_classes},
          {"blocks", std::move(blocks)},
          {"score_tensor_shape", {m.training_scores.size(), n, m.num_classes}},
          {"training_inputs", sd::matrix_json(m.training_inputs)},
          {"training_scores", std::move(scores)},
          {"dual_coeffs", std::move(coeffs)},
          {"block_norms", io_detail::vec_json(m.block_norms)}};
}

inline MkalModel mkal_from_json(const Json& j) {
  namespace sd = serialize_detail;
  sd::expect_type(j, "mkal");
  try {
    MkalModel m;
    m.p = j.at("p").get<double>();
    m.lambda = j.at("lambda").get<double>();
    m.num_classes = j.at("num_classes").get<int>();
    m.raw_kernel = sd::kernel_from(j.at("blocks").at(0).at("kernel"));
    m.training_inputs = sd::matrix_from(j.at("training_inputs"));
    for (const auto& s : j.at("training_scores")) m.training_scores.push_back(sd::matrix_from(s));
    for (const auto& c : j.at("dual_coeffs")) m.dual_coeffs.push_back(sd::matrix_from(c));
    m.block_norms = io_detail::vec_from(j.at("block_norms"));
    const auto shape = j.at("score_tensor_shape").get<std::vector<Index>>();
    require(shape.size() == 3 && shape[0] == static_cast<Index>(m.training_scores.size()), "mkal document: score tensor shape mismatch");
    for (const auto& s : m.training_scores)
      require(s.rows() == shape[1] && s.cols() == shape[2], "mkal document: score tensor shape mismatch");
    require(m.dual_coeffs.size() == m.training_scores.size() + 1 && m.block_norms.size() == m.num_blocks(),
            "mkal document: block count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("mkal document: ") + e.what());
  }
}

inline Json to_json(const Hl2lModel& m, const std::vector<std::string>& source_ids = {}) {
  return {{"type", "hl2l"},
          {"layer1", to_json(m.layer1)},
          {"layer2", to_json(m.layer2)},
          {"score_norm", to_json(m.score_norm)},
          {"num_sources", m.num_sources},
          {"split", {{"seed", m.split_seed}, {"ratio", m.split_ratio}, {"first", m.split.first}, {"second", m.split.second}}},
          {"sources", serialize_detail::check_ids(source_ids, static_cast<std::size_t>(m.num_sources))}};
}

inline Hl2lModel hl2l_from_json(const Json& j, const SourceResolver& resolver = {}) {
  serialize_detail::expect_type(j, "hl2l");
  try {
    Hl2lModel m;
    m.layer1 = lssvm_from_json(j.at("layer1"));
    m.layer2 = lssvm_from_json(j.at("layer2"));
    m.score_norm = norm_stats_from_json(j.at("score_norm"));
    m.num_sources = j.at("num_sources").get<Index>();
    const Json& sp = j.at("split");
    m.split_seed = sp.at("seed").get<std::uint64_t>();
    m.split_ratio = sp.at("ratio").get<double>();
    m.split.first = sp.at("first").get<std::vector<Index>>();
    m.split.second = sp.at("second").get<std::vector<Index>>();
    m.sources = serialize_detail::resolve(j.at("sources"), resolver);
    require(m.layer2.input_dim() == m.stack_dim(), "hl2l document: layer 2 input dimension != stacking dimension");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("hl2l document: ") + e.what());
  }
}

inline Json to_json(const PriorFeaturesModel& m) {
  return {{"type", "prior_features"}, {"score_norm", to_json(m.score_norm)}, {"model", to_json(m.model)}};
}

inline PriorFeaturesModel prior_features_from_json(const Json& j) {
  serialize_detail::expect_type(j, "prior_features");
  return {norm_stats_from_json(j.at("score_norm")), lssvm_from_json(j.at("model"))};
}

}  // namespace emgda
