#include <catch_amalgamated.hpp>

#include <cmath>

#include "emgda/adapt_hl2l.hpp"
#include "oracles.hpp"

using namespace emgda;

namespace {

Hl2lParams params() { return {KernelSpec::gaussian(0.3), 10.0, KernelSpec::gaussian(0.1), 10.0}; }

}  // namespace

TEST_CASE("stratified split sizes follow round-half-up per class", "[hl2l]") {
  Rng rng(80);
  for (int trial = 0; trial < 20; ++trial) {
    const int g = 2 + static_cast<int>(uniform_index(rng, 17));
    const auto ds = fixtures::random_dataset(rng, 30 + static_cast<Index>(uniform_index(rng, 100)), 1, g);
    const auto sp = stratified_split(ds.labels, g, 0.63, 7);
    std::vector<Index> counts(static_cast<std::size_t>(g), 0), firsts(static_cast<std::size_t>(g), 0);
    for (int y : ds.labels) ++counts[static_cast<std::size_t>(y)];
    for (Index i : sp.first) ++firsts[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
    Index expected_second = ds.size();
    for (int c = 0; c < g; ++c) {
      const Index n = counts[static_cast<std::size_t>(c)];
      const Index want = n == 0 ? 0 : std::clamp<Index>(static_cast<Index>(std::floor(0.63 * static_cast<double>(n) + 0.5)), 1, n);
      CHECK(firsts[static_cast<std::size_t>(c)] == want);
      expected_second -= want;
    }
    CHECK(static_cast<Index>(sp.second.size()) == expected_second);
    std::vector<Index> all = sp.first;
    all.insert(all.end(), sp.second.begin(), sp.second.end());
    std::sort(all.begin(), all.end());
    for (Index i = 0; i < ds.size(); ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
    const auto again = stratified_split(ds.labels, g, 0.63, 7);
    CHECK(again.first == sp.first);
  }
}

TEST_CASE("a single-sample class goes to layer 1", "[hl2l]") {
  const auto sp = stratified_split({0, 1, 1, 1}, 2, 0.63, 1);
  CHECK(std::count(sp.first.begin(), sp.first.end(), 0) == 1);
  CHECK(sp.second.size() == 1);
}

TEST_CASE("stacked input has (K + 1) * G columns", "[hl2l]") {
  Rng rng(81);
  const auto ds = fixtures::blobs(rng, {10, 10, 10, 10}, 2, 2.0, 1.0);
  const auto other = fixtures::blobs(rng, {10, 10, 10, 10}, 2, 2.0, 1.0);
  const auto src = std::make_shared<const LssvmModel>(fit(other, KernelSpec::gaussian(0.3), 10.0));
  const auto m = fit_hl2l(ds, SourceSet{src, src, src}, params(), 3);
  CHECK(m.stack_dim() == 16);
  CHECK(m.layer2.support_inputs.cols() == 16);
}

TEST_CASE("permuting sources consistently leaves labels unchanged", "[hl2l]") {
  Rng rng(82);
  const auto ds = fixtures::blobs(rng, {12, 12, 12}, 2, 1.0, 1.0);
  const auto o1 = fixtures::blobs(rng, {20, 20, 20}, 2, 1.0, 1.0);
  const auto o2 = fixtures::blobs(rng, {20, 20, 20}, 2, 1.0, 1.0);
  const auto a = std::make_shared<const LssvmModel>(fit(o1, KernelSpec::gaussian(0.3), 10.0));
  const auto b = std::make_shared<const LssvmModel>(fit(o2, KernelSpec::gaussian(1.0), 1.0));
  const auto m1 = fit_hl2l(ds, SourceSet{a, b}, params(), 4);
  const auto m2 = fit_hl2l(ds, SourceSet{b, a}, params(), 4);
  const auto probe = fixtures::random_dataset(rng, 60, 2, 3);
  const Matrix x = probe.features * 3.0;
  CHECK(predict_hl2l(m1, x).labels == predict_hl2l(m2, x).labels);
}

TEST_CASE("all-zero source scores ablate that source", "[hl2l]") {
  Rng rng(83);
  const auto ds = fixtures::blobs(rng, {12, 12, 12}, 2, 1.0, 1.0);
  const auto o1 = fixtures::blobs(rng, {20, 20, 20}, 2, 1.0, 1.0);
  const auto a = std::make_shared<const LssvmModel>(fit(o1, KernelSpec::gaussian(0.3), 10.0));
  const auto probe = fixtures::random_dataset(rng, 60, 2, 3);
  const Matrix x = probe.features * 3.0;
  const SourceScores with_zero_tr{source_scores({a}, ds.features)[0], Matrix::Zero(ds.size(), 3)};
  const SourceScores with_zero_te{source_scores({a}, x)[0], Matrix::Zero(x.rows(), 3)};
  const auto m1 = fit_hl2l(ds, source_scores({a}, ds.features), params(), 5);
  const auto m2 = fit_hl2l(ds, with_zero_tr, params(), 5);
  CHECK(predict_hl2l(m1, x, source_scores({a}, x)).labels == predict_hl2l(m2, x, with_zero_te).labels);
}

TEST_CASE("h-l2l input errors", "[hl2l]") {
  Rng rng(84);
  const auto ds = fixtures::blobs(rng, {6, 6}, 2, 1.0, 1.0);
  CHECK_THROWS_AS(fit_hl2l(ds, SourceSet{}, params(), 1), Error);
  const auto three = fixtures::blobs(rng, {4, 4, 4}, 2, 1.0, 1.0);
  const auto src = std::make_shared<const LssvmModel>(fit(three, KernelSpec::gaussian(0.3), 10.0));
  Dataset tiny;
  tiny.num_classes = 3;
  tiny.features = Matrix::Random(3, 2);
  tiny.labels = {0, 1, 2};
  try {
    fit_hl2l(tiny, SourceSet{src}, params(), 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("insufficient data for stacking") != std::string::npos);
  }
}

TEST_CASE("with perfect sources layer 2 is at least as accurate as layer 1", "[hl2l]") {
  int ok = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(static_cast<std::uint64_t>(8500 + seed));
    const auto pool = fixtures::blobs(rng, {150, 150, 150, 150}, 3, 1.6, 1.0);
    std::vector<Index> tr, src, te;
    for (Index i = 0; i < pool.size(); ++i) {
      const Index r = i % 150;
      (r < 15 ? tr : (r < 100 ? src : te)).push_back(i);
    }
    const auto train = subset(pool, tr), test = subset(pool, te);
    const auto oracle_src = std::make_shared<const LssvmModel>(fit(subset(pool, src), KernelSpec::gaussian(0.3), 10.0));
    const Hl2lParams p{KernelSpec::gaussian(0.3), 10.0, KernelSpec::gaussian(0.05), 1.0};
    const auto m = fit_hl2l(train, SourceSet{oracle_src}, p, static_cast<std::uint64_t>(seed));
    const double l1 = accuracy(predict(m.layer1, test.features).labels, test.labels);
    const double l2 = accuracy(predict_hl2l(m, test.features).labels, test.labels);
    ok += l2 >= l1 ? 1 : 0;
  }
  CHECK(ok >= 8);
}
