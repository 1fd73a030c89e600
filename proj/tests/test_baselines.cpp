#include <catch_amalgamated.hpp>

#include <map>

#include "emgda/baselines.hpp"
#include "oracles.hpp"

using namespace emgda;

namespace {

// 18 overlapping classes with geometric priors; class centers fixed per call.
struct Problem {
  Matrix centers;
  std::vector<double> priors;
  double sigma;
};

Problem make_problem(Rng& rng, int g, Index d, double sigma, double decay) {
  std::normal_distribution<double> nd;
  Problem p;
  p.centers.resize(g, d);
  for (Index i = 0; i < p.centers.size(); ++i) p.centers.data()[i] = nd(rng);
  double w = 1.0;
  for (int c = 0; c < g; ++c, w *= decay) p.priors.push_back(w);
  p.sigma = sigma;
  return p;
}

Dataset draw(const Problem& p, Index n, Rng& rng, bool balanced) {
  std::normal_distribution<double> nd;
  std::discrete_distribution<int> cls(p.priors.begin(), p.priors.end());
  const int g = static_cast<int>(p.priors.size());
  Dataset ds;
  ds.num_classes = g;
  ds.features.resize(n, p.centers.cols());
  for (Index i = 0; i < n; ++i) {
    const int c = balanced ? static_cast<int>(i % g) : cls(rng);
    for (Index j = 0; j < p.centers.cols(); ++j) ds.features(i, j) = p.centers(c, j) + p.sigma * nd(rng);
    ds.labels.push_back(c);
  }
  return ds;
}

int mode(const Labels& l, int g) {
  std::vector<int> cnt(static_cast<std::size_t>(g), 0);
  for (int v : l) ++cnt[static_cast<std::size_t>(v)];
  return static_cast<int>(std::max_element(cnt.begin(), cnt.end()) - cnt.begin());
}

}  // namespace

TEST_CASE("no transfer equals lssvm fit at the selected parameters", "[baselines]") {
  Rng rng(40);
  const auto ds = fixtures::blobs(rng, {10, 12, 8}, 3, 2.0, 1.0);
  Grid grid;
  Selection<Params> sel;
  const auto m = fit_no_transfer(ds, grid, &sel);
  const auto ref = fit(ds, KernelSpec::gaussian(sel.best.gamma), sel.best.C);
  CHECK(m.alphas == ref.alphas);
  CHECK(m.biases == ref.biases);
  CHECK(m.kernel.gamma == sel.best.gamma);
}

TEST_CASE("no transfer with 120 unbalanced samples favors the frequent class", "[baselines]") {
  int agree = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(static_cast<std::uint64_t>(1000 + seed));
    const auto prob = make_problem(rng, 18, 6, 1.2, 0.85);
    const auto train = draw(prob, 120, rng, false);
    const auto test = draw(prob, 18 * 30, rng, true);
    const auto m = fit_no_transfer(train, Grid{});
    agree += mode(predict(m, test.features).labels, 18) == mode(train.labels, 18) ? 1 : 0;
  }
  CHECK(agree >= 7);
}

TEST_CASE("no transfer accuracy trends upward with training size", "[baselines]") {
  std::vector<double> sizes, accs;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(static_cast<std::uint64_t>(2000 + seed));
    const auto prob = make_problem(rng, 6, 4, 1.0, 0.9);
    const auto pool = draw(prob, 480, rng, false);
    const auto test = draw(prob, 600, rng, true);
    for (Index n : {30, 60, 120, 240, 480}) {
      std::vector<Index> rows(static_cast<std::size_t>(n));
      std::iota(rows.begin(), rows.end(), 0);
      const auto m = fit_no_transfer(subset(pool, rows), Grid{});
      sizes.push_back(static_cast<double>(n));
      accs.push_back(accuracy(predict(m, test.features).labels, test.labels));
    }
  }
  CHECK(oracle::spearman(sizes, accs) > 0.0);
}

TEST_CASE("prior features with oracle sources tracks the oracle", "[baselines]") {
  Rng rng(41);
  const auto prob = make_problem(rng, 5, 4, 0.6, 1.0);
  const auto big = draw(prob, 600, rng, false);
  const auto oracle_model = std::make_shared<const LssvmModel>(fit(big, KernelSpec::gaussian(0.3), 10.0));
  const SourceSet sources{oracle_model};
  const auto train = draw(prob, 60, rng, false);
  const auto test = draw(prob, 1000, rng, true);
  const double oracle_acc = accuracy(predict(*oracle_model, test.features).labels, test.labels);
  const auto pf = fit_prior_features(train, sources, Grid{});
  const double pf_acc =
      accuracy(predict_prior_features(pf, source_scores(sources, test.features)).labels, test.labels);
  CHECK(std::abs(pf_acc - oracle_acc) <= 0.02);
}

TEST_CASE("prior features with constant sources is at chance", "[baselines]") {
  Rng rng(42);
  const auto prob = make_problem(rng, 4, 3, 1.0, 1.0);
  const auto train = draw(prob, 40, rng, true);
  const auto test = draw(prob, 400, rng, true);
  SourceScores tr{Matrix::Constant(40, 4, 0.3)};
  SourceScores te{Matrix::Constant(400, 4, 0.3)};
  const auto pf = fit_prior_features(train.labels, 4, tr, Grid{});
  CHECK(accuracy(predict_prior_features(pf, te).labels, test.labels) == 0.25);
  CHECK_THROWS_AS(fit_prior_features(train.labels, 4, SourceScores{}, Grid{}), Error);
}

TEST_CASE("prior features: a duplicated source only rescales the linear kernel", "[baselines]") {
  // [S, S] doubles the linear kernel, which is the same machine at twice C.
  Rng rng(43);
  const auto prob = make_problem(rng, 4, 3, 1.0, 1.0);
  const auto big = draw(prob, 200, rng, false);
  const SourceSet one{std::make_shared<const LssvmModel>(fit(big, KernelSpec::gaussian(0.5), 1.0))};
  const SourceSet two{one[0], one[0]};
  const auto train = draw(prob, 50, rng, false);
  const auto test = draw(prob, 200, rng, true);
  Grid g1, g2;
  g1.C_values = {2.0};
  g2.C_values = {1.0};
  const auto a = fit_prior_features(train, one, g1);
  const auto b = fit_prior_features(train, two, g2);
  const auto pa = predict_prior_features(a, source_scores(one, test.features));
  const auto pb = predict_prior_features(b, source_scores(two, test.features));
  CHECK((pa.scores - pb.scores).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(pa.labels == pb.labels);
}
