#include <catch_amalgamated.hpp>

#include "emgda/lssvm.hpp"
#include "oracles.hpp"

using namespace emgda;
using Catch::Approx;

namespace {

Matrix probe_grid(Index d, int n, Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Matrix p(n, d);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  return p;
}

// Primal objective evaluated with actual residuals y - f(x_i).
double primal_with_residuals(const Matrix& k, const Vector& y, const Vector& a, double b, double c) {
  const Vector f = k * a + Vector::Constant(y.size(), b);
  return 0.5 * a.dot(k * a) + 0.5 * c * (y - f).squaredNorm();
}

}  // namespace

TEST_CASE("fit: two points, linear kernel, matches dense solve", "[lssvm]") {
  Dataset ds;
  ds.features.resize(2, 1);
  ds.features << 0.0, 1.0;
  ds.labels = {0, 1};
  ds.num_classes = 2;
  const auto m = fit(ds, KernelSpec::linear(), 10.0);
  const Matrix k = gram(KernelSpec::linear(), ds.features);
  const Matrix y = one_vs_all_targets(ds.labels, 2);
  for (int g = 0; g < 2; ++g) {
    const auto [b, a] = oracle::lssvm_dense(k, y.col(g), 10.0);
    CHECK(m.biases(g) == Approx(b).margin(1e-12));
    CHECK((m.alphas.col(g) - a).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("fit: KKT system, dense oracle and bias constraint", "[lssvm][property]") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 39));
    const int g = 2 + static_cast<int>(uniform_index(rng, 3));
    const auto ds = fixtures::random_dataset(rng, n, 3, g);
    const double c = std::pow(10.0, static_cast<double>(trial % 5) - 2.0);
    const auto spec = KernelSpec::gaussian(0.5);
    const auto m = fit(ds, spec, c);
    const Matrix k = gram(spec, ds.features);
    const Matrix y = one_vs_all_targets(ds.labels, g);
    const auto probes = probe_grid(3, 15, rng);
    const Matrix scores = decision_values(m, probes);
    for (int cls = 0; cls < g; ++cls) {
      const auto a = m.alphas.col(cls);
      // KKT rows: sum a = 0 and (K + I/C) a + b 1 = y
      CHECK(std::abs(a.sum()) <= 1e-8 * std::max(1.0, a.norm()));
      const Vector row = k * a + a / c + Vector::Constant(n, m.biases(cls)) - y.col(cls);
      CHECK(row.cwiseAbs().maxCoeff() <= 1e-8);
      const auto [b, ao] = oracle::lssvm_dense(k, y.col(cls), c);
      for (Index j = 0; j < probes.rows(); ++j) {
        double f = b;
        for (Index i = 0; i < n; ++i) f += ao(i) * oracle::gaussian(ds.features.row(i), probes.row(j), 0.5);
        CHECK(std::abs(scores(j, cls) - f) <= 1e-8);
      }
    }
  }
}

TEST_CASE("fit: solution minimizes the primal objective", "[lssvm]") {
  Rng rng(8);
  const auto ds = fixtures::random_dataset(rng, 20, 2, 2);
  const auto spec = KernelSpec::gaussian(1.0);
  const auto m = fit(ds, spec, 3.0);
  const Matrix k = gram(spec, ds.features);
  const Vector y = one_vs_all_targets(ds.labels, 2).col(0);
  const double best = primal_with_residuals(k, y, m.alphas.col(0), m.biases(0), 3.0);
  std::normal_distribution<double> nd(0.0, 0.05);
  for (int t = 0; t < 20; ++t) {
    Vector da(20);
    for (int i = 0; i < 20; ++i) da(i) = nd(rng);
    da.array() -= da.mean();
    CHECK(primal_with_residuals(k, y, m.alphas.col(0) + da, m.biases(0) + nd(rng), 3.0) >= best);
  }
  CHECK(primal_objective(m) > 0.0);
}

TEST_CASE("fit: duplicated dataset equals the original at doubled C", "[lssvm]") {
  Rng rng(9);
  const auto ds = fixtures::random_dataset(rng, 15, 2, 3);
  Dataset dup = ds;
  dup.features.resize(30, 2);
  dup.features << ds.features, ds.features;
  dup.labels.insert(dup.labels.end(), ds.labels.begin(), ds.labels.end());
  const auto spec = KernelSpec::gaussian(2.0);
  const auto probes = probe_grid(2, 25, rng);
  const Matrix s_dup = decision_values(fit(dup, spec, 5.0), probes);
  const Matrix s_ref = decision_values(fit(ds, spec, 10.0), probes);
  CHECK((s_dup - s_ref).cwiseAbs().maxCoeff() <= 1e-6);
  // and against the dense oracle on the duplicated system itself
  const Matrix k = gram(spec, dup.features);
  const auto [b, a] = oracle::lssvm_dense(k, one_vs_all_targets(dup.labels, 3).col(1), 5.0);
  for (Index j = 0; j < probes.rows(); ++j) {
    double f = b;
    for (Index i = 0; i < 30; ++i) f += a(i) * oracle::gaussian(dup.features.row(i), probes.row(j), 2.0);
    CHECK(std::abs(s_dup(j, 1) - f) <= 1e-6);
  }
}

TEST_CASE("fit: single-class training set and absent classes", "[lssvm]") {
  Rng rng(10);
  auto ds = fixtures::random_dataset(rng, 8, 2, 3);
  ds.labels.assign(8, 1);
  const auto m = fit(ds, KernelSpec::gaussian(1.0), 10.0);
  CHECK(m.alphas.isZero());
  CHECK(m.biases(0) == -1.0);
  CHECK(m.biases(2) == -1.0);
  const auto p = predict(m, probe_grid(2, 30, rng));
  for (Index j = 0; j < p.scores.rows(); ++j) {
    CHECK(p.scores(j, 1) > p.scores(j, 0));
    CHECK(p.scores(j, 1) > p.scores(j, 2));
  }
}

TEST_CASE("predict: separable blobs reach near-perfect training accuracy", "[lssvm]") {
  Rng rng(12);
  std::normal_distribution<double> nd(0.0, 0.3);
  Dataset ds;
  ds.num_classes = 3;
  const double centers[3][2] = {{0, 0}, {4, 0}, {0, 4}};
  ds.features.resize(90, 2);
  for (int i = 0; i < 90; ++i) {
    const int c = i % 3;
    ds.features(i, 0) = centers[c][0] + nd(rng);
    ds.features(i, 1) = centers[c][1] + nd(rng);
    ds.labels.push_back(c);
  }
  const auto m = fit(ds, KernelSpec::gaussian(0.5), 1000.0);
  CHECK(accuracy(predict(m, ds.features).labels, ds.labels) >= 0.99);
}

TEST_CASE("predict: constant scores, ties and bias shifts", "[lssvm]") {
  LssvmModel m;
  m.kernel = KernelSpec::gaussian(1.0);
  m.num_classes = 2;
  m.support_inputs = Matrix::Ones(4, 2);
  m.alphas = Matrix::Zero(4, 2);
  m.biases = Vector(2);
  m.biases << 0.0, -1.0;
  Rng rng(13);
  const Matrix x = probe_grid(2, 10, rng);
  for (int l : predict(m, x).labels) CHECK(l == 0);
  // equal scores break toward class 0
  m.biases << 0.5, 0.5;
  for (int l : predict(m, x).labels) CHECK(l == 0);

  const auto ds = fixtures::random_dataset(rng, 25, 2, 4);
  auto fitted = fit(ds, KernelSpec::gaussian(1.0), 10.0);
  const auto before = predict(fitted, x).labels;
  fitted.biases.array() += 3.7;
  CHECK(predict(fitted, x).labels == before);
  CHECK_THROWS_AS(predict(fitted, Matrix::Zero(2, 3)), Error);
}

TEST_CASE("loo_residuals: N=12, G=2 against explicit retraining", "[lssvm]") {
  Rng rng(14);
  const auto ds = fixtures::random_dataset(rng, 12, 3, 2);
  const auto spec = KernelSpec::gaussian(0.8);
  const Matrix r = loo_residuals(ds, spec, 4.0);
  const Matrix k = gram(spec, ds.features);
  const Matrix y = one_vs_all_targets(ds.labels, 2);
  for (int g = 0; g < 2; ++g) {
    CHECK((r.col(g) - oracle::lssvm_loo_bruteforce(k, y.col(g), 4.0)).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("loo_residuals: closed form equals brute force for N <= 30", "[lssvm][property]") {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3 + static_cast<Index>(uniform_index(rng, 28));
    const int g = 2 + static_cast<int>(uniform_index(rng, 3));
    const auto ds = fixtures::random_dataset(rng, n, 4, g);
    const auto spec = trial % 3 == 0 ? KernelSpec::linear() : KernelSpec::gaussian(0.3 * (1 + trial % 4));
    const double c = std::pow(10.0, static_cast<double>(trial % 4) - 1.0);
    const Matrix r = loo_residuals(ds, spec, c);
    const Matrix k = gram(spec, ds.features);
    const Matrix y = one_vs_all_targets(ds.labels, g);
    for (int cls = 0; cls < g; ++cls) {
      CHECK((r.col(cls) - oracle::lssvm_loo_bruteforce(k, y.col(cls), c)).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("loo_residuals: duplicated pairs stay close to in-sample residuals", "[lssvm]") {
  Rng rng(16);
  const auto base = fixtures::random_dataset(rng, 10, 2, 2);
  Dataset dup = base;
  dup.features.resize(20, 2);
  dup.features << base.features, base.features;
  dup.labels.insert(dup.labels.end(), base.labels.begin(), base.labels.end());
  const auto spec = KernelSpec::gaussian(1.0);
  const double c = 10.0;
  const Matrix r = loo_residuals(dup, spec, c);
  const Matrix k = gram(spec, dup.features);
  const Matrix y = one_vs_all_targets(dup.labels, 2);
  CHECK((r.col(0) - oracle::lssvm_loo_bruteforce(k, y.col(0), c)).cwiseAbs().maxCoeff() <= 1e-6);
  const auto m = fit(dup, spec, c);
  const Vector in_sample = m.alphas.col(0) / c;
  const Matrix r_single = loo_residuals(base, spec, c);
  // the twin remains, so the LOO error is far closer to the in-sample error
  // than the LOO error of the deduplicated set is
  const double dup_gap = (r.col(0) - in_sample).cwiseAbs().mean();
  const double single_gap = (r_single.col(0) - fit(base, spec, c).alphas.col(0) / c).cwiseAbs().mean();
  CHECK(dup_gap < 0.5 * single_gap);
}

TEST_CASE("loo_residuals: interior points shrink as C grows", "[lssvm]") {
  Rng rng(17);
  std::normal_distribution<double> nd(0.0, 0.2);
  Dataset ds;
  ds.num_classes = 2;
  ds.features.resize(40, 1);
  for (int i = 0; i < 40; ++i) {
    const int c = i % 2;
    ds.features(i, 0) = (c == 0 ? -2.0 : 2.0) + nd(rng);
    ds.labels.push_back(c);
  }
  const auto spec = KernelSpec::gaussian(0.5);
  double prev = std::numeric_limits<double>::infinity();
  for (double c : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const double mean_abs = loo_residuals(ds, spec, c).col(0).cwiseAbs().mean();
    CHECK(mean_abs < prev);
    prev = mean_abs;
  }
  CHECK_THROWS_AS(loo_residuals(fixtures::random_dataset(rng, 2, 1, 2), spec, 1.0), Error);
}

TEST_CASE("training squared error is non-increasing in C", "[lssvm][property]") {
  Rng rng(18);
  for (int trial = 0; trial < 5; ++trial) {
    const auto ds = fixtures::random_dataset(rng, 30, 3, 3);
    double prev = std::numeric_limits<double>::infinity();
    for (double c : {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
      const auto m = fit(ds, KernelSpec::gaussian(1.0), c);
      const double sq = (m.alphas / c).squaredNorm();
      CHECK(sq <= prev * (1 + 1e-12));
      prev = sq;
    }
  }
}
