#include <catch_amalgamated.hpp>

#include "emgda/kernels.hpp"
#include "oracles.hpp"

using namespace emgda;
using Catch::Approx;

TEST_CASE("kernel: scalar values", "[kernels]") {
  Vector a(2), b(2);
  a << 1, 2;
  b << 3, 4;
  CHECK(kernel(KernelSpec::gaussian(0.3), a, a) == 1.0);
  CHECK(kernel(KernelSpec::linear(), a, b) == 11.0);
  Vector c(2), d(2);
  c << 0, 0;
  d << 1, 0;
  CHECK(kernel(KernelSpec::gaussian(1.0), c, d) == Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(kernel(KernelSpec::linear(), a, Vector::Zero(3)), Error);
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), Error);
}

TEST_CASE("gram: elementwise oracle and shapes", "[kernels]") {
  Rng rng(1);
  const auto ds = fixtures::random_dataset(rng, 3, 4, 2);
  const Matrix k = gram(KernelSpec::gaussian(0.7), ds.features);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      CHECK(k(i, j) == Approx(oracle::gaussian(ds.features.row(i), ds.features.row(j), 0.7)).epsilon(1e-12));
  CHECK(k.diagonal().isOnes());
  CHECK(gram(KernelSpec::gaussian(1.0), Matrix(0, 4), ds.features).size() == 0);
  CHECK_THROWS_AS(gram(KernelSpec::linear(), ds.features, Matrix::Zero(2, 5)), Error);
}

TEST_CASE("gram: symmetric and PSD up to round-off", "[kernels][property]") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + static_cast<Index>(uniform_index(rng, 59));
    const Index d = 1 + static_cast<Index>(uniform_index(rng, 10));
    const auto ds = fixtures::random_dataset(rng, n, d, 2);
    const KernelSpec spec = trial % 5 == 4 ? KernelSpec::linear() : KernelSpec::gaussian(std::pow(10.0, static_cast<double>(trial % 4) - 2.0));
    const Matrix k = gram(spec, ds.features);
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(k, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    CHECK(min_eig >= -1e-8 * k.trace());
  }
}

TEST_CASE("gaussian kernel is translation invariant", "[kernels][property]") {
  Rng rng(4);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    Vector a(5), b(5), t(5);
    for (int i = 0; i < 5; ++i) {
      a(i) = nd(rng);
      b(i) = nd(rng);
      t(i) = 3.0 * nd(rng);
    }
    const auto spec = KernelSpec::gaussian(0.2);
    CHECK(std::abs(kernel(spec, Vector(a + t), Vector(b + t)) - kernel(spec, a, b)) <= 1e-12);
  }
}
