#include <catch_amalgamated.hpp>

#include <numeric>

#include "emgda/signals.hpp"
#include "oracles.hpp"

using namespace emgda;
using Catch::Approx;

namespace {

Recording constant_recording(Index t, int channels, double rate, int label) {
  Recording rec;
  rec.subject_id = "s";
  rec.sampling_rate_hz = rate;
  rec.num_classes = 3;
  rec.samples = Matrix::Constant(t, channels, 0.5);
  rec.labels.assign(static_cast<std::size_t>(t), label);
  rec.repetitions.assign(static_cast<std::size_t>(t), 1);
  return rec;
}

}  // namespace

TEST_CASE("segment: window count at 2 kHz, 200 ms / 10 ms", "[signals]") {
  const auto rec = constant_recording(2000, 2, 2000.0, 1);
  const auto wins = segment(rec, WindowSpec{});
  CHECK(wins.size() == oracle::window_offsets(2000, 400, 20).size());
  CHECK(wins.size() == 81);
  CHECK(wins.front().data.rows() == 400);
}

TEST_CASE("segment: T equal to the window yields one window", "[signals]") {
  const auto rec = constant_recording(400, 1, 2000.0, 2);
  CHECK(segment(rec, WindowSpec{}).size() == 1);
}

TEST_CASE("segment: constant label propagates to every window", "[signals]") {
  const auto rec = constant_recording(1000, 1, 2000.0, 2);
  for (const auto& w : segment(rec, WindowSpec{})) CHECK(w.label == 2);
}

TEST_CASE("segment: too short recording is rejected", "[signals]") {
  const auto rec = constant_recording(399, 1, 2000.0, 0);
  CHECK_THROWS_WITH(segment(rec, WindowSpec{}), "recording too short");
}

TEST_CASE("segment: count matches enumeration on random triples", "[signals][property]") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Index w = 1 + static_cast<Index>(uniform_index(rng, 50));
    const Index s = 1 + static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(w)));
    const Index t = w + static_cast<Index>(uniform_index(rng, 300));
    // rate 1000 Hz makes 1 ms == 1 sample
    const auto rec = constant_recording(t, 1, 1000.0, 1);
    const auto wins = segment(rec, WindowSpec{static_cast<double>(w), static_cast<double>(s)});
    REQUIRE(wins.size() == oracle::window_offsets(t, w, s).size());
  }
}

TEST_CASE("segment: majority label and movement-boundary dropping", "[signals]") {
  // rest(0) x 6, class 1 x 6, class 2 x 6 at 1 kHz; window 4, step 2
  Recording rec = constant_recording(18, 1, 1000.0, 0);
  for (int t = 6; t < 12; ++t) rec.labels[t] = 1;
  for (int t = 12; t < 18; ++t) rec.labels[t] = 2;
  const auto wins = segment(rec, WindowSpec{4, 2});
  // offsets 0,2,...,14 -> 8 windows; offsets 10 (1,1,2,2) dropped
  Labels got;
  for (const auto& w : wins) got.push_back(w.label);
  CHECK(got == Labels{0, 0, 0, 1, 1, 2, 2});
  // offset 4: labels 0,0,1,1 -> tie resolves to the smaller id
  CHECK(wins[2].label == 0);
}

TEST_CASE("extract_features: constant window", "[signals]") {
  const Matrix w = Matrix::Constant(10, 2, -0.7);
  const Vector f = extract_features(w);
  REQUIRE(f.size() == 6);
  CHECK(f(0) == Approx(0.7));
  CHECK(f(2) == Approx(0.0).margin(1e-15));
  CHECK(f(4) == Approx(0.0).margin(1e-15));
}

TEST_CASE("extract_features: alternating and ramp against direct summation", "[signals]") {
  Matrix w(4, 2);
  w.col(0) << 1, -1, 1, -1;
  w.col(1) << 0, 1, 2, 3;
  const Vector f = extract_features(w);
  for (int c = 0; c < 2; ++c) {
    std::vector<double> x(w.col(c).data(), w.col(c).data() + 4);
    double mav, var, wl;
    oracle::channel_features(x, mav, var, wl);
    CHECK(f(c) == Approx(mav));
    CHECK(f(2 + c) == Approx(var));
    CHECK(f(4 + c) == Approx(wl));
  }
  CHECK(f(0) == Approx(1.0));
  CHECK(f(2) == Approx(4.0 / 3.0));
  CHECK(f(4) == Approx(6.0));
  CHECK(f(1) == Approx(1.5));
  CHECK(f(3) == Approx(5.0 / 3.0));
  CHECK(f(5) == Approx(3.0));
}

TEST_CASE("extract_features: W < 2 is rejected", "[signals]") {
  CHECK_THROWS_AS(extract_features(Matrix::Ones(1, 3)), Error);
}

TEST_CASE("extract_features: channel permutation and scaling", "[signals][property]") {
  Rng rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const Index c = 2 + static_cast<Index>(uniform_index(rng, 6));
    Matrix w(30, c);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
    std::vector<Index> perm(static_cast<std::size_t>(c));
    std::iota(perm.begin(), perm.end(), 0);
    shuffle_in_place(perm, rng);
    Matrix wp(30, c);
    for (Index j = 0; j < c; ++j) wp.col(j) = w.col(perm[j]);
    const Vector f = extract_features(w);
    const Vector fp = extract_features(wp);
    for (Index b = 0; b < 3; ++b)
      for (Index j = 0; j < c; ++j) CHECK(fp(b * c + j) == Approx(f(b * c + perm[j])));

    const double lambda = 0.5 + 2.0 * std::abs(nd(rng));
    const Vector fs = extract_features(lambda * w);
    CHECK(fs.head(c).isApprox(lambda * f.head(c), 1e-12));
    CHECK(fs.segment(c, c).isApprox(lambda * lambda * f.segment(c, c), 1e-12));
    CHECK(fs.tail(c).isApprox(lambda * f.tail(c), 1e-12));
  }
}

TEST_CASE("build_dataset: shapes and concatenation", "[signals]") {
  const auto rec = constant_recording(2000, 12, 2000.0, 1);
  const Dataset one = build_dataset({rec}, WindowSpec{});
  CHECK(one.size() == 81);
  CHECK(one.dim() == 36);
  CHECK(one.feature_names.size() == 36);
  CHECK(one.feature_names.front() == "MAV_1");
  const Dataset two = build_dataset({rec, rec}, WindowSpec{});
  CHECK(two.size() == 162);
  CHECK(two.dim() == 36);
  CHECK_THROWS_WITH(build_dataset({}, WindowSpec{}), "no data");
  auto other = constant_recording(2000, 3, 2000.0, 1);
  CHECK_THROWS_AS(build_dataset({rec, other}, WindowSpec{}), Error);
}

TEST_CASE("normalizer: closed form and constant columns", "[signals]") {
  Matrix x(2, 2);
  x << 1, 5, 3, 5;
  const NormStats st = fit_normalizer(x);
  CHECK(st.mean(0) == Approx(2.0));
  CHECK(st.stddev(0) == Approx(std::sqrt(2.0)));
  const Matrix z = apply_normalizer(x, st);
  // (1 - 2) / sqrt(2) under the 1/(N-1) convention
  CHECK(z(0, 0) == Approx(-std::sqrt(2.0) / 2.0));
  CHECK(z(1, 0) == Approx(std::sqrt(2.0) / 2.0));
  CHECK(z.col(1).isZero());
}

TEST_CASE("normalizer: training data has zero mean and unit stddev", "[signals][property]") {
  Rng rng(5);
  std::normal_distribution<double> nd(3.0, 7.0);
  Matrix x(57, 9);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng);
  x.col(4).setConstant(2.5);
  const Matrix z = apply_normalizer(x, fit_normalizer(x));
  const NormStats after = fit_normalizer(z);
  for (Index j = 0; j < 9; ++j) {
    CHECK(std::abs(after.mean(j)) <= 1e-9);
    if (j == 4) {
      CHECK(z.col(j).isZero());
    } else {
      CHECK(std::abs(after.stddev(j) - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("averaged feature mode collapses to C dimensions", "[signals]") {
  const auto rec = constant_recording(2000, 12, 2000.0, 1);
  const Dataset ds = average_blocks(build_dataset({rec}, WindowSpec{}));
  CHECK(ds.dim() == 12);
  CHECK(ds.feature_names.size() == 12);
}

TEST_CASE("split_by_repetition partitions windows", "[signals]") {
  auto rec = constant_recording(4000, 2, 2000.0, 1);
  for (Index t = 2000; t < 4000; ++t) rec.repetitions[static_cast<std::size_t>(t)] = 2;
  const Dataset all = build_dataset({rec}, WindowSpec{});
  const auto [train, test] = split_by_repetition(all, {2});
  CHECK(train.size() + test.size() == all.size());
  for (int r : test.repetitions) CHECK(r == 2);
  for (int r : train.repetitions) CHECK(r == 1);
}
