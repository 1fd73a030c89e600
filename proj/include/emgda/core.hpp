#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace emgda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Labels = std::vector<int>;

/// Base error for contract violations (bad shapes, invalid parameters, bad files).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a linear system cannot be solved to usable precision.
class NumericError : public Error {
public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds from tuples.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, Rest... rest) {
  std::uint64_t s = mix_seed(base);
  ((s = mix_seed(s ^ static_cast<std::uint64_t>(rest))), ...);
  return s;
}

/// Uniform integer in [0, n) by rejection, independent of the standard
/// library's distribution implementation.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = Rng::max() - Rng::max() % range;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % range);
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

/// argmax over a row with ties broken toward the smallest index.
template <typename Row>
int argmax_row(const Row& row) {
  int best = 0;
  for (Index g = 1; g < row.size(); ++g) {
    if (row(g) > row(best)) best = static_cast<int>(g);
  }
  return best;
}

inline Labels argmax_rows(const Matrix& scores) {
  Labels out(static_cast<std::size_t>(scores.rows()));
  for (Index j = 0; j < scores.rows(); ++j) out[static_cast<std::size_t>(j)] = argmax_row(scores.row(j));
  return out;
}

/// One-vs-all targets in {-1,+1}: column g is +1 where label == g.
inline Matrix one_vs_all_targets(const Labels& labels, int num_classes) {
  Matrix y = Matrix::Constant(static_cast<Index>(labels.size()), num_classes, -1.0);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Index>(i), labels[i]) = 1.0;
  return y;
}

inline Matrix select_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

template <typename T>
std::vector<T> select_items(const std::vector<T>& v, const std::vector<Index>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
  return out;
}

inline double accuracy(const Labels& predicted, const Labels& truth) {
  require(predicted.size() == truth.size(), "accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace emgda
