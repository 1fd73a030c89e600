#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "emgda/core.hpp"
#include "emgda/signals.hpp"

namespace emgda {

/// Generative description of one synthetic subject. Class 0 is rest and
/// carries no muscle activity; classes 1..G-1 are movements.
struct SubjectSpec {
  std::string subject_id;
  std::uint64_t seed = 0;
  int num_classes = 0;
  int channels = 0;
  Matrix gain_matrix;     // C x C
  Matrix class_profiles;  // G x C per-channel activity stddev
  double noise_floor = 0.05;
  Condition condition = Condition::intact;
  double degradation = 0.0;  // share of weak channels and extra noise for amputees
};

inline void validate(const SubjectSpec& s) {
  require(s.num_classes >= 2, "subject spec: need at least two classes");
  require(s.channels >= 1, "subject spec: need at least one channel");
  require(s.gain_matrix.rows() == s.channels && s.gain_matrix.cols() == s.channels, "subject spec: gain matrix must be C x C");
  require(s.class_profiles.rows() == s.num_classes && s.class_profiles.cols() == s.channels,
          "subject spec: class profiles must be G x C");
  require((s.class_profiles.array() >= 0.0).all(), "subject spec: amplitudes must be nonnegative");
  require(s.noise_floor > 0.0, "subject spec: noise floor must be positive");
  require(s.degradation >= 0.0 && s.degradation < 1.0, "subject spec: degradation must lie in [0, 1)");
  Eigen::JacobiSVD<Matrix> svd(s.gain_matrix);
  require(svd.singularValues().minCoeff() > 1e-9 * svd.singularValues().maxCoeff(), "subject spec: gain matrix is singular");
}

struct RecordingPlan {
  int reps = 6;
  double movement_ms = 1000.0;
  double rest_ms = 300.0;
  double rate_hz = 2000.0;
  double rep_jitter = 0.1;      // lognormal spread of per-repetition channel amplitudes
  double force_jitter = 0.0;    // lognormal spread of a per-repetition gain shared by all channels
  double envelope_depth = 1.5;  // log-amplitude depth of the slow within-segment modulation
};

namespace synth_detail {

constexpr double ramp_ms = 100.0;        // contraction onset / release
constexpr double weak_channel_gain = 0.15;

inline Index duration_samples(double ms, double rate_hz) {
  return static_cast<Index>(std::llround(ms * rate_hz / 1000.0));
}

}  // namespace synth_detail

/// Rest, then for every movement class and repetition a movement segment
/// followed by a rest segment (class-outer, repetition-inner). Movement
/// samples are gain * (envelope * profile .* z) + floor * n with z, n
/// standard normal and envelope = exp(depth * sin(2 pi f t + phase)), f in
/// [1, 3] Hz; rest samples are floor * n.
inline Recording generate_recording(const SubjectSpec& spec, const RecordingPlan& plan = {}) {
  validate(spec);
  require(plan.reps >= 1, "generate_recording: reps must be >= 1");
  require(plan.movement_ms > 0.0 && plan.rest_ms > 0.0 && plan.rate_hz > 0.0,
          "generate_recording: durations and rate must be positive");
  namespace sd = synth_detail;
  const Index move_len = sd::duration_samples(plan.movement_ms, plan.rate_hz);
  const Index rest_len = sd::duration_samples(plan.rest_ms, plan.rate_hz);
  require(move_len >= 1 && rest_len >= 1, "generate_recording: durations shorter than one sample");
  require(plan.rep_jitter >= 0.0 && plan.force_jitter >= 0.0 && plan.envelope_depth >= 0.0,
          "generate_recording: jitter must be >= 0 and envelope depth in [0, 1]");
  const Index c = spec.channels;
  const int movements = spec.num_classes - 1;

  Matrix gain = spec.gain_matrix;
  double floor = spec.noise_floor;
  if (spec.degradation > 0.0) {
    Rng drng(derive_seed(spec.seed, 0xde9));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index ch = 0; ch < c; ++ch)
      if (u(drng) < spec.degradation) gain.row(ch) *= sd::weak_channel_gain;
    floor *= 1.0 + 3.0 * spec.degradation;
  }

  Recording rec;
  rec.subject_id = spec.subject_id;
  rec.condition = spec.condition;
  rec.sampling_rate_hz = plan.rate_hz;
  rec.num_classes = spec.num_classes;
  const Index total = rest_len + static_cast<Index>(movements) * plan.reps * (move_len + rest_len);
  rec.samples.resize(total, c);
  rec.labels.reserve(static_cast<std::size_t>(total));
  rec.repetitions.reserve(static_cast<std::size_t>(total));

  Rng rng(derive_seed(spec.seed, 0x519));
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Index row = 0;
  Vector z(c);

  auto rest = [&](int rep) {
    for (Index t = 0; t < rest_len; ++t, ++row) {
      for (Index ch = 0; ch < c; ++ch) rec.samples(row, ch) = floor * nd(rng);
      rec.labels.push_back(0);
      rec.repetitions.push_back(rep);
    }
  };

  const Index ramp = std::min<Index>(sd::duration_samples(sd::ramp_ms, plan.rate_hz), move_len / 2);
  rest(1);
  for (int g = 1; g <= movements; ++g) {
    for (int r = 1; r <= plan.reps; ++r) {
      Vector amp = spec.class_profiles.row(g).transpose();
      amp *= std::exp(plan.force_jitter * nd(rng) - 0.5 * plan.force_jitter * plan.force_jitter);
      for (Index ch = 0; ch < c; ++ch)
        amp(ch) *= std::exp(plan.rep_jitter * nd(rng) - 0.5 * plan.rep_jitter * plan.rep_jitter);
      const double freq = 1.0 + 2.0 * u(rng);
      const double phase = 2.0 * std::numbers::pi * u(rng);
      for (Index t = 0; t < move_len; ++t, ++row) {
        double env = std::exp(plan.envelope_depth * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) / plan.rate_hz + phase));
        if (ramp > 0) {
          const Index edge = std::min(t, move_len - 1 - t);
          if (edge < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / static_cast<double>(ramp));
        }
        for (Index ch = 0; ch < c; ++ch) z(ch) = env * amp(ch) * nd(rng);
        rec.samples.row(row) = (gain * z).transpose();
        for (Index ch = 0; ch < c; ++ch) rec.samples(row, ch) += floor * nd(rng);
        rec.labels.push_back(g);
        rec.repetitions.push_back(r);
      }
      rest(r);
    }
  }
  return rec;
}

struct CohortOptions {
  int subjects = 4;
  std::uint64_t base_seed = 0;
  double shift_strength = 0.3;
  double amputee_fraction = 0.0;
  int num_classes = 8;
  int channels = 12;
  double noise_floor = 0.05;
  double amputee_degradation = 0.3;
};

/// Subjects share one set of class profiles; each gets its own channel mixing
/// I + s * A / sqrt(C) and a lognormal per-class amplitude jitter of spread s.
/// The last round(n * amputee_fraction) subjects are amputees.
inline std::vector<SubjectSpec> generate_cohort(const CohortOptions& opt) {
  require(opt.subjects >= 1, "generate_cohort: need at least one subject");
  require(opt.num_classes >= 2 && opt.channels >= 1, "generate_cohort: need G >= 2 and C >= 1");
  require(opt.shift_strength >= 0.0, "generate_cohort: shift strength must be nonnegative");
  require(opt.amputee_fraction >= 0.0 && opt.amputee_fraction <= 1.0, "generate_cohort: amputee fraction must lie in [0, 1]");
  const Index c = opt.channels;
  const int g = opt.num_classes;
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  Rng base(derive_seed(opt.base_seed, 0xba5e));
  Matrix profiles = Matrix::Zero(g, c);
  for (int k = 1; k < g; ++k)
    for (Index ch = 0; ch < c; ++ch) {
      const double v = u(base);
      profiles(k, ch) = 0.05 + 0.95 * v * v;
    }

  const int amputees = static_cast<int>(std::lround(opt.amputee_fraction * opt.subjects));
  const double s = opt.shift_strength;
  std::vector<SubjectSpec> out;
  for (int i = 0; i < opt.subjects; ++i) {
    Rng rng(derive_seed(opt.base_seed, 0x5b, static_cast<std::uint64_t>(i)));
    SubjectSpec spec;
    char id[16];
    std::snprintf(id, sizeof id, "S%02d", i + 1);
    spec.subject_id = id;
    spec.seed = derive_seed(opt.base_seed, 0x5eed, static_cast<std::uint64_t>(i));
    spec.num_classes = g;
    spec.channels = opt.channels;
    for (;;) {
      Matrix a(c, c);
      for (Index k = 0; k < a.size(); ++k) a.data()[k] = nd(rng);
      spec.gain_matrix = Matrix::Identity(c, c) + (s / std::sqrt(static_cast<double>(c))) * a;
      Eigen::JacobiSVD<Matrix> svd(spec.gain_matrix);
      if (svd.singularValues().minCoeff() > 0.05 * svd.singularValues().maxCoeff()) break;
    }
    spec.class_profiles = profiles;
    for (int k = 1; k < g; ++k)
      for (Index ch = 0; ch < c; ++ch) spec.class_profiles(k, ch) *= std::exp(s * nd(rng));
    spec.noise_floor = opt.noise_floor;
    if (i >= opt.subjects - amputees) {
      spec.condition = Condition::amputee;
      spec.degradation = opt.amputee_degradation;
    }
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace emgda
