#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "enfpd/detect.hpp"
#include "enfpd/enf.hpp"
#include "enfpd/error.hpp"
#include "enfpd/sim.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace enfpd;

namespace {

VideoMeta small_meta(int w, int h, double seconds) {
  VideoMeta m;
  m.width = w;
  m.height = h;
  m.frame_rate = {30000, 1001};
  m.frame_count = static_cast<std::size_t>(std::ceil(seconds * m.fps()));
  return m;
}

// Frequency of the largest DFT magnitude among bins near `around_hz`.
double peak_frequency(const std::vector<double>& x, double rate, double around_hz, int span_bins) {
  const double bw = rate / x.size();
  const long center = std::lround(around_hz / bw);
  double best = -1, best_f = 0;
  for (long k = center - span_bins; k <= center + span_bins; ++k) {
    std::complex<double> acc = 0;
    const double w = -2 * M_PI * k / x.size();
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * std::polar(1.0, w * i);
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_f = k * bw;
    }
  }
  return best_f;
}

std::vector<double> frame_means(const FrameSource& src, int row_begin = 0, int row_end = -1) {
  const auto& m = src.meta();
  if (row_end < 0) row_end = m.height;
  std::vector<float> buf(static_cast<std::size_t>(row_end - row_begin) * m.width);
  std::vector<double> out;
  for (std::size_t n = 0; n < m.frame_count; ++n) {
    src.read_rows(n, row_begin, row_end, buf);
    double s = 0;
    for (float v : buf) s += v;
    out.push_back(s / buf.size());
  }
  return out;
}

}  // namespace

TEST(Trace, ZeroStepIsNominal) {
  GridModel g;
  g.imbalance_step_std = 0;
  const auto t = synthesize_enf_trace(g, 5, 9);
  for (double d : t.deviation()) EXPECT_EQ(d, 0.0);
  EXPECT_DOUBLE_EQ(t.frequency_at(2.5), 50.0);
}

TEST(Trace, Deterministic) {
  GridModel g;
  const auto a = synthesize_enf_trace(g, 10, 42), b = synthesize_enf_trace(g, 10, 42);
  const auto c = synthesize_enf_trace(g, 10, 43);
  EXPECT_EQ(a.deviation(), b.deviation());
  EXPECT_NE(a.deviation(), c.deviation());
}

TEST(Trace, ReflectedWalkMoments) {
  // A walk reflected in [-b, b] is stationary and uniform: std b / sqrt(3).
  GridModel g;
  g.set_frequency_step_std_hz(0.01);
  g.max_deviation_hz = 0.05;
  double max_abs = 0, sum = 0, sum2 = 0;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) {
    const auto t = synthesize_enf_trace(g, 1.0, s);
    for (double d : t.deviation()) max_abs = std::max(max_abs, std::abs(d));
    const double v = t.deviation_at(0.5);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / seeds;
  const double sd = std::sqrt(sum2 / seeds - mean * mean);
  EXPECT_LE(max_abs, 0.05 + 1e-12);
  EXPECT_NEAR(sd, 0.05 / std::sqrt(3.0), 0.2 * 0.05 / std::sqrt(3.0));
}

TEST(Trace, PhaseIsIntegralOfFrequency) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0, 0.01);
  std::vector<double> dev(2001);
  for (auto& d : dev) d = gauss(rng);
  const EnfTrace t(50, 1000, dev);
  // Fine midpoint quadrature of the linear interpolant.
  double integral = 0;
  const int sub = 50;
  for (int i = 0; i < 1500 * sub; ++i) integral += t.deviation_at((i + 0.5) / (1000.0 * sub)) / (1000.0 * sub);
  EXPECT_NEAR(t.phase_at(1.5), 2 * M_PI * (50 * 1.5 + integral), 1e-7);
}

TEST(Waveform, NominalToneAndPhaseFlip) {
  GridModel g;
  g.imbalance_step_std = 0;
  const auto t0 = synthesize_enf_trace(g, 2, 1);
  g.initial_phase = M_PI;
  const auto t1 = synthesize_enf_trace(g, 2, 1);
  const auto v0 = voltage_waveform(t0, 1000), v1 = voltage_waveform(t1, 1000);
  ASSERT_EQ(v0.size(), v1.size());
  for (std::size_t i = 0; i < v0.size(); ++i) {
    EXPECT_NEAR(v0[i], std::sqrt(2.0) * g.v_effective * std::cos(2 * M_PI * 50 * i / 1000.0), 1e-9);
    EXPECT_NEAR(v1[i], -v0[i], 1e-9);
  }
  EXPECT_NEAR(peak_frequency(std::vector<double>(v0.begin(), v0.end() - 1), 1000, 50, 5), 50.0, 1e-9);
  EXPECT_THROW(voltage_waveform(t0, 400), Error);
}

TEST(Waveform, ConstantDeviationShiftsPeak) {
  const EnfTrace t(50, 1000, std::vector<double>(60001, 0.05));
  auto v = voltage_waveform(t, 1000);
  v.pop_back();
  const double bin = 1000.0 / v.size();
  EXPECT_NEAR(peak_frequency(v, 1000, 50.05, 12), 50.05, bin);
}

TEST(Source, EnfAbsentStaticSceneIsConstant) {
  const auto meta = small_meta(16, 12, 3);
  const auto clip = simulate(SceneModel::uniform(16, 12), ShutterModel{}, GridModel{}, meta,
                             ClipLabel::kEnfAbsent, 5);
  const auto first = clip.source->frame(0).luma;
  for (std::size_t n = 1; n < meta.frame_count; ++n) ASSERT_EQ(clip.source->frame(n).luma, first);
}

TEST(Source, GlobalShutterFrameMeanFollowsVoltage) {
  auto scene = SceneModel::uniform(20, 10, 1.0f, 2.0f, 0.0f);
  scene.beta = 3.5;
  const auto meta = small_meta(20, 10, 30);
  ShutterModel shutter{ShutterKind::kGlobal, 0, 0};
  const auto clip = simulate(scene, shutter, GridModel{}, meta, ClipLabel::kEnfPresent, 8);
  const auto means = frame_means(*clip.source);
  const auto& trace = clip.truth.trace;
  for (std::size_t n = 0; n < meta.frame_count; ++n) {
    const double want = 3.5 / 4.0 * std::abs(trace.voltage_at(n / meta.fps()));
    ASSERT_NEAR(means[n], want, 1e-6) << n;
  }
  IntensitySeries s{means, 0};
  StftConfig cfg;
  cfg.window_seconds = 10;
  const auto v = stft_enf_estimate(s, meta, cfg);
  // Flicker runs at twice the instantaneous mains frequency.
  const std::size_t nw = static_cast<std::size_t>(std::floor(10 * meta.fps()));
  for (std::size_t h = 0; h < v.values.size(); ++h) {
    const double t0 = std::floor(h * meta.fps() + 1e-9) / meta.fps();
    double dev = 0;
    for (int k = 0; k < 100; ++k) dev += trace.deviation_at(t0 + (k + 0.5) * nw / meta.fps() / 100) / 100;
    EXPECT_NEAR(v.values[h], clip.truth.flicker_alias_hz + 2 * dev, 0.02) << h;
  }
  EXPECT_DOUBLE_EQ(clip.truth.flicker_alias_hz, alias_frequency(100, meta.fps()));
}

TEST(Source, RollingAndGlobalHaveSameMeanLevel) {
  CorpusClipSpec spec;
  spec.width = 48;
  spec.height = 36;
  spec.seconds = 20;
  spec.max_objects = 0;
  spec.noise_std = 0;
  spec.ambient_fraction = 0.5;
  auto global = make_corpus_clip(spec);
  spec.shutter = ShutterKind::kRolling;
  auto rolling = make_corpus_clip(spec);
  const auto a = frame_means(*simulate(global).source), b = frame_means(*simulate(rolling).source);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  EXPECT_NEAR(mb / ma, 1.0, 0.01);
}

TEST(Source, RollingShutterRowsShareEnf) {
  CorpusClipSpec spec;
  spec.width = 32;
  spec.height = 48;
  spec.seconds = 120;
  spec.shutter = ShutterKind::kRolling;
  spec.max_objects = 0;
  spec.noise_std = 0.002;
  spec.patches = 1;
  const auto clip = simulate(make_corpus_clip(spec));
  const auto top = frame_means(*clip.source, 0, 8), bottom = frame_means(*clip.source, 40, 48);
  const auto& meta = clip.source->meta();
  StftConfig cfg;
  cfg.band_center_hz = clip.truth.flicker_alias_hz;
  const auto a = stft_enf_estimate({top, 0}, meta, cfg), b = stft_enf_estimate({bottom, 1}, meta, cfg);
  const auto rho = pearson(a.values, b.values);
  ASSERT_TRUE(rho.has_value());
  EXPECT_GE(*rho, 0.9);
}

TEST(Source, Deterministic) {
  CorpusClipSpec spec;
  spec.width = 24;
  spec.height = 16;
  spec.seconds = 2;
  spec.seed = 77;
  const auto a = FrameSequence::from_source(*simulate(make_corpus_clip(spec)).source);
  const auto b = FrameSequence::from_source(*simulate(make_corpus_clip(spec)).source);
  for (std::size_t n = 0; n < a.frame_count(); ++n) {
    const auto fa = a.frame_data(n), fb = b.frame_data(n);
    ASSERT_TRUE(std::equal(fa.begin(), fa.end(), fb.begin()));
  }
  spec.seed = 78;
  const auto c = FrameSequence::from_source(*simulate(make_corpus_clip(spec)).source);
  const auto f0 = a.frame_data(0), f1 = c.frame_data(0);
  EXPECT_FALSE(std::equal(f0.begin(), f0.end(), f1.begin()));
}

TEST(Source, RowBandsReproduceFullFrame) {
  CorpusClipSpec spec;
  spec.width = 30;
  spec.height = 20;
  spec.seconds = 1;
  const auto clip = simulate(make_corpus_clip(spec));
  const auto full = clip.source->frame(7).luma;
  std::vector<float> band(5 * 30);
  clip.source->read_rows(7, 3, 8, band);
  for (int y = 3; y < 8; ++y)
    for (int x = 0; x < 30; ++x) EXPECT_EQ(band[(y - 3) * 30 + x], full(x, y));
  EXPECT_THROW(clip.source->read_rows(7, 0, 21, band), Error);
}

TEST(Noise, PoolIsStandardNormal) {
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = sensor_noise_sample(1, i / 1000, i % 1000);
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0, 0.01);
  EXPECT_NEAR(std::sqrt(s2 / n), 1, 0.01);
}

TEST(Objects, BounceAndOccupancy) {
  MovingObject o{4, 4, 0, 0, 3, 0, 0.1f};
  for (std::size_t f = 0; f < 50; ++f) {
    const auto r = object_rect(o, f, 20, 10);
    EXPECT_GE(r.x0, 0);
    EXPECT_LE(r.x1, 20);
    EXPECT_EQ(r.x1 - r.x0, 4);
  }
  auto scene = SceneModel::uniform(20, 10);
  scene.objects.push_back(o);
  const auto occ = occupancy_mask(scene, 50);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) EXPECT_EQ(occ(x, y), y < 4 ? 1 : 0);
}

TEST(Shutter, Validation) {
  const auto meta = small_meta(10, 10, 1);
  ShutterModel s;
  s.exposure_time = 0.05;
  try {
    s.validate(meta);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidShutter);
  }
  const auto r = ShutterModel::rolling(meta, 0.001);
  EXPECT_NEAR(r.row_read_time * meta.height, 0.9 / meta.fps(), 1e-15);
  EXPECT_NO_THROW(r.validate(meta));
  EXPECT_EQ(parse_shutter_kind("Rolling"), ShutterKind::kRolling);
  EXPECT_THROW(parse_shutter_kind("curtain"), Error);
}

TEST(Corpus, SpecKeyValueRoundTrip) {
  CorpusClipSpec a;
  a.width = 100;
  a.seconds = 33.5;
  a.label = ClipLabel::kEnfAbsent;
  a.shutter = ShutterKind::kRolling;
  a.steady_patch_fraction = 0.25;
  a.seed = 123456789;
  CorpusClipSpec b;
  b.apply(a.to_key_values());
  EXPECT_EQ(b.to_key_values().entries(), a.to_key_values().entries());
  a.max_drift_frequency_hz = 1;
  EXPECT_THROW(a.validate(), Error);
}

TEST(Corpus, RecipeRespectsCoverageBudget) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CorpusClipSpec spec;
    spec.width = 64;
    spec.height = 48;
    spec.seconds = 120;
    spec.seed = seed;
    const auto s = make_corpus_clip(spec);
    EXPECT_EQ(s.meta.frame_count, 3597u);
    const auto occ = occupancy_mask(s.scene, s.meta.frame_count);
    std::size_t covered = 0;
    for (auto v : occ.pixels()) covered += v;
    EXPECT_LE(covered, static_cast<std::size_t>(0.3 * 64 * 48) + 1) << seed;
    EXPECT_LE(s.scene.objects.size(), 3u);
  }
}

TEST(Corpus, GroundTruthFiles) {
  enfpd::testing::TempDir dir;
  CorpusClipSpec spec;
  spec.width = 16;
  spec.height = 16;
  spec.seconds = 2;
  const auto clip = simulate(make_corpus_clip(spec));
  write_trace_csv(clip.truth.trace, dir / "t.enf.csv");
  write_ground_truth(clip.truth, clip.source->meta(), "t.enf.csv", dir / "t.truth.json");
  const auto j = nlohmann::json::parse(enfpd::testing::read_file(dir / "t.truth.json"));
  EXPECT_EQ(j.at("label"), "EnfPresent");
  EXPECT_DOUBLE_EQ(j.at("alias_hz").get<double>(), alias_frequency(100, 30000.0 / 1001.0));
  EXPECT_EQ(j.at("enf_trace_file"), "t.enf.csv");
  const auto csv = enfpd::testing::read_file(dir / "t.enf.csv");
  EXPECT_EQ(csv.substr(0, 13), "t_s,freq_hz\n0");
}
