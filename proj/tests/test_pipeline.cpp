#include <gtest/gtest.h>

#include "enfpd/error.hpp"
#include "enfpd/pipeline.hpp"
#include "enfpd/sim.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace enfpd;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.slic.target_superpixels = 12;
  c.steady.tau = 40;
  c.stft.window_seconds = 10;
  c.clip_seconds = 40;
  return c;
}

FrameSequence small_clip(ClipLabel label, std::uint64_t seed, double noise = 0.01, bool is_static = false) {
  CorpusClipSpec spec;
  if (is_static) {
    spec.max_objects = 0;
    spec.max_drift_amplitude = 0;
  }
  spec.width = 64;
  spec.height = 48;
  spec.seconds = 40;
  spec.label = label;
  spec.seed = seed;
  spec.noise_std = noise;
  return FrameSequence::from_source(*simulate(make_corpus_clip(spec)).source);
}

}  // namespace

TEST(Config, KeyValueRoundTrip) {
  PipelineConfig a;
  a.slic.target_superpixels = 30;
  a.steady.detrend_window = 25;
  a.detrend_window_auto = false;
  a.stft.window = WindowFunction::kRect;
  a.representative_mode = RepresentativeMode::kMean;
  a.chosen_metric = MetricId::kF3;
  a.threshold = 0.65;
  a.leave_one_out = true;
  PipelineConfig b;
  b.apply(a.to_key_values());
  EXPECT_EQ(b.to_key_values().entries(), a.to_key_values().entries());
  PipelineConfig c;
  c.apply(KeyValues::parse(a.to_key_values().serialize()));
  EXPECT_EQ(c.to_key_values().entries(), a.to_key_values().entries());
}

TEST(Config, OverridesAndUnknownKeys) {
  PipelineConfig c;
  c.set("threshold=0.5");
  c.set("stft.window_seconds = 15");
  c.set("sim.width=10");  // simulator keys pass through
  EXPECT_DOUBLE_EQ(c.threshold, 0.5);
  EXPECT_DOUBLE_EQ(c.stft.window_seconds, 15);
  EXPECT_THROW(c.set("no.such_key=1"), Error);
  EXPECT_THROW(c.set("threshold"), Error);
  EXPECT_THROW(c.set("slic.target_superpixels=abc"), Error);
}

TEST(Config, FromFile) {
  enfpd::testing::TempDir dir;
  enfpd::testing::write_file(dir / "c.txt", "# tuned\nrepresentative_mode=mean\nsteady.tau=100\n");
  const auto c = PipelineConfig::from_file(dir / "c.txt");
  EXPECT_EQ(c.representative_mode, RepresentativeMode::kMean);
  EXPECT_EQ(c.steady.tau, 100u);
  EXPECT_THROW(PipelineConfig::from_file(dir / "missing.txt"), Error);
}

TEST(Config, Validation) {
  PipelineConfig c;
  c.clip_seconds = 10;  // shorter than the STFT window
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.nominal_grid_hz = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, ResolvedFollowsFrameRate) {
  PipelineConfig c;
  const auto r = c.resolved(30000.0 / 1001.0);
  EXPECT_EQ(r.steady.detrend_window, 31);
  EXPECT_NEAR(r.stft.band_center_hz, 10.0899, 1e-4);
  const auto r25 = c.resolved(25.0);
  EXPECT_EQ(r25.steady.detrend_window, 25);
  c.nominal_grid_hz = 60;
  const auto r60 = c.resolved(30000.0 / 1001.0);
  EXPECT_NEAR(r60.stft.band_center_hz, 0.11988, 1e-4);
  // Half-width shrinks so the band stays above 0 Hz.
  EXPECT_LT(r60.stft.band_halfwidth_hz, r60.stft.band_center_hz);
  EXPECT_NO_THROW(r60.stft.validate(30000.0 / 1001.0));
}

TEST(Pipeline, ClipFrameCount) {
  VideoMeta m;
  m.width = m.height = 1;
  m.frame_count = 5000;
  EXPECT_EQ(clip_frame_count(m, 120), 3597u);
  m.frame_count = 1000;
  EXPECT_EQ(clip_frame_count(m, 120), 1000u);
}

TEST(Pipeline, DetectsPresenceAndAbsence) {
  const auto cfg = small_config();
  const auto pos = run_detection(small_clip(ClipLabel::kEnfPresent, 1), cfg);
  EXPECT_EQ(pos.verdict, Verdict::kEnfPresent);
  EXPECT_GE(pos.region_count, 2u);
  EXPECT_EQ(pos.vector_length, 31u);
  ASSERT_TRUE(pos.metrics.has_value());
  EXPECT_GT(pos.metrics->f1, 0.95);
  const auto neg = run_detection(small_clip(ClipLabel::kEnfAbsent, 2), cfg);
  EXPECT_NE(neg.verdict, Verdict::kEnfPresent);
}

TEST(Pipeline, StaticNoiselessAbsentClipAbstains) {
  // Identical frames give constant series, so every correlation is undefined.
  const auto r = run_detection(small_clip(ClipLabel::kEnfAbsent, 3, 0.0, true), small_config());
  EXPECT_EQ(r.verdict, Verdict::kAbstain);
}

TEST(Pipeline, CommonDriftWithoutNoiseLooksConsistent) {
  // A drift shared by every region, with nothing to decorrelate the band
  // estimates, yields identical ENF rows. Sensor noise breaks the tie.
  const auto quiet = run_detection(small_clip(ClipLabel::kEnfAbsent, 3, 0.0), small_config());
  const auto noisy = run_detection(small_clip(ClipLabel::kEnfAbsent, 3, 0.01), small_config());
  ASSERT_TRUE(quiet.metrics && noisy.metrics);
  EXPECT_GT(quiet.metrics->f1, noisy.metrics->f1);
  EXPECT_NE(noisy.verdict, Verdict::kEnfPresent);
}

TEST(Pipeline, DeterministicReport) {
  const auto clip = small_clip(ClipLabel::kEnfPresent, 4);
  const auto a = to_json(run_detection(clip, small_config(), 1));
  const auto b = to_json(run_detection(clip, small_config(), 3));
  EXPECT_EQ(a, b);
}

TEST(Pipeline, AnalysisScoresAllConfigurations) {
  const auto clip = small_clip(ClipLabel::kEnfPresent, 5);
  const auto analysis = analyze(clip, small_config());
  EXPECT_EQ(analysis.series.size(), analysis.regions.count());
  EXPECT_EQ(analysis.matrix.row_count(), analysis.regions.count());
  EXPECT_EQ(analysis.representative_frame, representative_frame_index(analysis.meta.frame_count));
  for (auto mode : {RepresentativeMode::kMean, RepresentativeMode::kMedian}) {
    const auto r = score(analysis, mode, MetricId::kF2, 0.5);
    EXPECT_EQ(r.representative_mode, mode);
    EXPECT_EQ(r.chosen_metric, MetricId::kF2);
    EXPECT_EQ(r.region_labels.size(), analysis.regions.count());
  }
}

TEST(Pipeline, TooShortClipFails) {
  CorpusClipSpec spec;
  spec.width = 32;
  spec.height = 32;
  spec.seconds = 5;
  const auto clip = simulate(make_corpus_clip(spec));
  try {
    run_detection(*clip.source, small_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSeriesTooShort);
  }
}

TEST(Pipeline, DebugDump) {
  enfpd::testing::TempDir dir;
  const auto analysis = analyze(small_clip(ClipLabel::kEnfPresent, 6), small_config());
  write_debug_dump(analysis, dir.path());
  for (const char* f : {"labels.pgm", "overlay.ppm", "steady.pbm", "regions.csv", "config.txt"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const auto label = analysis.regions.regions.front().label;
  EXPECT_TRUE(std::filesystem::exists(dir / ("enf_region_" + std::to_string(label) + ".csv")));
  const auto back = PipelineConfig::from_file(dir / "config.txt");
  EXPECT_EQ(back.to_key_values().entries(), analysis.config.to_key_values().entries());
}
