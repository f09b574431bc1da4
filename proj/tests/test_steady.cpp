#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "enfpd/error.hpp"
#include "enfpd/sim.hpp"
#include "enfpd/steady.hpp"
#include "test_util.hpp"

using namespace enfpd;
using enfpd::testing::make_sequence;

namespace {

// Mean of x over the window of `span` frames centered on i, slid inward at
// the ends so it never shortens (unless the series itself is shorter).
double window_mean(const std::vector<double>& x, int i, int span) {
  const int n = static_cast<int>(x.size());
  span = std::min(span, n);
  const int lo = std::clamp(i - span / 2, 0, n - span);
  double s = 0;
  for (int k = lo; k < lo + span; ++k) s += x[k];
  return s / span;
}

double naive_motion_statistic(const std::vector<double>& x, int detrend, int smooth) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - window_mean(x, static_cast<int>(i), detrend);
  double peak = 0;
  for (std::size_t i = 0; i < x.size(); ++i) peak = std::max(peak, std::abs(window_mean(r, static_cast<int>(i), smooth)));
  return peak;
}

SuperpixelMap grid_map(int w, int h, int cell) {
  Image<std::int32_t> labels(w, h);
  const int cols = w / cell;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) labels(x, y) = (y / cell) * cols + x / cell;
  return {labels, cols * (h / cell)};
}

}  // namespace

TEST(MotionStatistic, MatchesNaiveComputation) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  const auto seq = make_sequence(7, 5, 97, 25.0, [&](int, int, std::size_t) { return u(rng); });
  for (int detrend : {1, 5, 31}) {
    for (int smooth : {1, 3, 7}) {
      SteadyConfig cfg;
      cfg.detrend_window = detrend;
      cfg.residual_smoothing = smooth;
      const auto stat = compute_motion_statistic(seq, cfg, 2);
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) {
          std::vector<double> trace;
          std::vector<float> ftrace;
          for (std::size_t n = 0; n < 97; ++n) {
            trace.push_back(seq.at(x, y, n));
            ftrace.push_back(seq.at(x, y, n));
          }
          const double want = naive_motion_statistic(trace, detrend, smooth);
          EXPECT_NEAR(stat(x, y), want, 1e-5) << detrend << "/" << smooth;
          EXPECT_NEAR(motion_statistic(ftrace, cfg), want, 1e-5);
        }
    }
  }
}

TEST(SteadyMask, ConstantVideoIsAllSteady) {
  const auto seq = make_sequence(8, 6, 40, 25.0, [](int x, int y, std::size_t) { return (x + y) / 20.0; });
  const auto mask = compute_steady_mask(seq, SteadyConfig{});
  EXPECT_EQ(mask.count(), 48u);
}

TEST(SteadyMask, SmallFlickerStaysSteady) {
  const double fs = 30000.0 / 1001.0;
  const auto seq = make_sequence(10, 10, 600, fs, [&](int, int, std::size_t n) {
    return 0.5 + 0.01 * std::sin(2 * M_PI * 10.09 * n / fs);
  });
  SteadyConfig cfg;
  cfg.steadiness_threshold = 0.05;
  EXPECT_EQ(compute_steady_mask(seq, cfg).count(), 100u);
}

TEST(SteadyMask, TranslatingSquareMatchesOccupancy) {
  auto scene = SceneModel::uniform(64, 48);
  scene.objects.push_back(MovingObject{12, 12, 0, 8, 1, 0, 0.9f});
  VideoMeta meta;
  meta.width = 64;
  meta.height = 48;
  meta.frame_count = 300;
  const auto clip = simulate(scene, ShutterModel{}, GridModel{}, meta, ClipLabel::kEnfAbsent, 3);
  const auto seq = FrameSequence::from_source(*clip.source);
  const auto mask = compute_steady_mask(seq, SteadyConfig{});
  const auto occupied = occupancy_mask(scene, meta.frame_count);
  std::size_t covered = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      if (occupied(x, y)) {
        ++covered;
        EXPECT_EQ(mask.mask(x, y), 0) << x << "," << y;
      } else {
        EXPECT_EQ(mask.mask(x, y), 1) << x << "," << y;
      }
    }
  EXPECT_EQ(covered, 64u * 12u);
}

TEST(SteadyMask, MonotoneInThreshold) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  const auto seq = make_sequence(16, 12, 120, 25.0, [&](int x, int, std::size_t) {
    return std::clamp(0.5 + 0.01 * x * g(rng) / 4, 0.0, 1.0);
  });
  SteadyConfig cfg;
  const auto stat = compute_motion_statistic(seq, cfg);
  SteadyMask prev = threshold_motion(stat, 1e-4);
  for (double t = 2e-4; t < 0.2; t *= 1.5) {
    const auto cur = threshold_motion(stat, t);
    for (std::size_t i = 0; i < cur.mask.pixel_count(); ++i) ASSERT_LE(prev.mask[i], cur.mask[i]);
    EXPECT_GE(cur.count(), prev.count());
    prev = cur;
  }
  EXPECT_EQ(prev.count(), 16u * 12u);
}

TEST(SteadyMask, TooShort) {
  const auto seq = make_sequence(2, 2, 10, 25.0, [](int, int, std::size_t) { return 0.5; });
  try {
    compute_steady_mask(seq, SteadyConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSequenceTooShort);
  }
}

TEST(SteadyConfig, Validation) {
  SteadyConfig c;
  c.detrend_window = 30;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.steadiness_threshold = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.tau = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(default_detrend_window(30000.0 / 1001.0), 31);
  EXPECT_EQ(default_detrend_window(25.0), 25);
}

TEST(Selection, AllSteadyFullFrame) {
  const auto map = grid_map(640, 480, 80);
  ASSERT_EQ(map.region_count, 48);
  SteadyMask mask{Image<std::uint8_t>(640, 480, 1)};
  const auto set = select_steady_superpixels(map, mask, 900);
  ASSERT_EQ(set.count(), 48u);
  for (const auto& r : set.regions) EXPECT_EQ(r.pixels.size(), 6400u);
}

TEST(Selection, NothingSteady) {
  const auto map = grid_map(640, 480, 80);
  SteadyMask mask{Image<std::uint8_t>(640, 480, 0)};
  EXPECT_EQ(select_steady_superpixels(map, mask, 900).count(), 0u);
}

TEST(Selection, StrictThreshold) {
  const auto map = grid_map(60, 30, 30);
  SteadyMask mask{Image<std::uint8_t>(60, 30, 1)};
  // Region 0 has exactly 900 steady pixels, region 1 one more than that.
  auto set = select_steady_superpixels(map, mask, 900);
  EXPECT_EQ(set.count(), 0u);
  set = select_steady_superpixels(map, mask, 899);
  EXPECT_EQ(set.count(), 2u);
  EXPECT_EQ(set.regions[0].label, 0);
  EXPECT_EQ(set.regions[1].label, 1);
}

TEST(Selection, MonotoneInTau) {
  std::mt19937_64 rng(2);
  const auto map = grid_map(64, 64, 8);
  SteadyMask mask{Image<std::uint8_t>(64, 64)};
  for (auto& v : mask.mask.pixels()) v = rng() % 3 ? 1 : 0;
  const auto counts = steady_pixel_counts(map, mask);
  std::size_t prev = map.region_count + 1u;
  for (std::size_t tau = 1; tau <= 64; ++tau) {
    const auto set = select_steady_superpixels(map, mask, tau);
    EXPECT_LE(set.count(), prev);
    prev = set.count();
    for (const auto& r : set.regions) {
      EXPECT_GT(r.pixels.size(), tau);
      EXPECT_EQ(r.pixels.size(), counts[r.label]);
      for (const auto& p : r.pixels) EXPECT_TRUE(mask.mask(p.x, p.y));
    }
  }
}
