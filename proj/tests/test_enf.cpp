#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "enfpd/detect.hpp"
#include "enfpd/enf.hpp"
#include "enfpd/error.hpp"
#include "test_util.hpp"

using namespace enfpd;

namespace {

constexpr double kFs = 30000.0 / 1001.0;

VideoMeta meta_for(std::size_t frames) {
  VideoMeta m;
  m.width = m.height = 1;
  m.frame_count = frames;
  m.frame_rate = {30000, 1001};
  return m;
}

IntensitySeries tone(double hz, double seconds, double amplitude = 0.05, double phase = 0.3) {
  IntensitySeries s;
  const auto n = static_cast<std::size_t>(std::ceil(seconds * kFs));
  for (std::size_t i = 0; i < n; ++i) s.values.push_back(0.5 + amplitude * std::sin(2 * M_PI * hz * i / kFs + phase));
  return s;
}

// Direct evaluation of the windowed, zero-padded DFT magnitude.
double dft_magnitude(const std::vector<double>& x, std::size_t pad, std::size_t k) {
  std::complex<double> acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += x[i] * std::polar(1.0, -2 * M_PI * static_cast<double>(k * i % pad) / static_cast<double>(pad));
  return std::abs(acc);
}

std::vector<double> naive_estimate(const IntensitySeries& s, const StftConfig& cfg) {
  const std::size_t nw = static_cast<std::size_t>(std::floor(cfg.window_seconds * kFs + 1e-9));
  const std::size_t pad = nw * cfg.zero_pad_factor;
  const double bw = kFs / pad;
  const double lo = cfg.band_center_hz - cfg.band_halfwidth_hz, hi = cfg.band_center_hz + cfg.band_halfwidth_hz;
  std::vector<double> out;
  for (std::size_t start = 0;; ) {
    const std::size_t hop = out.size();
    start = static_cast<std::size_t>(std::floor(hop * cfg.hop_seconds * kFs + 1e-9));
    if (start + nw > s.values.size()) break;
    std::vector<double> w(s.values.begin() + start, s.values.begin() + start + nw);
    double mean = 0;
    for (double v : w) mean += v / nw;
    for (std::size_t i = 0; i < nw; ++i) w[i] = (w[i] - mean) * (0.5 - 0.5 * std::cos(2 * M_PI * i / (nw - 1)));
    std::size_t best = 0;
    double best_m = -1;
    for (std::size_t k = 1; k < pad / 2; ++k) {
      const double f = k * bw;
      if (f < lo - 1e-12 || f > hi + 1e-12) continue;
      const double m = dft_magnitude(w, pad, k);
      if (m > best_m) {
        best_m = m;
        best = k;
      }
    }
    const double a = dft_magnitude(w, pad, best - 1), c = dft_magnitude(w, pad, best + 1);
    // Vertex of the parabola through (-1,a), (0,b), (1,c).
    double delta = 0;
    if (best_m >= a && best_m >= c && a - 2 * best_m + c != 0) delta = 0.5 * (a - c) / (a - 2 * best_m + c);
    out.push_back(std::clamp((best + delta) * bw, lo, hi));
  }
  return out;
}

}  // namespace

TEST(Alias, Examples) {
  EXPECT_NEAR(alias_frequency(100, kFs), 10.09, 0.005);
  EXPECT_DOUBLE_EQ(alias_frequency(10, kFs), 10.0);
  EXPECT_NEAR(alias_frequency(120, kFs), 0.11988, 1e-5);
  EXPECT_NEAR(flicker_alias_frequency(50, kFs), alias_frequency(100, kFs), 0);
  EXPECT_THROW(alias_frequency(15, 30), Error);
  EXPECT_THROW(alias_frequency(-1, 30), Error);
}

TEST(Alias, MatchesBruteForceFold) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tone_d(0.1, 500), rate_d(5, 120);
  for (int i = 0; i < 5000; ++i) {
    const double f = tone_d(rng), fs = rate_d(rng);
    double want = INFINITY;
    for (int k = 0; k <= 200; ++k) want = std::min(want, std::abs(f - k * fs));
    double got;
    try {
      got = alias_frequency(f, fs);
    } catch (const Error&) {
      continue;
    }
    EXPECT_NEAR(got, want, 1e-9 * f);
    EXPECT_LE(got, fs / 2 + 1e-9);
  }
}

TEST(QuadraticInterp, Examples) {
  EXPECT_DOUBLE_EQ(quadratic_interp_peak(1, 2, 1, 100, 0.01), 1.0);
  EXPECT_DOUBLE_EQ(quadratic_interp_peak(2, 2, 0, 100, 0.01), 0.995);
  EXPECT_DOUBLE_EQ(quadratic_interp_peak(0, 0, 0, 100, 0.01), 1.0);
  EXPECT_THROW(quadratic_interp_peak(3, 2, 1, 100, 0.01), Error);
}

TEST(QuadraticInterp, RecoversParabolaVertex) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.5, 0.5), a_d(0.1, 5);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng), a = a_d(rng);
    const auto p = [&](double x) { return 10 - a * (x - v) * (x - v); };
    EXPECT_NEAR(quadratic_interp_peak(p(-1), p(0), p(1), 50, 0.1), (50 + v) * 0.1, 1e-9);
  }
}

TEST(Stft, VectorLength) {
  StftConfig cfg;
  EXPECT_EQ(enf_vector_length(120, cfg), 101u);
  EXPECT_EQ(enf_vector_length(20, cfg), 1u);
  EXPECT_EQ(enf_vector_length(19.5, cfg), 0u);
  const auto geo = stft_geometry(3597, kFs, cfg);
  EXPECT_EQ(geo.hops, 101u);
  EXPECT_EQ(geo.window_frames, 599u);
  EXPECT_EQ(geo.fft_size, 4u * 599u);
}

TEST(Stft, PureToneWithinFiveMillihertz) {
  const auto s = tone(10.09, 120);
  const auto v = stft_enf_estimate(s, meta_for(s.values.size()), StftConfig{});
  ASSERT_EQ(v.values.size(), 101u);
  for (double f : v.values) EXPECT_NEAR(f, 10.09, 0.005);
}

TEST(Stft, MatchesNaiveDft) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0, 0.01);
  StftConfig cfg;
  cfg.window_seconds = 8;
  cfg.hop_seconds = 2.5;
  cfg.band_halfwidth_hz = 0.4;
  for (int trial = 0; trial < 4; ++trial) {
    auto s = tone(9.8 + 0.15 * trial, 30, 0.02, trial);
    for (auto& v : s.values) v += g(rng);
    const auto got = stft_enf_estimate(s, meta_for(s.values.size()), cfg);
    const auto want = naive_estimate(s, cfg);
    ASSERT_EQ(got.values.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.values[i], want[i], 1e-9);
  }
  // Band spectrogram against the same transform.
  const auto s = tone(10.0, 12);
  const auto spec = stft_band_spectrogram(s, meta_for(s.values.size()), cfg);
  const std::size_t nw = static_cast<std::size_t>(std::floor(8 * kFs));
  std::vector<double> w(s.values.begin(), s.values.begin() + nw);
  double mean = 0;
  for (double v : w) mean += v / nw;
  for (std::size_t i = 0; i < nw; ++i) w[i] = (w[i] - mean) * (0.5 - 0.5 * std::cos(2 * M_PI * i / (nw - 1)));
  const std::size_t first = static_cast<std::size_t>(std::llround(spec.first_bin_hz / spec.bin_width_hz));
  for (std::size_t b = 0; b < spec.bins; ++b)
    EXPECT_NEAR(spec.magnitude[b], dft_magnitude(w, nw * 4, first + b), 1e-4);
}

TEST(Stft, ChirpTrackedPerWindow) {
  // f(t) = 10 + 0.2 t / 120; a window's expected estimate is the mean
  // instantaneous frequency over its span.
  IntensitySeries s;
  const std::size_t n = static_cast<std::size_t>(std::ceil(120 * kFs));
  const double k = 0.2 / 120;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i / kFs;
    s.values.push_back(0.5 + 0.05 * std::sin(2 * M_PI * (10 * t + 0.5 * k * t * t)));
  }
  StftConfig cfg;
  cfg.band_center_hz = 10.1;
  const auto v = stft_enf_estimate(s, meta_for(n), cfg);
  ASSERT_EQ(v.values.size(), 101u);
  for (std::size_t h = 0; h < v.values.size(); ++h) {
    const double t0 = std::floor(h * kFs + 1e-9) / kFs;
    const double truth = 10 + k * (t0 + 10.0);
    EXPECT_NEAR(v.values[h], truth, 0.01) << h;
    if (h > 0) EXPECT_GT(v.values[h], v.values[h - 1]);
  }
}

TEST(Stft, AmplitudeAndOffsetInvariance) {
  auto s = tone(10.05, 60, 0.02);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 0.005);
  for (auto& v : s.values) v += g(rng);
  StftConfig cfg;
  const auto base = stft_enf_estimate(s, meta_for(s.values.size()), cfg);
  for (double scale : {0.25, 3.0}) {
    for (double offset : {-0.2, 0.4}) {
      IntensitySeries t = s;
      for (auto& v : t.values) v = scale * v + offset;
      const auto out = stft_enf_estimate(t, meta_for(t.values.size()), cfg);
      ASSERT_EQ(out.values.size(), base.values.size());
      for (std::size_t i = 0; i < out.values.size(); ++i) EXPECT_NEAR(out.values[i], base.values[i], 1e-9);
    }
  }
}

TEST(Stft, EstimatesStayInBand) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  IntensitySeries s;
  for (int i = 0; i < 1200; ++i) s.values.push_back(g(rng));
  StftConfig cfg;
  cfg.band_center_hz = 3.0;
  cfg.band_halfwidth_hz = 0.3;
  const auto v = stft_enf_estimate(s, meta_for(1200), cfg);
  for (double f : v.values) {
    EXPECT_GE(f, 2.7);
    EXPECT_LE(f, 3.3);
  }
}

TEST(Stft, WhiteNoiseRowsAreUncorrelated) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0, 1);
  StftConfig cfg;
  cfg.window_seconds = 4;
  double sum_abs = 0;
  int pairs = 0;
  for (int seed = 0; seed < 100; ++seed) {
    IntensitySeries a, b;
    for (int i = 0; i < 1800; ++i) {
      a.values.push_back(g(rng));
      b.values.push_back(g(rng));
    }
    const auto ea = stft_enf_estimate(a, meta_for(1800), cfg);
    const auto eb = stft_enf_estimate(b, meta_for(1800), cfg);
    if (const auto r = pearson(ea.values, eb.values)) {
      sum_abs += std::abs(*r);
      ++pairs;
    }
  }
  ASSERT_GT(pairs, 90);
  EXPECT_LT(sum_abs / pairs, 0.2);
}

TEST(Stft, Errors) {
  const auto s = tone(10, 10);
  StftConfig cfg;
  try {
    stft_enf_estimate(s, meta_for(s.values.size()), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSeriesTooShort);
  }
  cfg.window_seconds = 5;
  cfg.band_center_hz = 14.9;
  EXPECT_THROW(stft_enf_estimate(s, meta_for(s.values.size()), cfg), Error);
  cfg.band_center_hz = 10;
  cfg.hop_seconds = 6;
  EXPECT_THROW(cfg.validate(kFs), Error);
}

TEST(IntensitySeriesTest, MeansOverRegion) {
  const auto seq = enfpd::testing::make_sequence(4, 3, 20, 25.0, [](int x, int y, std::size_t n) {
    return (x + 4 * y) / 20.0 + n / 100.0;
  });
  const std::vector<PixelCoord> one = {{2, 1}};
  const auto s1 = mean_intensity_series(seq, one, 7);
  EXPECT_EQ(s1.region_label, 7);
  for (std::size_t n = 0; n < 20; ++n) EXPECT_NEAR(s1.values[n], seq.at(2, 1, n), 1e-7);
  const std::vector<PixelCoord> two = {{0, 0}, {3, 2}};
  const auto s2 = mean_intensity_series(seq, two);
  for (std::size_t n = 0; n < 20; ++n) EXPECT_NEAR(s2.values[n], (seq.at(0, 0, n) + seq.at(3, 2, n)) / 2, 1e-7);
  EXPECT_THROW(mean_intensity_series(seq, std::vector<PixelCoord>{}), Error);

  SteadySuperpixelSet set;
  set.regions.push_back({4, one});
  set.regions.push_back({9, two});
  const auto both = mean_intensity_series(seq, set, 3);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[1].region_label, 9);
  for (std::size_t n = 0; n < 20; ++n) {
    EXPECT_NEAR(both[0].values[n], s1.values[n], 1e-12);
    EXPECT_NEAR(both[1].values[n], s2.values[n], 1e-12);
  }
}

TEST(IntensitySeriesTest, ConstantVideo) {
  const auto seq = enfpd::testing::make_sequence(3, 3, 10, 25.0, [](int, int, std::size_t) { return 0.5; });
  const std::vector<PixelCoord> all = {{0, 0}, {1, 1}, {2, 2}};
  for (double v : mean_intensity_series(seq, all).values) EXPECT_DOUBLE_EQ(v, 0.5);
}
