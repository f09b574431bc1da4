#include "enfpd/steady.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "enfpd/error.hpp"
#include "enfpd/parallel.hpp"

namespace enfpd {
namespace {

constexpr std::size_t kBandBytes = std::size_t{64} << 20;

// Centered moving average of span min(2 half + 1, frames). Near the ends the
// window slides inward instead of shrinking: a truncated mean of a few flicker
// periods leaves a residual several times larger than a full one. Series are
// `lanes` wide, frame-major with row pitch `stride`; row(n, mean) is called
// once per frame.
template <typename In, typename Row>
void centered_means(const In* __restrict x, std::size_t frames, std::size_t stride, std::size_t lanes,
                    std::size_t half, double* __restrict sum, double* __restrict mean, Row&& row) {
  const std::size_t span = std::min(2 * half + 1, frames);
  const double inv = 1.0 / static_cast<double>(span);
  std::fill(sum, sum + lanes, 0.0);
  for (std::size_t k = 0; k < span; ++k) {
    const In* xk = x + k * stride;
    for (std::size_t p = 0; p < lanes; ++p) sum[p] += xk[p];
  }
  std::size_t lo = 0;
  for (std::size_t n = 0; n < frames; ++n) {
    const std::size_t want = std::min(n >= half ? n - half : 0, frames - span);
    if (want != lo) {  // advances by exactly one
      const In* xa = x + (lo + span) * stride;
      const In* xr = x + lo * stride;
      for (std::size_t p = 0; p < lanes; ++p) sum[p] += static_cast<double>(xa[p]) - xr[p];
      lo = want;
    }
    for (std::size_t p = 0; p < lanes; ++p) mean[p] = sum[p] * inv;
    row(n, mean);
  }
}

void band_statistic(const std::vector<float>& x, std::size_t frames, std::size_t lanes,
                    const SteadyConfig& config, std::span<float> out) {
  const auto detrend_half = static_cast<std::size_t>(config.detrend_window / 2);
  const auto smooth_half = static_cast<std::size_t>(config.residual_smoothing / 2);
  // Lanes are processed in narrow chunks so the running sums stay in cache.
  constexpr std::size_t kChunk = 1024;
  std::vector<float> residual;
  std::vector<double> sum(kChunk), mean(kChunk), peak(kChunk);
  for (std::size_t p0 = 0; p0 < lanes; p0 += kChunk) {
    const std::size_t width = std::min(kChunk, lanes - p0);
    residual.resize(frames * width);
    const float* src = x.data() + p0;
    float* res = residual.data();
    centered_means(src, frames, lanes, width, detrend_half, sum.data(), mean.data(),
                   [&](std::size_t n, const double* m) {
                     const float* xn = src + n * lanes;
                     float* rn = res + n * width;
                     for (std::size_t p = 0; p < width; ++p) rn[p] = static_cast<float>(xn[p] - m[p]);
                   });
    std::fill(peak.begin(), peak.end(), 0.0);
    double* pk = peak.data();
    centered_means(res, frames, width, width, smooth_half, sum.data(), mean.data(),
                   [&](std::size_t, const double* m) {
                     for (std::size_t p = 0; p < width; ++p) pk[p] = std::max(pk[p], std::abs(m[p]));
                   });
    for (std::size_t p = 0; p < width; ++p) out[p0 + p] = static_cast<float>(peak[p]);
  }
}

}  // namespace

void SteadyConfig::validate() const {
  if (detrend_window < 1 || detrend_window % 2 == 0) {
    throw Error(ErrorCode::kInvalidConfig, "steady.detrend_window must be odd and >= 1");
  }
  if (residual_smoothing < 1 || residual_smoothing % 2 == 0) {
    throw Error(ErrorCode::kInvalidConfig, "steady.residual_smoothing must be odd and >= 1");
  }
  if (!(steadiness_threshold > 0)) {
    throw Error(ErrorCode::kInvalidConfig, "steady.steadiness_threshold must be > 0");
  }
  if (tau < 1) throw Error(ErrorCode::kInvalidConfig, "steady.tau must be >= 1");
}

int default_detrend_window(double fps) {
  const int w = std::max(1, static_cast<int>(std::lround(fps)));
  return w % 2 == 0 ? w + 1 : w;
}

std::size_t SteadyMask::count() const {
  return static_cast<std::size_t>(std::count(mask.pixels().begin(), mask.pixels().end(), 1));
}

double motion_statistic(std::span<const float> series, const SteadyConfig& config) {
  config.validate();
  if (series.empty()) return 0.0;
  std::vector<float> x(series.begin(), series.end());
  float out = 0;
  band_statistic(x, x.size(), 1, config, std::span<float>(&out, 1));
  return out;
}

Image<float> compute_motion_statistic(const FrameSource& source, const SteadyConfig& config,
                                      int jobs) {
  config.validate();
  const VideoMeta& meta = source.meta();
  if (meta.frame_count < static_cast<std::size_t>(config.detrend_window)) {
    throw Error(ErrorCode::kSequenceTooShort,
                std::to_string(meta.frame_count) + " frames < detrend window " +
                    std::to_string(config.detrend_window));
  }
  const std::size_t row_bytes = static_cast<std::size_t>(meta.width) * meta.frame_count * sizeof(float);
  const int rows_per_band =
      std::clamp(static_cast<int>(kBandBytes / std::max<std::size_t>(row_bytes, 1)), 1, meta.height);
  const int bands = (meta.height + rows_per_band - 1) / rows_per_band;

  Image<float> stat(meta.width, meta.height, 0.0f);
  parallel_for(static_cast<std::size_t>(bands), jobs, [&](std::size_t b) {
    const int y0 = static_cast<int>(b) * rows_per_band;
    const int y1 = std::min(meta.height, y0 + rows_per_band);
    const std::size_t lanes = static_cast<std::size_t>(y1 - y0) * meta.width;
    std::vector<float> band(lanes * meta.frame_count);
    for (std::size_t n = 0; n < meta.frame_count; ++n) {
      source.read_rows(n, y0, y1, std::span<float>(band).subspan(n * lanes, lanes));
    }
    band_statistic(band, meta.frame_count, lanes, config,
                   stat.pixels().subspan(static_cast<std::size_t>(y0) * meta.width, lanes));
  });
  return stat;
}

SteadyMask threshold_motion(const Image<float>& statistic, double threshold) {
  SteadyMask m{Image<std::uint8_t>(statistic.width(), statistic.height(), 0)};
  for (std::size_t i = 0; i < statistic.pixel_count(); ++i) {
    m.mask[i] = statistic[i] <= threshold ? 1 : 0;
  }
  return m;
}

SteadyMask compute_steady_mask(const FrameSource& source, const SteadyConfig& config, int jobs) {
  return threshold_motion(compute_motion_statistic(source, config, jobs), config.steadiness_threshold);
}

std::vector<std::size_t> steady_pixel_counts(const SuperpixelMap& map, const SteadyMask& mask) {
  if (map.width() != mask.mask.width() || map.height() != mask.mask.height()) {
    throw Error(ErrorCode::kInvalidConfig, "superpixel map and steady mask dimensions differ");
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(map.region_count), 0);
  for (std::size_t i = 0; i < map.labels.pixel_count(); ++i) {
    if (mask.mask[i]) ++counts.at(static_cast<std::size_t>(map.labels[i]));
  }
  return counts;
}

SteadySuperpixelSet select_steady_superpixels(const SuperpixelMap& map, const SteadyMask& mask,
                                              std::size_t tau) {
  const auto counts = steady_pixel_counts(map, mask);
  std::vector<int> slot(counts.size(), -1);
  SteadySuperpixelSet set;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (counts[l] > tau) {
      slot[l] = static_cast<int>(set.regions.size());
      set.regions.push_back(SteadyRegion{static_cast<std::int32_t>(l), {}});
      set.regions.back().pixels.reserve(counts[l]);
    }
  }
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const int s = slot[static_cast<std::size_t>(map.labels(x, y))];
      if (s >= 0 && mask.mask(x, y)) set.regions[static_cast<std::size_t>(s)].pixels.push_back({x, y});
    }
  }
  return set;
}

void write_steady_mask(const SteadyMask& mask, const std::filesystem::path& path) {
  write_pbm(mask.mask, path);
}

void write_region_counts_csv(const SuperpixelMap& map, const SteadyMask& mask, std::size_t tau,
                             const std::filesystem::path& path) {
  const auto sizes = map.region_sizes();
  const auto counts = steady_pixel_counts(map, mask);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "label,pixels,steady_pixels,selected\n";
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    out << l << ',' << sizes[l] << ',' << counts[l] << ',' << (counts[l] > tau ? 1 : 0) << '\n';
  }
}

}  // namespace enfpd
