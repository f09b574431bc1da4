#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "enfpd/image.hpp"
#include "enfpd/ingest.hpp"
#include "enfpd/slic.hpp"

namespace enfpd {

struct SteadyConfig {
  // Centered moving-average span (frames, odd) removed before the motion test.
  int detrend_window = 31;
  // Centered mean span (frames, odd) applied to the detrended residual.
  int residual_smoothing = 3;
  // Max allowed |smoothed residual|, luma units.
  double steadiness_threshold = 0.04;
  // A superpixel is kept when it has strictly more steady pixels than this.
  std::size_t tau = 900;

  void validate() const;
};

// One second of frames rounded to the nearest odd count.
int default_detrend_window(double fps);

struct SteadyMask {
  Image<std::uint8_t> mask;  // 1 = steady

  std::size_t count() const;
};

// Motion statistic of a single pixel trace: max over n of the centered
// `residual_smoothing`-frame mean of (x - centered moving average of x).
// Windows keep their full span, sliding inward at the sequence ends.
double motion_statistic(std::span<const float> series, const SteadyConfig& config);

// Per-pixel motion statistic for the whole frame.
Image<float> compute_motion_statistic(const FrameSource& source, const SteadyConfig& config,
                                      int jobs = 1);

// Pixel is steady iff its motion statistic <= steadiness_threshold.
// Throws kSequenceTooShort when frame_count < detrend_window.
SteadyMask compute_steady_mask(const FrameSource& source, const SteadyConfig& config, int jobs = 1);
SteadyMask threshold_motion(const Image<float>& statistic, double threshold);

struct SteadyRegion {
  std::int32_t label = 0;
  std::vector<PixelCoord> pixels;  // raster order
};

struct SteadySuperpixelSet {
  std::vector<SteadyRegion> regions;  // ascending label

  std::size_t count() const noexcept { return regions.size(); }
};

// m_l for every label of `map`.
std::vector<std::size_t> steady_pixel_counts(const SuperpixelMap& map, const SteadyMask& mask);

// Regions with m_l > tau, with their steady pixel coordinates.
SteadySuperpixelSet select_steady_superpixels(const SuperpixelMap& map, const SteadyMask& mask,
                                              std::size_t tau);

void write_steady_mask(const SteadyMask& mask, const std::filesystem::path& path);
// CSV: label,pixels,steady_pixels,selected
void write_region_counts_csv(const SuperpixelMap& map, const SteadyMask& mask, std::size_t tau,
                             const std::filesystem::path& path);

}  // namespace enfpd
