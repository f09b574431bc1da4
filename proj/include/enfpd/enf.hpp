#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "enfpd/image.hpp"
#include "enfpd/ingest.hpp"
#include "enfpd/steady.hpp"

namespace enfpd {

struct IntensitySeries {
  std::vector<double> values;  // one mean luma per frame
  std::int32_t region_label = -1;
};

enum class WindowFunction { kHann, kRect };

struct StftConfig {
  double window_seconds = 20.0;
  double hop_seconds = 1.0;
  WindowFunction window = WindowFunction::kHann;
  int zero_pad_factor = 4;
  double band_center_hz = 10.09;
  double band_halfwidth_hz = 0.5;

  // Throws kInvalidConfig; `frame_rate` bounds the band.
  void validate(double frame_rate) const;
};

struct EnfVector {
  std::vector<double> values;  // Hz, one per hop
  std::int32_t region_label = -1;
};

// Alias of a tone at `tone_hz` sampled at `sample_rate_hz`:
// min over k >= 0 of |tone - k * rate|. Throws kNyquistBoundary when the fold
// lands exactly on rate/2.
double alias_frequency(double tone_hz, double sample_rate_hz);

// Flicker alias of a grid (light flickers at twice the mains frequency).
inline double flicker_alias_frequency(double nominal_grid_hz, double frame_rate) {
  return alias_frequency(2.0 * nominal_grid_hz, frame_rate);
}

// Parabolic refinement of a spectral peak. The offset is clamped to
// [-0.5, 0.5] bins; a flat parabola gives offset 0.
// Throws kNotALocalMax when m_peak is below either neighbor.
double quadratic_interp_peak(double m_prev, double m_peak, double m_next, double bin_index,
                             double bin_width_hz);

// Window and hop sizes in frames, and the number of hops.
struct StftGeometry {
  std::size_t window_frames = 0;
  std::size_t fft_size = 0;
  std::size_t hops = 0;
  double bin_width_hz = 0;
  std::size_t first_band_bin = 0;
  std::size_t last_band_bin = 0;

  std::size_t hop_start(std::size_t hop, double frame_rate, double hop_seconds) const;
};

StftGeometry stft_geometry(std::size_t frame_count, double frame_rate, const StftConfig& config);

// floor((duration - window) / hop) + 1
std::size_t enf_vector_length(double duration_seconds, const StftConfig& config);

IntensitySeries mean_intensity_series(const FrameSource& source, std::span<const PixelCoord> region,
                                      std::int32_t region_label = -1);

// One pass over the frames for all regions; result order matches `set`.
std::vector<IntensitySeries> mean_intensity_series(const FrameSource& source,
                                                   const SteadySuperpixelSet& set, int jobs = 1);

EnfVector stft_enf_estimate(const IntensitySeries& series, const VideoMeta& meta,
                            const StftConfig& config);

struct BandSpectrogram {
  std::size_t hops = 0;
  std::size_t bins = 0;
  double first_bin_hz = 0;
  double bin_width_hz = 0;
  double hop_seconds = 0;
  std::vector<float> magnitude;  // hops x bins, row-major
};

BandSpectrogram stft_band_spectrogram(const IntensitySeries& series, const VideoMeta& meta,
                                      const StftConfig& config);

// CSV with header hop_time_s,freq_hz; hop_time_s is the window start.
void write_enf_csv(const EnfVector& vector, double hop_seconds, const std::filesystem::path& path);
// Raw little-endian float32 grid plus `<path>.meta` describing its axes.
void write_spectrogram(const BandSpectrogram& spectrogram, const std::filesystem::path& path);

}  // namespace enfpd
