#include "enfpd/enf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "enfpd/error.hpp"
#include "enfpd/parallel.hpp"
#include "fft.hpp"

namespace enfpd {
namespace {

constexpr double kEps = 1e-9;

std::vector<double> make_window(WindowFunction kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowFunction::kHann && n > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    }
  }
  return w;
}

// Shared per-hop spectrum computation. `visit(hop, fft)` sees the transformed
// window.
template <typename Visit>
void for_each_hop(const IntensitySeries& series, const VideoMeta& meta, const StftConfig& config,
                  const StftGeometry& geo, Visit&& visit) {
  const double fs = meta.fps();
  const auto window = make_window(config.window, geo.window_frames);
  detail::RealFft fft(geo.fft_size);
  auto in = fft.input();
  for (std::size_t hop = 0; hop < geo.hops; ++hop) {
    const std::size_t start = geo.hop_start(hop, fs, config.hop_seconds);
    const double* x = series.values.data() + start;
    double mean = 0;
    for (std::size_t i = 0; i < geo.window_frames; ++i) mean += x[i];
    mean /= static_cast<double>(geo.window_frames);
    for (std::size_t i = 0; i < geo.window_frames; ++i) in[i] = (x[i] - mean) * window[i];
    std::fill(in.begin() + static_cast<std::ptrdiff_t>(geo.window_frames), in.end(), 0.0);
    fft.execute();
    visit(hop, fft);
  }
}

}  // namespace

void StftConfig::validate(double frame_rate) const {
  if (!(hop_seconds > 0) || !(window_seconds > hop_seconds)) {
    throw Error(ErrorCode::kInvalidConfig, "stft requires window_seconds > hop_seconds > 0");
  }
  if (zero_pad_factor < 1) throw Error(ErrorCode::kInvalidConfig, "stft.zero_pad_factor must be >= 1");
  const double nyquist = frame_rate / 2.0;
  if (!(band_center_hz > 0 && band_center_hz < nyquist)) {
    throw Error(ErrorCode::kInvalidConfig, "stft.band_center_hz must lie in (0, frame_rate/2)");
  }
  if (!(band_halfwidth_hz > 0) || !(band_center_hz - band_halfwidth_hz > 0) ||
      !(band_center_hz + band_halfwidth_hz < nyquist)) {
    throw Error(ErrorCode::kInvalidConfig, "stft band must stay inside (0, frame_rate/2)");
  }
}

double alias_frequency(double tone_hz, double sample_rate_hz) {
  if (!(tone_hz > 0) || !(sample_rate_hz > 0)) {
    throw Error(ErrorCode::kInvalidConfig, "alias_frequency needs positive frequencies");
  }
  const double k = std::round(tone_hz / sample_rate_hz);
  const double alias = std::abs(tone_hz - k * sample_rate_hz);
  if (std::abs(alias - sample_rate_hz / 2.0) <= 1e-12 * sample_rate_hz) {
    throw Error(ErrorCode::kNyquistBoundary, "alias falls exactly on the Nyquist frequency");
  }
  return alias;
}

double quadratic_interp_peak(double m_prev, double m_peak, double m_next, double bin_index,
                             double bin_width_hz) {
  if (m_peak < m_prev || m_peak < m_next) {
    throw Error(ErrorCode::kNotALocalMax, "center magnitude is not a local maximum");
  }
  const double denom = m_prev - 2.0 * m_peak + m_next;
  double delta = 0.0;
  if (denom != 0.0) delta = std::clamp(0.5 * (m_prev - m_next) / denom, -0.5, 0.5);
  return (bin_index + delta) * bin_width_hz;
}

std::size_t StftGeometry::hop_start(std::size_t hop, double frame_rate, double hop_seconds) const {
  return static_cast<std::size_t>(std::floor(static_cast<double>(hop) * hop_seconds * frame_rate + kEps));
}

std::size_t enf_vector_length(double duration_seconds, const StftConfig& config) {
  if (duration_seconds + kEps < config.window_seconds) return 0;
  return static_cast<std::size_t>(
             std::floor((duration_seconds - config.window_seconds) / config.hop_seconds + kEps)) +
         1;
}

StftGeometry stft_geometry(std::size_t frame_count, double frame_rate, const StftConfig& config) {
  config.validate(frame_rate);
  StftGeometry geo;
  geo.window_frames = static_cast<std::size_t>(std::floor(config.window_seconds * frame_rate + kEps));
  if (geo.window_frames < 3) throw Error(ErrorCode::kInvalidConfig, "stft window shorter than 3 frames");
  if (frame_count < geo.window_frames) {
    throw Error(ErrorCode::kSeriesTooShort, std::to_string(frame_count) + " frames < window of " +
                                                std::to_string(geo.window_frames));
  }
  geo.hops = enf_vector_length(static_cast<double>(frame_count) / frame_rate, config);
  // Rounding can in principle push the last window past the end.
  while (geo.hops > 0 &&
         geo.hop_start(geo.hops - 1, frame_rate, config.hop_seconds) + geo.window_frames > frame_count) {
    --geo.hops;
  }
  if (geo.hops == 0) throw Error(ErrorCode::kSeriesTooShort, "no complete STFT window");

  geo.fft_size = geo.window_frames * static_cast<std::size_t>(config.zero_pad_factor);
  geo.bin_width_hz = frame_rate / static_cast<double>(geo.fft_size);
  const double lo = std::ceil((config.band_center_hz - config.band_halfwidth_hz) / geo.bin_width_hz - kEps);
  const double hi = std::floor((config.band_center_hz + config.band_halfwidth_hz) / geo.bin_width_hz + kEps);
  const double max_bin = static_cast<double>(geo.fft_size / 2) - 1.0;
  const double first = std::max(lo, 1.0);
  const double last = std::min(hi, max_bin);
  if (first > last) throw Error(ErrorCode::kEmptyBand, "no FFT bin inside the search band");
  geo.first_band_bin = static_cast<std::size_t>(first);
  geo.last_band_bin = static_cast<std::size_t>(last);
  return geo;
}

IntensitySeries mean_intensity_series(const FrameSource& source, std::span<const PixelCoord> region,
                                      std::int32_t region_label) {
  if (region.empty()) throw Error(ErrorCode::kEmptyRegion, "region has no pixels");
  const VideoMeta& meta = source.meta();
  for (const auto& p : region) {
    if (p.x < 0 || p.y < 0 || p.x >= meta.width || p.y >= meta.height) {
      throw Error(ErrorCode::kEmptyRegion, "region coordinate out of bounds");
    }
  }
  IntensitySeries out{std::vector<double>(meta.frame_count), region_label};
  std::vector<float> frame(meta.pixel_count());
  for (std::size_t n = 0; n < meta.frame_count; ++n) {
    source.read_frame(n, frame);
    double sum = 0;
    for (const auto& p : region) sum += frame[static_cast<std::size_t>(p.y) * meta.width + p.x];
    out.values[n] = sum / static_cast<double>(region.size());
  }
  return out;
}

std::vector<IntensitySeries> mean_intensity_series(const FrameSource& source,
                                                   const SteadySuperpixelSet& set, int jobs) {
  const VideoMeta& meta = source.meta();
  std::vector<IntensitySeries> out;
  out.reserve(set.count());
  std::vector<std::int32_t> slot(meta.pixel_count(), -1);
  std::vector<double> inv_count;
  for (std::size_t r = 0; r < set.count(); ++r) {
    const auto& region = set.regions[r];
    if (region.pixels.empty()) throw Error(ErrorCode::kEmptyRegion, "steady region without pixels");
    for (const auto& p : region.pixels) {
      if (p.x < 0 || p.y < 0 || p.x >= meta.width || p.y >= meta.height) {
        throw Error(ErrorCode::kEmptyRegion, "region coordinate out of bounds");
      }
      slot[static_cast<std::size_t>(p.y) * meta.width + p.x] = static_cast<std::int32_t>(r);
    }
    inv_count.push_back(1.0 / static_cast<double>(region.pixels.size()));
    out.push_back(IntensitySeries{std::vector<double>(meta.frame_count), region.label});
  }
  if (set.count() == 0) return out;

  // Restrict reads to the rows that contain selected pixels.
  int y0 = meta.height, y1 = 0;
  for (const auto& region : set.regions) {
    for (const auto& p : region.pixels) {
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y + 1);
    }
  }
  const std::size_t offset = static_cast<std::size_t>(y0) * meta.width;
  const std::size_t count = static_cast<std::size_t>(y1 - y0) * meta.width;

  const std::size_t chunks = std::max<std::size_t>(1, static_cast<std::size_t>(jobs));
  const std::size_t per_chunk = (meta.frame_count + chunks - 1) / chunks;
  parallel_for(chunks, jobs, [&](std::size_t c) {
    std::vector<float> rows(count);
    std::vector<double> sums(set.count());
    const std::size_t n_end = std::min(meta.frame_count, (c + 1) * per_chunk);
    for (std::size_t n = c * per_chunk; n < n_end; ++n) {
      source.read_rows(n, y0, y1, rows);
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t i = 0; i < count; ++i) {
        const auto s = slot[offset + i];
        if (s >= 0) sums[static_cast<std::size_t>(s)] += rows[i];
      }
      for (std::size_t r = 0; r < sums.size(); ++r) out[r].values[n] = sums[r] * inv_count[r];
    }
  });
  return out;
}

EnfVector stft_enf_estimate(const IntensitySeries& series, const VideoMeta& meta,
                            const StftConfig& config) {
  const double fs = meta.fps();
  const StftGeometry geo = stft_geometry(series.values.size(), fs, config);
  const double lo_hz = config.band_center_hz - config.band_halfwidth_hz;
  const double hi_hz = config.band_center_hz + config.band_halfwidth_hz;

  EnfVector out{std::vector<double>(geo.hops), series.region_label};
  for_each_hop(series, meta, config, geo, [&](std::size_t hop, const detail::RealFft& fft) {
    std::size_t best = geo.first_band_bin;
    double best_mag = fft.magnitude(best);
    for (std::size_t k = geo.first_band_bin + 1; k <= geo.last_band_bin; ++k) {
      const double m = fft.magnitude(k);
      if (m > best_mag) {
        best_mag = m;
        best = k;
      }
    }
    const double prev = fft.magnitude(best - 1);
    const double next = fft.magnitude(best + 1);
    // A band-edge maximum can sit on the flank of an out-of-band peak; it is
    // then reported unrefined.
    double freq = static_cast<double>(best) * geo.bin_width_hz;
    if (best_mag >= prev && best_mag >= next) {
      freq = quadratic_interp_peak(prev, best_mag, next, static_cast<double>(best), geo.bin_width_hz);
    }
    out.values[hop] = std::clamp(freq, lo_hz, hi_hz);
  });
  return out;
}

BandSpectrogram stft_band_spectrogram(const IntensitySeries& series, const VideoMeta& meta,
                                      const StftConfig& config) {
  const StftGeometry geo = stft_geometry(series.values.size(), meta.fps(), config);
  BandSpectrogram spec;
  spec.hops = geo.hops;
  spec.bins = geo.last_band_bin - geo.first_band_bin + 1;
  spec.first_bin_hz = static_cast<double>(geo.first_band_bin) * geo.bin_width_hz;
  spec.bin_width_hz = geo.bin_width_hz;
  spec.hop_seconds = config.hop_seconds;
  spec.magnitude.resize(spec.hops * spec.bins);
  for_each_hop(series, meta, config, geo, [&](std::size_t hop, const detail::RealFft& fft) {
    for (std::size_t b = 0; b < spec.bins; ++b) {
      spec.magnitude[hop * spec.bins + b] = static_cast<float>(fft.magnitude(geo.first_band_bin + b));
    }
  });
  return spec;
}

void write_enf_csv(const EnfVector& vector, double hop_seconds, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.precision(10);
  out << "hop_time_s,freq_hz\n";
  for (std::size_t i = 0; i < vector.values.size(); ++i) {
    out << static_cast<double>(i) * hop_seconds << ',' << vector.values[i] << '\n';
  }
}

void write_spectrogram(const BandSpectrogram& spectrogram, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(spectrogram.magnitude.data()),
              static_cast<std::streamsize>(spectrogram.magnitude.size() * sizeof(float)));
  }
  std::ofstream meta(path.string() + ".meta");
  meta.precision(12);
  meta << "rows=" << spectrogram.hops << "\ncols=" << spectrogram.bins
       << "\ndtype=float32le\nfirst_bin_hz=" << spectrogram.first_bin_hz
       << "\nbin_width_hz=" << spectrogram.bin_width_hz << "\nhop_seconds=" << spectrogram.hop_seconds
       << '\n';
}

}  // namespace enfpd
