#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "enfpd/detect.hpp"
#include "enfpd/enf.hpp"
#include "enfpd/ingest.hpp"
#include "enfpd/keyvalue.hpp"
#include "enfpd/slic.hpp"
#include "enfpd/steady.hpp"

namespace enfpd {

struct PipelineConfig {
  double nominal_grid_hz = 50.0;
  SlicConfig slic;
  SteadyConfig steady;
  // Detrend span follows the frame rate (one second) unless set explicitly.
  bool detrend_window_auto = true;
  StftConfig stft;
  // Search band centered on the flicker alias of the nominal grid frequency.
  bool band_center_auto = true;
  RepresentativeMode representative_mode = RepresentativeMode::kMedian;
  MetricId chosen_metric = MetricId::kF1;
  double threshold = 0.8;
  double clip_seconds = 120.0;
  bool leave_one_out = false;

  // Throws kInvalidConfig.
  void validate() const;

  // Flat dotted keys, e.g. stft.window_seconds=20. Keys under "sim." are
  // ignored here; any other unknown key is an error.
  KeyValues to_key_values() const;
  void apply(const KeyValues& values);
  // "key=value"
  void set(std::string_view assignment);

  static PipelineConfig from_file(const std::filesystem::path& path);

  // Copy with the automatic fields filled in for a given frame rate.
  PipelineConfig resolved(double frame_rate) const;
};

// Frames kept from a clip: ceil(clip_seconds * fps), capped at the length.
std::size_t clip_frame_count(const VideoMeta& meta, double clip_seconds);

// Intermediate products of the estimation steps, kept for debug dumps and
// for scoring several metric configurations from one pass.
struct EnfAnalysis {
  PipelineConfig config;  // resolved
  VideoMeta meta;         // after clipping
  std::size_t representative_frame = 0;
  Image<float> representative_luma;
  SuperpixelMap superpixels;
  SteadyMask steady;
  SteadySuperpixelSet regions;
  std::vector<IntensitySeries> series;
  EnfMatrix matrix;
  std::size_t vector_length = 0;
};

EnfAnalysis analyze(const FrameSource& source, const PipelineConfig& config, int jobs = 1);

DetectionReport score(const EnfAnalysis& analysis, RepresentativeMode mode, MetricId metric,
                      double threshold, bool leave_one_out = false);
inline DetectionReport score(const EnfAnalysis& analysis) {
  const auto& c = analysis.config;
  return score(analysis, c.representative_mode, c.chosen_metric, c.threshold, c.leave_one_out);
}

DetectionReport run_detection(const FrameSource& source, const PipelineConfig& config, int jobs = 1);

// Writes per-region ENF CSVs, band spectrograms, the label map, the steady
// mask and a region table into `dir`.
void write_debug_dump(const EnfAnalysis& analysis, const std::filesystem::path& dir);

}  // namespace enfpd
