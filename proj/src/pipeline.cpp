#include "enfpd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "enfpd/error.hpp"
#include "enfpd/parallel.hpp"

namespace fs = std::filesystem;

namespace enfpd {
namespace {

bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw Error(ErrorCode::kInvalidConfig, "not a boolean: '" + std::string(text) + "'");
}

std::string_view to_string(WindowFunction w) { return w == WindowFunction::kHann ? "hann" : "rect"; }

WindowFunction parse_window(std::string_view text) {
  if (text == "hann") return WindowFunction::kHann;
  if (text == "rect") return WindowFunction::kRect;
  throw Error(ErrorCode::kInvalidConfig, "stft.window must be hann or rect");
}

const std::set<std::string, std::less<>> kKeys = {
    "nominal_grid_hz",
    "slic.target_superpixels",
    "slic.compactness",
    "slic.max_iterations",
    "slic.connectivity_min_fraction",
    "steady.detrend_window",
    "steady.residual_smoothing",
    "steady.steadiness_threshold",
    "steady.tau",
    "stft.window_seconds",
    "stft.hop_seconds",
    "stft.window",
    "stft.zero_pad_factor",
    "stft.band_center_hz",
    "stft.band_halfwidth_hz",
    "representative_mode",
    "chosen_metric",
    "threshold",
    "clip_seconds",
    "leave_one_out",
};

}  // namespace

void PipelineConfig::validate() const {
  if (!(nominal_grid_hz > 0)) throw Error(ErrorCode::kInvalidConfig, "nominal_grid_hz must be positive");
  slic.validate();
  steady.validate();
  if (!(stft.window_seconds > stft.hop_seconds && stft.hop_seconds > 0)) {
    throw Error(ErrorCode::kInvalidConfig, "stft requires window_seconds > hop_seconds > 0");
  }
  if (stft.zero_pad_factor < 1) throw Error(ErrorCode::kInvalidConfig, "stft.zero_pad_factor must be >= 1");
  if (!band_center_auto && !(stft.band_center_hz > 0)) {
    throw Error(ErrorCode::kInvalidConfig, "stft.band_center_hz must be positive");
  }
  if (!(stft.band_halfwidth_hz > 0)) throw Error(ErrorCode::kInvalidConfig, "stft.band_halfwidth_hz must be positive");
  if (!(threshold >= -1 && threshold <= 1)) throw Error(ErrorCode::kInvalidConfig, "threshold must lie in [-1, 1]");
  if (!(clip_seconds >= stft.window_seconds)) {
    throw Error(ErrorCode::kInvalidConfig, "clip_seconds must be >= stft.window_seconds");
  }
}

KeyValues PipelineConfig::to_key_values() const {
  KeyValues kv;
  kv.set("nominal_grid_hz", format_double(nominal_grid_hz));
  kv.set("slic.target_superpixels", std::to_string(slic.target_superpixels));
  kv.set("slic.compactness", format_double(slic.compactness));
  kv.set("slic.max_iterations", std::to_string(slic.max_iterations));
  kv.set("slic.connectivity_min_fraction", format_double(slic.connectivity_min_fraction));
  kv.set("steady.detrend_window", detrend_window_auto ? "auto" : std::to_string(steady.detrend_window));
  kv.set("steady.residual_smoothing", std::to_string(steady.residual_smoothing));
  kv.set("steady.steadiness_threshold", format_double(steady.steadiness_threshold));
  kv.set("steady.tau", std::to_string(steady.tau));
  kv.set("stft.window_seconds", format_double(stft.window_seconds));
  kv.set("stft.hop_seconds", format_double(stft.hop_seconds));
  kv.set("stft.window", std::string(to_string(stft.window)));
  kv.set("stft.zero_pad_factor", std::to_string(stft.zero_pad_factor));
  kv.set("stft.band_center_hz", band_center_auto ? "auto" : format_double(stft.band_center_hz));
  kv.set("stft.band_halfwidth_hz", format_double(stft.band_halfwidth_hz));
  kv.set("representative_mode", std::string(to_string(representative_mode)));
  kv.set("chosen_metric", std::string(to_string(chosen_metric)));
  kv.set("threshold", format_double(threshold));
  kv.set("clip_seconds", format_double(clip_seconds));
  kv.set("leave_one_out", leave_one_out ? "true" : "false");
  return kv;
}

void PipelineConfig::apply(const KeyValues& values) {
  for (const auto& [key, value] : values.entries()) {
    if (key.rfind("sim.", 0) == 0) continue;
    if (!kKeys.contains(key)) throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    try {
      if (key == "nominal_grid_hz") nominal_grid_hz = parse_double(value);
      else if (key == "slic.target_superpixels") slic.target_superpixels = static_cast<int>(parse_int(value));
      else if (key == "slic.compactness") slic.compactness = parse_double(value);
      else if (key == "slic.max_iterations") slic.max_iterations = static_cast<int>(parse_int(value));
      else if (key == "slic.connectivity_min_fraction") slic.connectivity_min_fraction = parse_double(value);
      else if (key == "steady.detrend_window") {
        detrend_window_auto = value == "auto";
        if (!detrend_window_auto) steady.detrend_window = static_cast<int>(parse_int(value));
      } else if (key == "steady.residual_smoothing") steady.residual_smoothing = static_cast<int>(parse_int(value));
      else if (key == "steady.steadiness_threshold") steady.steadiness_threshold = parse_double(value);
      else if (key == "steady.tau") {
        const auto tau = parse_int(value);
        if (tau < 0) throw Error(ErrorCode::kInvalidConfig, "steady.tau must be >= 0");
        steady.tau = static_cast<std::size_t>(tau);
      } else if (key == "stft.window_seconds") stft.window_seconds = parse_double(value);
      else if (key == "stft.hop_seconds") stft.hop_seconds = parse_double(value);
      else if (key == "stft.window") stft.window = parse_window(value);
      else if (key == "stft.zero_pad_factor") stft.zero_pad_factor = static_cast<int>(parse_int(value));
      else if (key == "stft.band_center_hz") {
        band_center_auto = value == "auto";
        if (!band_center_auto) stft.band_center_hz = parse_double(value);
      } else if (key == "stft.band_halfwidth_hz") stft.band_halfwidth_hz = parse_double(value);
      else if (key == "representative_mode") representative_mode = parse_representative_mode(value);
      else if (key == "chosen_metric") chosen_metric = parse_metric(value);
      else if (key == "threshold") threshold = parse_double(value);
      else if (key == "clip_seconds") clip_seconds = parse_double(value);
      else if (key == "leave_one_out") leave_one_out = parse_bool(value);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kMalformedHeader) {
        throw Error(ErrorCode::kInvalidConfig, key + ": " + e.what());
      }
      throw;
    }
  }
}

void PipelineConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw Error(ErrorCode::kInvalidConfig, "expected key=value");
  apply(KeyValues::parse(assignment));
}

PipelineConfig PipelineConfig::from_file(const fs::path& path) {
  PipelineConfig c;
  c.apply(KeyValues::read_file(path));
  return c;
}

PipelineConfig PipelineConfig::resolved(double frame_rate) const {
  PipelineConfig c = *this;
  if (detrend_window_auto) c.steady.detrend_window = default_detrend_window(frame_rate);
  if (band_center_auto) {
    c.stft.band_center_hz = flicker_alias_frequency(nominal_grid_hz, frame_rate);
    // Keep the band inside (0, fs/2) when the alias sits near either edge.
    const double room = std::min(c.stft.band_center_hz, frame_rate / 2 - c.stft.band_center_hz);
    c.stft.band_halfwidth_hz = std::min(c.stft.band_halfwidth_hz, 0.999 * room);
  }
  return c;
}

std::size_t clip_frame_count(const VideoMeta& meta, double clip_seconds) {
  const auto wanted = static_cast<std::size_t>(std::ceil(clip_seconds * meta.fps() - 1e-9));
  return std::min(meta.frame_count, wanted);
}

EnfAnalysis analyze(const FrameSource& full_source, const PipelineConfig& config, int jobs) {
  config.validate();
  const TruncatedSource source(full_source, clip_frame_count(full_source.meta(), config.clip_seconds));
  EnfAnalysis a;
  a.meta = source.meta();
  a.config = config.resolved(a.meta.fps());
  a.config.stft.validate(a.meta.fps());
  // Fail early on clips too short for a single window.
  a.vector_length = stft_geometry(a.meta.frame_count, a.meta.fps(), a.config.stft).hops;

  a.representative_frame = representative_frame_index(a.meta.frame_count);
  a.representative_luma = source.frame(a.representative_frame).luma;
  a.superpixels = segment_slic(a.representative_luma, a.config.slic);
  a.steady = compute_steady_mask(source, a.config.steady, jobs);
  a.regions = select_steady_superpixels(a.superpixels, a.steady, a.config.steady.tau);
  a.series = mean_intensity_series(source, a.regions, jobs);
  a.matrix.rows.resize(a.series.size());
  parallel_for(a.series.size(), jobs, [&](std::size_t k) {
    a.matrix.rows[k] = stft_enf_estimate(a.series[k], a.meta, a.config.stft);
  });
  return a;
}

DetectionReport score(const EnfAnalysis& analysis, RepresentativeMode mode, MetricId metric,
                      double threshold, bool leave_one_out) {
  const auto metrics = score_matrix(analysis.matrix, mode, leave_one_out);
  DetectionReport report = decide(metrics, metric, threshold, analysis.matrix.row_count());
  report.representative_mode = mode;
  report.vector_length = analysis.vector_length;
  for (const auto& row : analysis.matrix.rows) report.region_labels.push_back(row.region_label);
  return report;
}

DetectionReport run_detection(const FrameSource& source, const PipelineConfig& config, int jobs) {
  return score(analyze(source, config, jobs));
}

void write_debug_dump(const EnfAnalysis& a, const fs::path& dir) {
  fs::create_directories(dir);
  write_label_map(a.superpixels, dir / "labels.pgm");
  write_boundary_overlay(a.representative_luma, a.superpixels, dir / "overlay.ppm");
  write_steady_mask(a.steady, dir / "steady.pbm");
  write_region_counts_csv(a.superpixels, a.steady, a.config.steady.tau, dir / "regions.csv");
  for (std::size_t k = 0; k < a.matrix.row_count(); ++k) {
    const auto label = std::to_string(a.matrix.rows[k].region_label);
    write_enf_csv(a.matrix.rows[k], a.config.stft.hop_seconds, dir / ("enf_region_" + label + ".csv"));
    write_spectrogram(stft_band_spectrogram(a.series[k], a.meta, a.config.stft),
                      dir / ("spectrogram_region_" + label + ".f32"));
  }
  std::ofstream cfg(dir / "config.txt");
  cfg << a.config.to_key_values().serialize();
}

}  // namespace enfpd
