#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "enfpd/detect.hpp"
#include "enfpd/image.hpp"
#include "enfpd/ingest.hpp"
#include "enfpd/keyvalue.hpp"

namespace enfpd {

// Mains model. The power imbalance P_s - P_d (per unit) follows a zero-mean
// random walk reflected at the bound that keeps |f_e| <= max_deviation_hz;
// f_e = f_nominal / (2 H) * (P_s - P_d).
struct GridModel {
  double f_nominal = 50.0;
  double inertia_h = 5.0;             // seconds
  double imbalance_step_std = 0.002;  // per unit per sqrt(second)
  double max_deviation_hz = 0.05;
  double initial_phase = 0.0;         // alpha, radians
  double v_effective = 0.70710678118654752;  // V0; peak of V is sqrt(2) V0

  double frequency_step_std_hz() const noexcept { return f_nominal / (2.0 * inertia_h) * imbalance_step_std; }
  void set_frequency_step_std_hz(double hz_per_sqrt_s) {
    imbalance_step_std = hz_per_sqrt_s * 2.0 * inertia_h / f_nominal;
  }
  // Throws kInvalidConfig.
  void validate() const;
};

// f(t) = f_nominal + f_e(t), f_e sampled uniformly; linear between samples.
class EnfTrace {
 public:
  EnfTrace() = default;
  EnfTrace(double f_nominal, double sample_rate_hz, std::vector<double> deviation_hz,
           double initial_phase = 0.0, double v_effective = 0.70710678118654752);

  double f_nominal() const noexcept { return f_nominal_; }
  double sample_rate() const noexcept { return sample_rate_; }
  double initial_phase() const noexcept { return initial_phase_; }
  double v_effective() const noexcept { return v_effective_; }
  const std::vector<double>& deviation() const noexcept { return deviation_; }
  double duration() const noexcept;

  double deviation_at(double t) const;
  double frequency_at(double t) const { return f_nominal_ + deviation_at(t); }
  // 2 pi f_n t + 2 pi integral_0^t f_e + alpha. The integral of the linear
  // interpolant is exactly the trapezoid rule at the samples.
  double phase_at(double t) const;
  double voltage_at(double t) const;
  // Time average of |V| for a sinusoid: 2 sqrt(2) V0 / pi.
  double mean_abs_voltage() const noexcept;

 private:
  double f_nominal_ = 50.0;
  double sample_rate_ = 1000.0;
  double initial_phase_ = 0.0;
  double v_effective_ = 0.70710678118654752;
  std::vector<double> deviation_;
  std::vector<double> integral_;  // cumulative integral of f_e at each sample
};

inline constexpr double kTraceSampleRate = 1000.0;

// Deterministic per (grid, duration, seed). A zero step std gives f_e = 0;
// otherwise the walk starts from its stationary (uniform) distribution.
EnfTrace synthesize_enf_trace(const GridModel& grid, double duration_seconds, std::uint64_t seed);

// V(i / sample_rate) for every instant within the trace. Throws
// kInvalidConfig when sample_rate < 10 f_nominal.
std::vector<double> voltage_waveform(const EnfTrace& trace, double sample_rate_hz);

// Opaque, non-flickering rectangle moving at constant velocity and bouncing
// off the frame edges.
struct MovingObject {
  int width = 16;
  int height = 16;
  double x = 0;   // top-left at frame 0
  double y = 0;
  double vx = 1;  // pixels per frame
  double vy = 0;
  float luma = 0.1f;
};

struct ObjectRect {
  int x0, y0, x1, y1;  // half-open
  bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

ObjectRect object_rect(const MovingObject& object, std::size_t frame, int width, int height);

struct SceneModel {
  Image<float> reflectance;       // [0,1]
  Image<float> distance;          // > 0
  Image<float> ambient_fraction;  // [0,1], share of steady light
  double beta = 1.0;
  std::vector<MovingObject> objects;  // later objects are drawn on top
  double sensor_noise_std = 0.0;
  // Slow multiplicative illumination drift 1 + a sin(2 pi f t + phase).
  double drift_amplitude = 0.0;
  double drift_frequency_hz = 0.0;
  double drift_phase = 0.0;

  int width() const noexcept { return reflectance.width(); }
  int height() const noexcept { return reflectance.height(); }
  void validate() const;

  static SceneModel uniform(int width, int height, float reflectance = 0.5f,
                            float distance = 1.0f, float ambient_fraction = 0.0f);
};

// Union of the pixels any object covers during frames [0, frame_count).
Image<std::uint8_t> occupancy_mask(const SceneModel& scene, std::size_t frame_count);

enum class ShutterKind { kGlobal, kRolling };
std::string_view to_string(ShutterKind kind);
ShutterKind parse_shutter_kind(std::string_view text);

struct ShutterModel {
  ShutterKind kind = ShutterKind::kGlobal;
  double row_read_time = 0.0;  // seconds per row, rolling only
  double exposure_time = 0.002;

  // Throws kInvalidShutter.
  void validate(const VideoMeta& meta) const;
  // Rows read out over `readout_fraction` of the frame period.
  static ShutterModel rolling(const VideoMeta& meta, double exposure_time,
                              double readout_fraction = 0.9);
};

struct GroundTruth {
  EnfTrace trace;
  double flicker_alias_hz = 0;
  ClipLabel label = ClipLabel::kEnfPresent;
  std::uint64_t seed = 0;
  ShutterModel shutter;
};

// Renders frames on demand; nothing is cached, so arbitrarily long clips
// stream in constant memory.
class SimulatedSource final : public FrameSource {
 public:
  SimulatedSource(SceneModel scene, ShutterModel shutter, EnfTrace trace, VideoMeta meta,
                  ClipLabel label, std::uint64_t seed);

  const VideoMeta& meta() const override { return meta_; }
  void read_rows(std::size_t index, int row_begin, int row_end,
                 std::span<float> out) const override;

  const SceneModel& scene() const noexcept { return scene_; }
  const ShutterModel& shutter() const noexcept { return shutter_; }
  const EnfTrace& trace() const noexcept { return trace_; }
  ClipLabel label() const noexcept { return label_; }

  // Exposure-averaged |V| seen by `row` of frame `index`, before the ambient
  // mix; the constant mean for EnfAbsent.
  double row_flicker(std::size_t index, int row) const;
  double drift_factor(std::size_t index, int row) const;

 private:
  SceneModel scene_;
  ShutterModel shutter_;
  EnfTrace trace_;
  VideoMeta meta_;
  ClipLabel label_;
  std::uint64_t seed_;
  std::vector<float> steady_term_;   // r * ambient * mean|V|
  std::vector<float> flicker_gain_;  // r * (1 - ambient) * beta / d^2
};

// Standard normal noise sample for (seed, frame, pixel): an entry of a fixed
// pool of 65536 Gaussian draws selected by a counter hash.
double sensor_noise_sample(std::uint64_t seed, std::uint64_t frame, std::uint64_t pixel);

struct SimulatedClip {
  std::shared_ptr<const SimulatedSource> source;
  GroundTruth truth;
};

// The trace covers the clip plus one second for shutter offsets.
SimulatedClip simulate(const SceneModel& scene, const ShutterModel& shutter, const GridModel& grid,
                       const VideoMeta& meta, ClipLabel label, std::uint64_t seed);

// Materialized variant.
std::pair<FrameSequence, GroundTruth> render_video(const SceneModel& scene,
                                                   const ShutterModel& shutter,
                                                   const GridModel& grid, const VideoMeta& meta,
                                                   ClipLabel label, std::uint64_t seed);

// Randomized scene recipe used for test corpora: Voronoi patches of varying
// reflectance lit by an overhead point lamp, plus moving mattes.
struct CorpusClipSpec {
  int width = 320;
  int height = 240;
  Rational frame_rate{30000, 1001};
  double seconds = 120.0;
  ClipLabel label = ClipLabel::kEnfPresent;
  ShutterKind shutter = ShutterKind::kGlobal;
  double exposure_time = 0.002;
  double f_nominal = 50.0;
  double frequency_step_std_hz = 0.01;
  double max_deviation_hz = 0.05;
  double noise_std = 0.01;
  double ambient_fraction = 0.98;
  int patches = 48;
  // Share of patches lit only by steady light (positives only).
  double steady_patch_fraction = 0.0;
  int max_objects = 3;
  double max_object_coverage = 0.3;  // of the frame, over the whole path
  double max_drift_amplitude = 0.02;  // negatives only
  double max_drift_frequency_hz = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
  KeyValues to_key_values() const;  // keys prefixed "sim."
  void apply(const KeyValues& values);
};

struct SimulationSetup {
  SceneModel scene;
  ShutterModel shutter;
  GridModel grid;
  VideoMeta meta;
  ClipLabel label = ClipLabel::kEnfPresent;
  std::uint64_t seed = 0;
};

SimulationSetup make_corpus_clip(const CorpusClipSpec& spec);
inline SimulatedClip simulate(const SimulationSetup& s) {
  return simulate(s.scene, s.shutter, s.grid, s.meta, s.label, s.seed);
}

// CSV t_s,freq_hz at the trace rate.
void write_trace_csv(const EnfTrace& trace, const std::filesystem::path& path);
// {label, f_nominal, alias_hz, enf_trace_file, seed, shutter, ...}
void write_ground_truth(const GroundTruth& truth, const VideoMeta& meta,
                        const std::string& enf_trace_file, const std::filesystem::path& path);

}  // namespace enfpd
