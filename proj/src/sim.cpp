#include "enfpd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "enfpd/enf.hpp"
#include "enfpd/error.hpp"

namespace enfpd {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kExposureNodes = 16;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Noise is drawn from a fixed pool of standard normal samples (Box-Muller,
// standardized to mean 0 and unit variance); a hash of (seed, frame, pixel)
// picks the entry. Each 64-bit hash yields four 16-bit indices.
constexpr std::size_t kNoisePool = 1u << 16;

const std::vector<float>& noise_pool() {
  static const std::vector<float> pool = [] {
    std::vector<double> v(kNoisePool);
    for (std::size_t i = 0; i < kNoisePool; i += 2) {
      const std::uint64_t h = splitmix64(0xA5A5A5A5ull + i);
      const double u1 = (static_cast<double>(h >> 32) + 0.5) * 0x1p-32;
      const double u2 = static_cast<double>(h & 0xFFFFFFFFull) * 0x1p-32;
      const double r = std::sqrt(-2.0 * std::log(u1));
      v[i] = r * std::cos(2.0 * kPi * u2);
      v[i + 1] = r * std::sin(2.0 * kPi * u2);
    }
    double mean = 0, sq = 0;
    for (double x : v) mean += x;
    mean /= kNoisePool;
    for (double x : v) sq += (x - mean) * (x - mean);
    const double sd = std::sqrt(sq / kNoisePool);
    std::vector<float> out(kNoisePool);
    for (std::size_t i = 0; i < kNoisePool; ++i) out[i] = static_cast<float>((v[i] - mean) / sd);
    return out;
  }();
  return pool;
}

std::uint64_t noise_hash(std::uint64_t seed, std::uint64_t frame, std::uint64_t quad) {
  return splitmix64(seed ^ splitmix64(frame * 0xD1B54A32D192ED03ull + quad));
}

// Triangle-wave position in [0, span].
double bounce(double p, double span) {
  if (span <= 0) return 0;
  double m = std::fmod(p, 2.0 * span);
  if (m < 0) m += 2.0 * span;
  return m <= span ? m : 2.0 * span - m;
}

void require(bool ok, ErrorCode code, const char* what) {
  if (!ok) throw Error(code, what);
}

}  // namespace

void GridModel::validate() const {
  require(f_nominal > 0, ErrorCode::kInvalidConfig, "f_nominal must be positive");
  require(inertia_h > 0, ErrorCode::kInvalidConfig, "inertia_h must be positive");
  require(imbalance_step_std >= 0, ErrorCode::kInvalidConfig, "imbalance step std must be >= 0");
  require(max_deviation_hz >= 0 && max_deviation_hz <= 0.1, ErrorCode::kInvalidConfig,
          "max_deviation_hz must lie in [0, 0.1]");
  require(v_effective > 0, ErrorCode::kInvalidConfig, "v_effective must be positive");
}

EnfTrace::EnfTrace(double f_nominal, double sample_rate_hz, std::vector<double> deviation_hz,
                   double initial_phase, double v_effective)
    : f_nominal_(f_nominal),
      sample_rate_(sample_rate_hz),
      initial_phase_(initial_phase),
      v_effective_(v_effective),
      deviation_(std::move(deviation_hz)) {
  require(sample_rate_ > 0, ErrorCode::kInvalidConfig, "trace sample rate must be positive");
  require(!deviation_.empty(), ErrorCode::kInvalidConfig, "trace needs at least one sample");
  integral_.resize(deviation_.size());
  integral_[0] = 0;
  const double dt = 1.0 / sample_rate_;
  for (std::size_t i = 1; i < deviation_.size(); ++i) {
    integral_[i] = integral_[i - 1] + 0.5 * dt * (deviation_[i - 1] + deviation_[i]);
  }
}

double EnfTrace::duration() const noexcept {
  return deviation_.empty() ? 0.0 : static_cast<double>(deviation_.size() - 1) / sample_rate_;
}

double EnfTrace::deviation_at(double t) const {
  const double pos = t * sample_rate_;
  if (pos <= 0) return deviation_.front();
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= deviation_.size()) return deviation_.back();
  const double frac = pos - static_cast<double>(i);
  return deviation_[i] + frac * (deviation_[i + 1] - deviation_[i]);
}

double EnfTrace::phase_at(double t) const {
  double integral;
  const double pos = t * sample_rate_;
  if (pos <= 0) {
    integral = deviation_.front() * t;
  } else if (static_cast<std::size_t>(pos) + 1 >= deviation_.size()) {
    integral = integral_.back() + deviation_.back() * (t - duration());
  } else {
    const auto i = static_cast<std::size_t>(pos);
    const double tau = t - static_cast<double>(i) / sample_rate_;
    const double slope = (deviation_[i + 1] - deviation_[i]) * sample_rate_;
    integral = integral_[i] + deviation_[i] * tau + 0.5 * slope * tau * tau;
  }
  return 2.0 * kPi * (f_nominal_ * t + integral) + initial_phase_;
}

double EnfTrace::voltage_at(double t) const {
  return std::numbers::sqrt2 * v_effective_ * std::cos(phase_at(t));
}

double EnfTrace::mean_abs_voltage() const noexcept {
  return 2.0 * std::numbers::sqrt2 * v_effective_ / kPi;
}

EnfTrace synthesize_enf_trace(const GridModel& grid, double duration_seconds, std::uint64_t seed) {
  grid.validate();
  require(duration_seconds > 0, ErrorCode::kInvalidConfig, "duration must be positive");
  const double rate = kTraceSampleRate;
  const auto n = static_cast<std::size_t>(std::floor(duration_seconds * rate + 1e-9)) + 1;
  std::vector<double> dev(n, 0.0);

  // Walk on the per-unit imbalance, reflected at the bound implied by
  // max_deviation_hz.
  const double scale = grid.f_nominal / (2.0 * grid.inertia_h);
  const double bound = grid.max_deviation_hz / scale;
  const double step = grid.imbalance_step_std * std::sqrt(1.0 / rate);
  if (step > 0 && bound > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> start(-bound, bound);
    std::normal_distribution<double> normal(0.0, step);
    double p = start(rng);
    for (std::size_t i = 0; i < n; ++i) {
      dev[i] = scale * p;
      p += normal(rng);
      while (p > bound || p < -bound) p = p > bound ? 2 * bound - p : -2 * bound - p;
    }
  }
  return EnfTrace(grid.f_nominal, rate, std::move(dev), grid.initial_phase, grid.v_effective);
}

std::vector<double> voltage_waveform(const EnfTrace& trace, double sample_rate_hz) {
  require(sample_rate_hz >= 10.0 * trace.f_nominal(), ErrorCode::kInvalidConfig,
          "voltage sample rate must be at least 10x the nominal frequency");
  const auto n = static_cast<std::size_t>(std::floor(trace.duration() * sample_rate_hz + 1e-9)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = trace.voltage_at(static_cast<double>(i) / sample_rate_hz);
  return v;
}

ObjectRect object_rect(const MovingObject& o, std::size_t frame, int width, int height) {
  const double n = static_cast<double>(frame);
  const int x = static_cast<int>(std::floor(bounce(o.x + o.vx * n, width - o.width)));
  const int y = static_cast<int>(std::floor(bounce(o.y + o.vy * n, height - o.height)));
  return {std::max(x, 0), std::max(y, 0), std::min(x + o.width, width), std::min(y + o.height, height)};
}

void SceneModel::validate() const {
  const int w = width(), h = height();
  require(w > 0 && h > 0, ErrorCode::kInvalidConfig, "scene must be non-empty");
  require(distance.width() == w && distance.height() == h && ambient_fraction.width() == w &&
              ambient_fraction.height() == h,
          ErrorCode::kInvalidConfig, "scene maps differ in size");
  for (auto r : reflectance.pixels()) {
    require(r >= 0 && r <= 1, ErrorCode::kInvalidConfig, "reflectance outside [0,1]");
  }
  for (auto d : distance.pixels()) require(d > 0, ErrorCode::kInvalidConfig, "distance must be > 0");
  for (auto a : ambient_fraction.pixels()) {
    require(a >= 0 && a <= 1, ErrorCode::kInvalidConfig, "ambient fraction outside [0,1]");
  }
  require(beta > 0, ErrorCode::kInvalidConfig, "beta must be positive");
  require(sensor_noise_std >= 0, ErrorCode::kInvalidConfig, "noise std must be >= 0");
  require(drift_amplitude >= 0 && drift_amplitude < 1, ErrorCode::kInvalidConfig,
          "drift amplitude must lie in [0,1)");
  require(drift_frequency_hz >= 0 && drift_frequency_hz <= 0.2, ErrorCode::kInvalidConfig,
          "drift frequency must lie in [0, 0.2] Hz");
  for (const auto& o : objects) {
    require(o.width > 0 && o.height > 0 && o.width <= w && o.height <= h, ErrorCode::kInvalidConfig,
            "object does not fit the frame");
    require(o.luma >= 0 && o.luma <= 1, ErrorCode::kInvalidConfig, "object luma outside [0,1]");
  }
}

SceneModel SceneModel::uniform(int width, int height, float reflectance, float distance,
                               float ambient_fraction) {
  SceneModel s;
  s.reflectance = Image<float>(width, height, reflectance);
  s.distance = Image<float>(width, height, distance);
  s.ambient_fraction = Image<float>(width, height, ambient_fraction);
  return s;
}

Image<std::uint8_t> occupancy_mask(const SceneModel& scene, std::size_t frame_count) {
  Image<std::uint8_t> mask(scene.width(), scene.height(), 0);
  for (const auto& o : scene.objects) {
    for (std::size_t n = 0; n < frame_count; ++n) {
      const auto r = object_rect(o, n, scene.width(), scene.height());
      for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) mask(x, y) = 1;
      }
    }
  }
  return mask;
}

std::string_view to_string(ShutterKind kind) {
  return kind == ShutterKind::kGlobal ? "Global" : "Rolling";
}

ShutterKind parse_shutter_kind(std::string_view text) {
  if (text == "Global" || text == "global") return ShutterKind::kGlobal;
  if (text == "Rolling" || text == "rolling") return ShutterKind::kRolling;
  throw Error(ErrorCode::kInvalidConfig, "shutter must be global or rolling");
}

void ShutterModel::validate(const VideoMeta& meta) const {
  const double period = 1.0 / meta.fps();
  if (exposure_time < 0 || exposure_time > period * (1 + 1e-12)) {
    throw Error(ErrorCode::kInvalidShutter, "exposure time must lie in [0, 1/frame_rate]");
  }
  if (kind == ShutterKind::kRolling &&
      (row_read_time < 0 || row_read_time * meta.height > period * (1 + 1e-12))) {
    throw Error(ErrorCode::kInvalidShutter, "rolling readout exceeds the frame period");
  }
}

ShutterModel ShutterModel::rolling(const VideoMeta& meta, double exposure_time,
                                   double readout_fraction) {
  return {ShutterKind::kRolling, readout_fraction / (meta.fps() * meta.height), exposure_time};
}

double sensor_noise_sample(std::uint64_t seed, std::uint64_t frame, std::uint64_t pixel) {
  const std::uint64_t h = noise_hash(seed, frame, pixel >> 2);
  return noise_pool()[(h >> (16 * (pixel & 3))) & (kNoisePool - 1)];
}

SimulatedSource::SimulatedSource(SceneModel scene, ShutterModel shutter, EnfTrace trace,
                                 VideoMeta meta, ClipLabel label, std::uint64_t seed)
    : scene_(std::move(scene)),
      shutter_(shutter),
      trace_(std::move(trace)),
      meta_(meta),
      label_(label),
      seed_(seed) {
  meta_.validate();
  scene_.validate();
  shutter_.validate(meta_);
  if (scene_.width() != meta_.width || scene_.height() != meta_.height) {
    throw Error(ErrorCode::kInvalidConfig, "scene size differs from the video size");
  }
  const double mean_v = trace_.mean_abs_voltage();
  const std::size_t n = meta_.pixel_count();
  steady_term_.resize(n);
  flicker_gain_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = scene_.reflectance[i];
    const double a = scene_.ambient_fraction[i];
    const double d = scene_.distance[i];
    steady_term_[i] = static_cast<float>(r * a * mean_v);
    flicker_gain_[i] = static_cast<float>(r * (1.0 - a) * scene_.beta / (d * d));
  }
}

double SimulatedSource::row_flicker(std::size_t index, int row) const {
  if (label_ == ClipLabel::kEnfAbsent) return trace_.mean_abs_voltage();
  double t = static_cast<double>(index) / meta_.fps();
  if (shutter_.kind == ShutterKind::kRolling) t += row * shutter_.row_read_time;
  const double e = shutter_.exposure_time;
  if (e <= 0) return std::abs(trace_.voltage_at(t));
  double sum = 0;
  for (int k = 0; k < kExposureNodes; ++k) {
    sum += std::abs(trace_.voltage_at(t + (k + 0.5) * e / kExposureNodes));
  }
  return sum / kExposureNodes;
}

double SimulatedSource::drift_factor(std::size_t index, int row) const {
  if (scene_.drift_amplitude == 0) return 1.0;
  double t = static_cast<double>(index) / meta_.fps() + 0.5 * shutter_.exposure_time;
  if (shutter_.kind == ShutterKind::kRolling) t += row * shutter_.row_read_time;
  return 1.0 + scene_.drift_amplitude *
                   std::sin(2.0 * kPi * scene_.drift_frequency_hz * t + scene_.drift_phase);
}

void SimulatedSource::read_rows(std::size_t index, int row_begin, int row_end,
                                std::span<float> out) const {
  const int w = meta_.width;
  if (index >= meta_.frame_count || row_begin < 0 || row_end > meta_.height || row_begin > row_end ||
      out.size() != static_cast<std::size_t>(row_end - row_begin) * w) {
    throw Error(ErrorCode::kInvalidConfig, "frame read out of range");
  }
  std::vector<ObjectRect> rects;
  for (const auto& o : scene_.objects) rects.push_back(object_rect(o, index, w, meta_.height));
  const double sigma = scene_.sensor_noise_std;
  const auto& pool = noise_pool();

  for (int y = row_begin; y < row_end; ++y) {
    const auto g = static_cast<float>(row_flicker(index, y));
    const auto s = static_cast<float>(drift_factor(index, y));
    const std::size_t base = static_cast<std::size_t>(y) * w;
    float* dst = out.data() + static_cast<std::size_t>(y - row_begin) * w;
    for (int x = 0; x < w; ++x) dst[x] = (steady_term_[base + x] + flicker_gain_[base + x] * g) * s;
    for (std::size_t k = 0; k < rects.size(); ++k) {
      const auto& r = rects[k];
      if (y < r.y0 || y >= r.y1) continue;
      std::fill(dst + r.x0, dst + r.x1, scene_.objects[k].luma);
    }
    if (sigma > 0) {
      // Keyed by absolute pixel index so any row band reproduces it.
      const auto sd = static_cast<float>(sigma);
      std::size_t i = base;
      const std::size_t end = base + static_cast<std::size_t>(w);
      for (; i < end && (i & 3) != 0; ++i) dst[i - base] += sd * static_cast<float>(sensor_noise_sample(seed_, index, i));
      for (; i + 4 <= end; i += 4) {
        std::uint64_t h = noise_hash(seed_, index, i >> 2);
        for (int k = 0; k < 4; ++k, h >>= 16) dst[i - base + k] += sd * pool[h & (kNoisePool - 1)];
      }
      for (; i < end; ++i) dst[i - base] += sd * static_cast<float>(sensor_noise_sample(seed_, index, i));
    }
    for (int i = 0; i < w; ++i) dst[i] = std::clamp(dst[i], 0.0f, 1.0f);
  }
}

SimulatedClip simulate(const SceneModel& scene, const ShutterModel& shutter, const GridModel& grid,
                       const VideoMeta& meta, ClipLabel label, std::uint64_t seed) {
  meta.validate();
  shutter.validate(meta);
  EnfTrace trace = synthesize_enf_trace(grid, meta.duration_seconds() + 1.0, splitmix64(seed));
  GroundTruth truth;
  truth.trace = trace;
  truth.flicker_alias_hz = flicker_alias_frequency(grid.f_nominal, meta.fps());
  truth.label = label;
  truth.seed = seed;
  truth.shutter = shutter;
  auto source = std::make_shared<const SimulatedSource>(scene, shutter, std::move(trace), meta, label,
                                                        splitmix64(seed + 1));
  return {std::move(source), std::move(truth)};
}

std::pair<FrameSequence, GroundTruth> render_video(const SceneModel& scene,
                                                   const ShutterModel& shutter,
                                                   const GridModel& grid, const VideoMeta& meta,
                                                   ClipLabel label, std::uint64_t seed) {
  auto clip = simulate(scene, shutter, grid, meta, label, seed);
  return {FrameSequence::from_source(*clip.source), std::move(clip.truth)};
}

// --- corpus recipe -----------------------------------------------------------

void CorpusClipSpec::validate() const {
  require(width >= 8 && height >= 8, ErrorCode::kInvalidConfig, "clip must be at least 8x8");
  require(seconds > 0, ErrorCode::kInvalidConfig, "seconds must be positive");
  require(frame_rate.num > 0 && frame_rate.den > 0, ErrorCode::kInvalidConfig, "bad frame rate");
  require(noise_std >= 0, ErrorCode::kInvalidConfig, "noise_std must be >= 0");
  require(ambient_fraction >= 0 && ambient_fraction <= 1, ErrorCode::kInvalidConfig,
          "ambient_fraction must lie in [0,1]");
  require(patches >= 1, ErrorCode::kInvalidConfig, "patches must be >= 1");
  require(steady_patch_fraction >= 0 && steady_patch_fraction <= 1, ErrorCode::kInvalidConfig,
          "steady_patch_fraction must lie in [0,1]");
  require(max_objects >= 0, ErrorCode::kInvalidConfig, "max_objects must be >= 0");
  require(max_object_coverage >= 0 && max_object_coverage <= 1, ErrorCode::kInvalidConfig,
          "max_object_coverage must lie in [0,1]");
  require(max_drift_amplitude >= 0 && max_drift_amplitude < 1, ErrorCode::kInvalidConfig,
          "max_drift_amplitude must lie in [0,1)");
  require(max_drift_frequency_hz >= 0 && max_drift_frequency_hz <= 0.2, ErrorCode::kInvalidConfig,
          "max_drift_frequency_hz must lie in [0, 0.2]");
}

KeyValues CorpusClipSpec::to_key_values() const {
  KeyValues kv;
  kv.set("sim.width", std::to_string(width));
  kv.set("sim.height", std::to_string(height));
  kv.set("sim.fps", to_string(frame_rate));
  kv.set("sim.seconds", format_double(seconds));
  kv.set("sim.label", std::string(to_string(label)));
  kv.set("sim.shutter", std::string(to_string(shutter)));
  kv.set("sim.exposure_time", format_double(exposure_time));
  kv.set("sim.f_nominal", format_double(f_nominal));
  kv.set("sim.frequency_step_std_hz", format_double(frequency_step_std_hz));
  kv.set("sim.max_deviation_hz", format_double(max_deviation_hz));
  kv.set("sim.noise_std", format_double(noise_std));
  kv.set("sim.ambient_fraction", format_double(ambient_fraction));
  kv.set("sim.patches", std::to_string(patches));
  kv.set("sim.steady_patch_fraction", format_double(steady_patch_fraction));
  kv.set("sim.max_objects", std::to_string(max_objects));
  kv.set("sim.max_object_coverage", format_double(max_object_coverage));
  kv.set("sim.max_drift_amplitude", format_double(max_drift_amplitude));
  kv.set("sim.max_drift_frequency_hz", format_double(max_drift_frequency_hz));
  kv.set("sim.seed", std::to_string(seed));
  return kv;
}

void CorpusClipSpec::apply(const KeyValues& kv) {
  auto num = [&](const char* key, double& field) {
    if (auto v = kv.get(key)) field = parse_double(*v);
  };
  auto integer = [&](const char* key, int& field) {
    if (auto v = kv.get(key)) field = static_cast<int>(parse_int(*v));
  };
  integer("sim.width", width);
  integer("sim.height", height);
  if (auto v = kv.get("sim.fps")) frame_rate = parse_rational(*v);
  num("sim.seconds", seconds);
  if (auto v = kv.get("sim.label")) label = parse_clip_label(*v);
  if (auto v = kv.get("sim.shutter")) shutter = parse_shutter_kind(*v);
  num("sim.exposure_time", exposure_time);
  num("sim.f_nominal", f_nominal);
  num("sim.frequency_step_std_hz", frequency_step_std_hz);
  num("sim.max_deviation_hz", max_deviation_hz);
  num("sim.noise_std", noise_std);
  num("sim.ambient_fraction", ambient_fraction);
  integer("sim.patches", patches);
  num("sim.steady_patch_fraction", steady_patch_fraction);
  integer("sim.max_objects", max_objects);
  num("sim.max_object_coverage", max_object_coverage);
  num("sim.max_drift_amplitude", max_drift_amplitude);
  num("sim.max_drift_frequency_hz", max_drift_frequency_hz);
  if (auto v = kv.get("sim.seed")) seed = static_cast<std::uint64_t>(parse_int(*v));
}

SimulationSetup make_corpus_clip(const CorpusClipSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(splitmix64(spec.seed ^ 0x5EED5EED5EEDull));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const int w = spec.width, h = spec.height;

  SimulationSetup s;
  s.label = spec.label;
  s.seed = spec.seed;
  s.meta.width = w;
  s.meta.height = h;
  s.meta.frame_rate = spec.frame_rate;
  s.meta.frame_count = static_cast<std::size_t>(std::ceil(spec.seconds * spec.frame_rate.value() - 1e-9));
  s.meta.bit_depth = 8;

  s.grid.f_nominal = spec.f_nominal;
  s.grid.max_deviation_hz = spec.max_deviation_hz;
  s.grid.set_frequency_step_std_hz(spec.frequency_step_std_hz);
  s.grid.initial_phase = uniform(0, 2 * kPi);

  s.shutter = spec.shutter == ShutterKind::kRolling ? ShutterModel::rolling(s.meta, spec.exposure_time)
                                                    : ShutterModel{ShutterKind::kGlobal, 0.0, spec.exposure_time};

  // Voronoi patches.
  struct Site { double x, y; float r, ambient; };
  std::vector<Site> sites(static_cast<std::size_t>(spec.patches));
  for (auto& site : sites) {
    site = {uniform(0, w), uniform(0, h), static_cast<float>(uniform(0.3, 0.8)),
            static_cast<float>(spec.ambient_fraction)};
  }
  if (spec.label == ClipLabel::kEnfPresent && spec.steady_patch_fraction > 0) {
    std::vector<std::size_t> order(sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const auto k = static_cast<std::size_t>(std::lround(spec.steady_patch_fraction * sites.size()));
    for (std::size_t i = 0; i < k; ++i) sites[order[i]].ambient = 1.0f;
  }

  // Overhead lamp; distances in meters on a 2 m wide scene.
  const double pitch = 2.0 / std::max(w, h);
  const double lx = uniform(0, w), ly = uniform(0, h);
  const double lamp_height = 0.6 * std::max(w, h);
  s.scene = SceneModel::uniform(w, h);
  double d_min = 1e300;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t k = 0; k < sites.size(); ++k) {
        const double dx = x - sites[k].x, dy = y - sites[k].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d) best_d = d2, best = k;
      }
      s.scene.reflectance(x, y) = sites[best].r;
      s.scene.ambient_fraction(x, y) = sites[best].ambient;
      const double dx = x - lx, dy = y - ly;
      const double d = pitch * std::sqrt(lamp_height * lamp_height + dx * dx + dy * dy);
      s.scene.distance(x, y) = static_cast<float>(d);
      d_min = std::min(d_min, d);
    }
  }
  s.scene.beta = d_min * d_min;
  s.scene.sensor_noise_std = spec.noise_std;

  // Each object sweeps a horizontal or vertical band; the bands together stay
  // within the coverage budget.
  if (spec.max_objects > 0 && spec.max_object_coverage > 0) {
    const int count = std::uniform_int_distribution<int>(1, spec.max_objects)(rng);
    const double share = spec.max_object_coverage / count;
    for (int k = 0; k < count; ++k) {
      MovingObject o;
      const bool horizontal = uniform(0, 1) < 0.5;
      const double speed = uniform(0.5, 2.0) * (uniform(0, 1) < 0.5 ? -1 : 1);
      if (horizontal) {
        o.height = std::max(1, static_cast<int>(std::floor(uniform(0.5, 1.0) * share * h)));
        o.width = std::max(1, static_cast<int>(uniform(0.1, 0.25) * w));
        o.x = uniform(0, w - o.width);
        o.y = std::floor(uniform(0, h - o.height));
        o.vx = speed;
        o.vy = 0;
      } else {
        o.width = std::max(1, static_cast<int>(std::floor(uniform(0.5, 1.0) * share * w)));
        o.height = std::max(1, static_cast<int>(uniform(0.1, 0.25) * h));
        o.x = std::floor(uniform(0, w - o.width));
        o.y = uniform(0, h - o.height);
        o.vx = 0;
        o.vy = speed;
      }
      o.luma = static_cast<float>(uniform(0, 1) < 0.5 ? uniform(0.02, 0.12) : uniform(0.7, 0.95));
      s.scene.objects.push_back(o);
    }
  }

  if (spec.label == ClipLabel::kEnfAbsent) {
    s.scene.drift_amplitude = uniform(0, spec.max_drift_amplitude);
    s.scene.drift_frequency_hz = uniform(0, spec.max_drift_frequency_hz);
    s.scene.drift_phase = uniform(0, 2 * kPi);
  }
  return s;
}

void write_trace_csv(const EnfTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "t_s,freq_hz\n";
  const auto& dev = trace.deviation();
  for (std::size_t i = 0; i < dev.size(); ++i) {
    out << format_double(static_cast<double>(i) / trace.sample_rate()) << ','
        << format_double(trace.f_nominal() + dev[i]) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

void write_ground_truth(const GroundTruth& truth, const VideoMeta& meta,
                        const std::string& enf_trace_file, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["label"] = to_string(truth.label);
  j["f_nominal"] = truth.trace.f_nominal();
  j["alias_hz"] = truth.flicker_alias_hz;
  j["enf_trace_file"] = enf_trace_file;
  j["seed"] = truth.seed;
  j["shutter"] = {{"kind", to_string(truth.shutter.kind)},
                  {"row_read_time", truth.shutter.row_read_time},
                  {"exposure_time", truth.shutter.exposure_time}};
  j["width"] = meta.width;
  j["height"] = meta.height;
  j["frame_rate"] = to_string(meta.frame_rate);
  j["frame_count"] = meta.frame_count;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace enfpd
