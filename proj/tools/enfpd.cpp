// enfpd: ENF presence detection in video.
//
// Inputs must be uncompressed: YUV4MPEG2 (.y4m), a directory of PGM/PPM
// frames, or headerless raw planes with a <file>.meta descriptor. Transcode
// compressed video first, e.g.
//   ffmpeg -i in.mp4 -pix_fmt yuv420p out.y4m

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "enfpd/detect.hpp"
#include "enfpd/error.hpp"
#include "enfpd/eval.hpp"
#include "enfpd/ingest.hpp"
#include "enfpd/parallel.hpp"
#include "enfpd/pipeline.hpp"
#include "enfpd/sim.hpp"
#include "enfpd/slic.hpp"
#include "enfpd/steady.hpp"

namespace fs = std::filesystem;
using namespace enfpd;

namespace {

constexpr int kExitPresent = 0;
constexpr int kExitAbsent = 1;
constexpr int kExitAbstain = 2;
constexpr int kExitError = 3;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<int> jobs;
};

struct InputArgs {
  std::string path;
  std::string format;  // empty = guess
  std::string fps;     // PGM sequences without a descriptor
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "key=value config file");
  cmd->add_option("--set", c.overrides, "override a config key, e.g. --set stft.window_seconds=20")
      ->allow_extra_args(false);
  cmd->add_option("-j,--jobs", c.jobs, "worker threads (default: $ENFPD_JOBS or 1)")->check(CLI::PositiveNumber);
}

void add_input(CLI::App* cmd, InputArgs& in) {
  cmd->add_option("input", in.path, "video: .y4m file, PGM directory, or raw planes")->required();
  cmd->add_option("-f,--format", in.format, "y4m | pgm | raw (default: from the path)");
  cmd->add_option("--fps", in.fps, "frame rate for PGM directories without sequence.meta");
}

PipelineConfig load_config(const Common& c) {
  PipelineConfig config;
  if (!c.config_path.empty()) config = PipelineConfig::from_file(c.config_path);
  for (const auto& o : c.overrides) config.set(o);
  config.validate();
  return config;
}

std::unique_ptr<FrameSource> open_input(const InputArgs& in, std::optional<std::size_t> max_frames = {}) {
  if (!fs::exists(in.path)) throw Error(ErrorCode::kFileNotFound, in.path);
  LoadOptions options;
  if (!in.fps.empty()) options.default_frame_rate = parse_rational(in.fps);
  options.max_frames = max_frames;
  const auto format = in.format.empty() ? guess_ingest_format(in.path) : parse_ingest_format(in.format);
  return open_frame_source(in.path, format, options);
}

int cmd_detect(const InputArgs& in, const Common& c, const std::string& debug_dir) {
  const auto config = load_config(c);
  const auto source = open_input(in);
  const auto analysis = analyze(*source, config, resolve_jobs(c.jobs));
  const auto report = score(analysis);
  if (!debug_dir.empty()) write_debug_dump(analysis, debug_dir);
  std::cout << to_json(report) << '\n';
  switch (report.verdict) {
    case Verdict::kEnfPresent: return kExitPresent;
    case Verdict::kEnfAbsent: return kExitAbsent;
    case Verdict::kAbstain: return kExitAbstain;
  }
  return kExitError;
}

void write_clip(const SimulatedClip& clip, const fs::path& out_dir, const std::string& stem,
                const std::string& format, int bit_depth) {
  fs::path video;
  if (format == "y4m") {
    video = out_dir / (stem + ".y4m");
    write_y4m(*clip.source, video);
  } else if (format == "pgm") {
    video = out_dir / stem;
    write_pgm_sequence(*clip.source, video, bit_depth);
  } else if (format == "raw") {
    video = out_dir / (stem + ".raw");
    write_raw_planar(*clip.source, video, bit_depth);
  } else {
    throw Error(ErrorCode::kInvalidConfig, "output format must be y4m, pgm or raw");
  }
  const std::string trace_file = stem + ".enf.csv";
  write_trace_csv(clip.truth.trace, out_dir / trace_file);
  write_ground_truth(clip.truth, clip.source->meta(), trace_file, out_dir / (stem + ".truth.json"));
}

struct SimFlags {
  std::optional<std::string> label, shutter, fps;
  std::optional<std::uint64_t> seed;
  std::optional<int> width, height;
  std::optional<double> seconds, noise, grid_hz;
};

// Config file, then explicit flags, then --set.
CorpusClipSpec simulation_spec(const Common& c, const SimFlags& f) {
  CorpusClipSpec spec;
  if (!c.config_path.empty()) spec.apply(KeyValues::read_file(c.config_path));
  if (f.label) spec.label = parse_clip_label(*f.label);
  if (f.shutter) spec.shutter = parse_shutter_kind(*f.shutter);
  if (f.fps) spec.frame_rate = parse_rational(*f.fps);
  if (f.seed) spec.seed = *f.seed;
  if (f.width) spec.width = *f.width;
  if (f.height) spec.height = *f.height;
  if (f.seconds) spec.seconds = *f.seconds;
  if (f.noise) spec.noise_std = *f.noise;
  if (f.grid_hz) spec.f_nominal = *f.grid_hz;
  for (const auto& o : c.overrides) spec.apply(KeyValues::parse(o));
  spec.validate();
  return spec;
}

int cmd_simulate(const CorpusClipSpec& spec, const Common& c, const std::string& out_dir,
                 const std::string& format, int bit_depth, int corpus_size) {
  fs::create_directories(out_dir);
  const auto suffix = format == "y4m" ? std::string(".y4m") : format == "raw" ? std::string(".raw") : std::string();

  if (corpus_size <= 0) {
    const auto clip = simulate(make_corpus_clip(spec));
    write_clip(clip, out_dir, "clip", format, bit_depth);
    std::cout << (fs::path(out_dir) / ("clip" + suffix)).string() << '\n';
    return 0;
  }

  // First half positive, second half negative; shutters alternate in each.
  const int positives = corpus_size / 2;
  std::vector<LabeledItem> items(static_cast<std::size_t>(corpus_size));
  parallel_for(items.size(), resolve_jobs(c.jobs), [&](std::size_t i) {
    CorpusClipSpec s = spec;
    s.label = static_cast<int>(i) < positives ? ClipLabel::kEnfPresent : ClipLabel::kEnfAbsent;
    s.shutter = i % 2 == 0 ? ShutterKind::kGlobal : ShutterKind::kRolling;
    s.seed = spec.seed * 1000003ull + i;
    char stem[32];
    std::snprintf(stem, sizeof stem, "clip_%04zu", i);
    write_clip(simulate(make_corpus_clip(s)), out_dir, stem, format, bit_depth);
    items[i] = {std::string(stem) + suffix, s.label, std::string(to_string(s.shutter))};
  });
  const auto manifest = fs::path(out_dir) / "manifest.jsonl";
  write_manifest(items, manifest);
  std::cout << manifest.string() << '\n';
  return 0;
}

int cmd_evaluate(const std::string& manifest, const Common& c, const std::string& out_dir) {
  const auto config = load_config(c);
  const auto items = read_manifest(manifest);
  const auto rows = batch_scores(items, config, resolve_jobs(c.jobs));
  write_evaluation(rows, out_dir);
  for (const auto& r : rows) {
    if (!r.error.empty()) std::cerr << r.item.path << ": " << r.error << '\n';
  }
  std::cout << summary_json(summarize(rows)) << '\n';
  return 0;
}

int cmd_segment(const InputArgs& in, const Common& c, const std::string& out_dir) {
  const auto config = load_config(c);
  const auto source = open_input(in);
  const auto meta = source->meta();
  const auto frames = clip_frame_count(meta, config.clip_seconds);
  const auto frame = source->frame(representative_frame_index(frames));
  const auto map = segment_slic(frame, config.slic);
  fs::create_directories(out_dir);
  write_label_map(map, fs::path(out_dir) / "labels.pgm");
  write_boundary_overlay(frame.luma, map, fs::path(out_dir) / "overlay.ppm");
  std::cout << map.region_count << " regions\n";
  return 0;
}

int cmd_steady(const InputArgs& in, const Common& c, const std::string& out_dir) {
  const auto config = load_config(c);
  const auto source = open_input(in);
  const TruncatedSource clip(*source, clip_frame_count(source->meta(), config.clip_seconds));
  const auto resolved = config.resolved(clip.meta().fps());
  const auto frame = clip.frame(representative_frame_index(clip.meta().frame_count));
  const auto map = segment_slic(frame, resolved.slic);
  const auto mask = compute_steady_mask(clip, resolved.steady, resolve_jobs(c.jobs));
  fs::create_directories(out_dir);
  write_steady_mask(mask, fs::path(out_dir) / "steady.pbm");
  write_region_counts_csv(map, mask, resolved.steady.tau, fs::path(out_dir) / "regions.csv");
  std::cout << mask.count() << " steady pixels\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ENF presence detection in uncompressed video (y4m, PGM frames, raw planes)"};
  app.require_subcommand(1);

  Common common;
  InputArgs input;
  std::string debug_dir, out_dir, format = "y4m", manifest;
  int bit_depth = 8, corpus_size = 0;
  SimFlags sim;

  auto* detect = app.add_subcommand("detect", "decide whether a clip carries an ENF signal");
  add_input(detect, input);
  add_common(detect, common);
  detect->add_option("--debug-dir", debug_dir, "dump ENF traces, spectrograms and masks here");

  auto* simulate_cmd = app.add_subcommand("simulate", "render a labeled synthetic clip or corpus");
  simulate_cmd->add_option("-o,--out", out_dir, "output directory")->required();
  simulate_cmd->add_option("--label", sim.label, "present | absent");
  simulate_cmd->add_option("--seed", sim.seed, "random seed");
  simulate_cmd->add_option("--shutter", sim.shutter, "global | rolling");
  simulate_cmd->add_option("--width", sim.width);
  simulate_cmd->add_option("--height", sim.height);
  simulate_cmd->add_option("--fps", sim.fps, "frame rate, e.g. 30000/1001");
  simulate_cmd->add_option("--seconds", sim.seconds);
  simulate_cmd->add_option("--noise", sim.noise, "sensor noise std (luma)");
  simulate_cmd->add_option("--grid-hz", sim.grid_hz, "nominal mains frequency");
  simulate_cmd->add_option("--format", format, "y4m | pgm | raw");
  simulate_cmd->add_option("--bit-depth", bit_depth, "8 or 16 (pgm, raw)");
  simulate_cmd->add_option("--corpus-size", corpus_size, "write N clips and a manifest.jsonl");
  add_common(simulate_cmd, common);

  auto* evaluate = app.add_subcommand("evaluate", "score a labeled corpus and compute ROC/AUC");
  evaluate->add_option("manifest", manifest, "JSON lines {path, label, sensor_tag}")->required();
  evaluate->add_option("-o,--out", out_dir, "output directory")->required();
  add_common(evaluate, common);

  auto* segment = app.add_subcommand("segment", "dump the superpixel segmentation");
  add_input(segment, input);
  add_common(segment, common);
  segment->add_option("-o,--out", out_dir, "output directory")->required();

  auto* steady = app.add_subcommand("steady-mask", "dump the steady-pixel mask");
  add_input(steady, input);
  add_common(steady, common);
  steady->add_option("-o,--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*detect) return cmd_detect(input, common, debug_dir);
    if (*simulate_cmd) {
      return cmd_simulate(simulation_spec(common, sim), common, out_dir, format, bit_depth, corpus_size);
    }
    if (*evaluate) return cmd_evaluate(manifest, common, out_dir);
    if (*segment) return cmd_segment(input, common, out_dir);
    if (*steady) return cmd_steady(input, common, out_dir);
  } catch (const Error& e) {
    std::cerr << "enfpd: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "enfpd: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
