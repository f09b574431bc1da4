#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "enfpd/detect.hpp"
#include "enfpd/enf.hpp"
#include "enfpd/error.hpp"
#include "enfpd/eval.hpp"
#include "enfpd/ingest.hpp"
#include "enfpd/pipeline.hpp"
#include "enfpd/sim.hpp"
#include "enfpd/slic.hpp"

namespace py = pybind11;
using namespace enfpd;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

PipelineConfig make_config(const std::map<std::string, std::string>& overrides) {
  PipelineConfig config;
  KeyValues kv;
  for (const auto& [k, v] : overrides) kv.set(k, v);
  config.apply(kv);
  config.validate();
  return config;
}

// (frames, height, width) float32 in [0,1].
FrameSequence sequence_from_array(const FloatArray& frames, const std::string& fps) {
  if (frames.ndim() != 3) throw py::value_error("frames must have shape (n, height, width)");
  VideoMeta meta;
  meta.frame_count = static_cast<std::size_t>(frames.shape(0));
  meta.height = static_cast<int>(frames.shape(1));
  meta.width = static_cast<int>(frames.shape(2));
  meta.frame_rate = parse_rational(fps);
  std::vector<float> data(frames.data(), frames.data() + frames.size());
  return FrameSequence(meta, std::move(data));
}

py::array_t<float> to_array(const FrameSource& source) {
  const auto& m = source.meta();
  py::array_t<float> out({static_cast<py::ssize_t>(m.frame_count), static_cast<py::ssize_t>(m.height),
                          static_cast<py::ssize_t>(m.width)});
  auto* dst = out.mutable_data();
  for (std::size_t n = 0; n < m.frame_count; ++n) {
    source.read_frame(n, {dst + n * m.pixel_count(), m.pixel_count()});
  }
  return out;
}

py::dict report_dict(const DetectionReport& report) {
  return py::module_::import("json").attr("loads")(to_json(report));
}

}  // namespace

PYBIND11_MODULE(_enfpd, m) {
  m.doc() = "ENF presence detection in video";

  static py::exception<Error> error_type(m, "EnfpdError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("alias_frequency", &alias_frequency, py::arg("tone_hz"), py::arg("sample_rate_hz"));
  m.def("flicker_alias_frequency", &flicker_alias_frequency, py::arg("nominal_grid_hz"),
        py::arg("frame_rate"));

  m.def("pearson", [](const DoubleArray& a, const DoubleArray& b) {
    return pearson({a.data(), static_cast<std::size_t>(a.size())}, {b.data(), static_cast<std::size_t>(b.size())});
  }, py::arg("a"), py::arg("b"), "Pearson correlation; None when either input is constant.");

  m.def("roc_auc", [](const DoubleArray& scores, const std::vector<int>& labels) {
    std::vector<ClipLabel> l;
    for (int v : labels) l.push_back(v ? ClipLabel::kEnfPresent : ClipLabel::kEnfAbsent);
    const auto curve = roc_auc({scores.data(), static_cast<std::size_t>(scores.size())}, l);
    std::vector<std::tuple<double, double, double>> points;
    for (const auto& p : curve.points) points.emplace_back(p.fpr, p.tpr, p.threshold);
    return py::make_tuple(curve.auc, points);
  }, py::arg("scores"), py::arg("labels"), "Returns (auc, [(fpr, tpr, threshold), ...]).");

  m.def("stft_enf_estimate", [](const DoubleArray& series, const std::string& fps,
                                 double band_center_hz, double band_halfwidth_hz,
                                 double window_seconds, double hop_seconds) {
    IntensitySeries s{std::vector<double>(series.data(), series.data() + series.size()), -1};
    VideoMeta meta;
    meta.width = meta.height = 1;
    meta.frame_rate = parse_rational(fps);
    meta.frame_count = s.values.size();
    StftConfig cfg;
    cfg.band_center_hz = band_center_hz;
    cfg.band_halfwidth_hz = band_halfwidth_hz;
    cfg.window_seconds = window_seconds;
    cfg.hop_seconds = hop_seconds;
    return stft_enf_estimate(s, meta, cfg).values;
  }, py::arg("series"), py::arg("fps") = "30000/1001", py::arg("band_center_hz") = 10.09,
     py::arg("band_halfwidth_hz") = 0.5, py::arg("window_seconds") = 20.0, py::arg("hop_seconds") = 1.0);

  m.def("segment_slic", [](const FloatArray& luma, int superpixels, double compactness) {
    if (luma.ndim() != 2) throw py::value_error("luma must be 2-D");
    const int h = static_cast<int>(luma.shape(0)), w = static_cast<int>(luma.shape(1));
    Image<float> img(w, h, std::vector<float>(luma.data(), luma.data() + luma.size()));
    SlicConfig cfg;
    cfg.target_superpixels = superpixels;
    cfg.compactness = compactness;
    const auto map = segment_slic(img, cfg);
    py::array_t<std::int32_t> out({h, w});
    std::memcpy(out.mutable_data(), map.labels.pixels().data(), map.labels.pixel_count() * sizeof(std::int32_t));
    return out;
  }, py::arg("luma"), py::arg("superpixels") = 48, py::arg("compactness") = 10.0 / 255.0);

  m.def("load_video", [](const std::string& path, std::optional<std::size_t> max_frames) {
    LoadOptions options;
    options.max_frames = max_frames;
    const auto source = open_frame_source(path, guess_ingest_format(path), options);
    return to_array(*source);
  }, py::arg("path"), py::arg("max_frames") = py::none(), "Luma frames as (n, height, width) float32.");

  m.def("simulate", [](int width, int height, double seconds, const std::string& label,
                       const std::string& shutter, double noise_std, std::uint64_t seed) {
    CorpusClipSpec spec;
    spec.width = width;
    spec.height = height;
    spec.seconds = seconds;
    spec.label = parse_clip_label(label);
    spec.shutter = parse_shutter_kind(shutter);
    spec.noise_std = noise_std;
    spec.seed = seed;
    const auto clip = simulate(make_corpus_clip(spec));
    return py::make_tuple(to_array(*clip.source), clip.truth.flicker_alias_hz);
  }, py::arg("width") = 64, py::arg("height") = 48, py::arg("seconds") = 30.0,
     py::arg("label") = "present", py::arg("shutter") = "global", py::arg("noise_std") = 0.01,
     py::arg("seed") = 1, "Returns (frames, alias_hz).");

  m.def("detect_frames", [](const FloatArray& frames, const std::string& fps,
                            const std::map<std::string, std::string>& config) {
    const auto seq = sequence_from_array(frames, fps);
    const auto cfg = make_config(config);
    DetectionReport report;
    {
      py::gil_scoped_release release;
      report = run_detection(seq, cfg);
    }
    return report_dict(report);
  }, py::arg("frames"), py::arg("fps") = "30000/1001", py::arg("config") = std::map<std::string, std::string>{});

  m.def("detect_file", [](const std::string& path, const std::map<std::string, std::string>& config) {
    const auto source = open_frame_source(path, guess_ingest_format(path));
    return report_dict(run_detection(*source, make_config(config)));
  }, py::arg("path"), py::arg("config") = std::map<std::string, std::string>{});

  m.def("default_config", [] { return PipelineConfig{}.to_key_values().entries(); });
}
