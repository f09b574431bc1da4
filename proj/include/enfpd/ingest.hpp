#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enfpd/image.hpp"

namespace enfpd {

struct Rational {
  std::int64_t num = 30000;
  std::int64_t den = 1001;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

// Parses "30000:1001", "30000/1001", "25" or "29.97" (decimal is converted
// to a /1000 rational).
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);

struct VideoMeta {
  int width = 0;
  int height = 0;
  Rational frame_rate;
  std::size_t frame_count = 0;
  int bit_depth = 8;

  double fps() const noexcept { return frame_rate.value(); }
  double duration_seconds() const noexcept { return static_cast<double>(frame_count) / fps(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  // Throws kMalformedHeader when an invariant is violated.
  void validate() const;

  friend bool operator==(const VideoMeta&, const VideoMeta&) = default;
};

struct Frame {
  Image<float> luma;
  std::size_t index = 0;
};

// Random-access luma frames normalized to [0,1]. Implementations are
// immutable after construction and `read_rows` is safe to call concurrently.
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  virtual const VideoMeta& meta() const = 0;

  // Copies rows [row_begin, row_end) of frame `index` into `out`, row-major.
  // `out.size()` must be (row_end - row_begin) * width.
  virtual void read_rows(std::size_t index, int row_begin, int row_end,
                         std::span<float> out) const = 0;

  void read_frame(std::size_t index, std::span<float> out) const {
    read_rows(index, 0, meta().height, out);
  }
  Frame frame(std::size_t index) const;
};

// Fully decoded in-memory sequence. Copies share the sample buffer.
class FrameSequence final : public FrameSource {
 public:
  FrameSequence() = default;
  // `samples` holds frame_count frames of width*height luma values each.
  FrameSequence(VideoMeta meta, std::vector<float> samples);

  // Materializes every frame of `source`.
  static FrameSequence from_source(const FrameSource& source);

  const VideoMeta& meta() const override { return meta_; }
  std::size_t frame_count() const noexcept { return meta_.frame_count; }
  void read_rows(std::size_t index, int row_begin, int row_end,
                 std::span<float> out) const override;

  std::span<const float> frame_data(std::size_t index) const;
  float at(int x, int y, std::size_t index) const {
    return frame_data(index)[static_cast<std::size_t>(y) * meta_.width + x];
  }

 private:
  VideoMeta meta_;
  std::shared_ptr<const std::vector<float>> samples_;
};

// Exposes the first `frame_count` frames of another source. The wrapped
// source must outlive the view.
class TruncatedSource final : public FrameSource {
 public:
  TruncatedSource(const FrameSource& inner, std::size_t frame_count);

  const VideoMeta& meta() const override { return meta_; }
  void read_rows(std::size_t index, int row_begin, int row_end,
                 std::span<float> out) const override;

 private:
  const FrameSource& inner_;
  VideoMeta meta_;
};

enum class IngestFormat { kY4m, kPgmSequence, kRawPlanar };

std::string_view to_string(IngestFormat format);
// Accepts "y4m", "pgm", "pgm_sequence", "raw", "raw_planar" (any case).
IngestFormat parse_ingest_format(std::string_view text);
// Directory -> PGM sequence, *.y4m -> Y4M, anything else -> raw planar.
IngestFormat guess_ingest_format(const std::filesystem::path& path);

struct LoadOptions {
  // Used for PGM sequences that carry no `sequence.meta` descriptor.
  Rational default_frame_rate{30000, 1001};
  // Keep at most this many leading frames.
  std::optional<std::size_t> max_frames;
};

// Decodes the whole file into memory.
//   Y4M:          YUV4MPEG2 stream; only the luma plane is kept.
//   PGM_SEQUENCE: directory of P5 (or P6, converted with to_luminance) files
//                 in lexicographic order; optional `sequence.meta` descriptor.
//   RAW_PLANAR:   headerless planes with a `<path>.meta` key=value descriptor
//                 {width, height, fps_num, fps_den, bit_depth, frame_count,
//                 channels}; channels=3 means planar R,G,B per frame.
FrameSequence load_frame_sequence(const std::filesystem::path& path, IngestFormat format,
                                  const LoadOptions& options = {});

// Same formats, decoded lazily from disk on each read.
std::unique_ptr<FrameSource> open_frame_source(const std::filesystem::path& path,
                                               IngestFormat format,
                                               const LoadOptions& options = {});

struct LumaWeights {
  double r = 0.299;
  double g = 0.587;
  double b = 0.114;
};

inline constexpr LumaWeights kBt601{};

constexpr double to_luminance(double r, double g, double b, const LumaWeights& w = kBt601) {
  return w.r * r + w.g * g + w.b * b;
}

// Middle frame, 0-based: floor(N/2). Throws kEmptySequence for N = 0.
std::size_t representative_frame_index(std::size_t frame_count);

// --- writers ---------------------------------------------------------------

// Writes frame_0000000.pgm ... plus a `sequence.meta` descriptor.
void write_pgm_sequence(const FrameSource& source, const std::filesystem::path& dir,
                        int bit_depth = 8);
// 8-bit C420jpeg stream with neutral chroma.
void write_y4m(const FrameSource& source, const std::filesystem::path& path);
// Raw luma planes plus `<path>.meta`.
void write_raw_planar(const FrameSource& source, const std::filesystem::path& path,
                      int bit_depth = 8);

// Single images. Values are clamped to [0,1] and scaled to maxval.
void write_pgm(const Image<float>& image, const std::filesystem::path& path, int maxval = 255);
void write_pgm16(const Image<std::uint16_t>& image, const std::filesystem::path& path);
void write_ppm(const Image<float>& r, const Image<float>& g, const Image<float>& b,
               const std::filesystem::path& path);
void write_pbm(const Image<std::uint8_t>& mask, const std::filesystem::path& path);

std::uint32_t max_sample_value(int bit_depth);

}  // namespace enfpd
