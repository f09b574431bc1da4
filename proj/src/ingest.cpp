#include "enfpd/ingest.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "enfpd/error.hpp"
#include "enfpd/keyvalue.hpp"

namespace fs = std::filesystem;

namespace enfpd {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Read-only file descriptor with positional reads (thread-safe).
class PosixFile {
 public:
  explicit PosixFile(const fs::path& path) : path_(path.string()) {
    fd_ = ::open(path_.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd_ < 0) throw Error(ErrorCode::kFileNotFound, path_);
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::kIoError, "stat failed: " + path_);
    }
    size_ = static_cast<std::uint64_t>(st.st_size);
  }
  PosixFile(const PosixFile&) = delete;
  PosixFile& operator=(const PosixFile&) = delete;
  ~PosixFile() {
    if (fd_ >= 0) ::close(fd_);
  }

  std::uint64_t size() const noexcept { return size_; }

  // Reads up to out.size() bytes; returns the count actually read.
  std::size_t read_some(std::uint64_t offset, std::span<std::uint8_t> out) const {
    std::size_t done = 0;
    while (done < out.size()) {
      const ssize_t n = ::pread(fd_, out.data() + done, out.size() - done,
                                static_cast<off_t>(offset + done));
      if (n < 0) throw Error(ErrorCode::kIoError, "read failed: " + path_);
      if (n == 0) break;
      done += static_cast<std::size_t>(n);
    }
    return done;
  }

  void read_exact(std::uint64_t offset, std::span<std::uint8_t> out) const {
    if (read_some(offset, out) != out.size()) {
      throw Error(ErrorCode::kTruncatedStream, "unexpected end of file: " + path_);
    }
  }

 private:
  std::string path_;
  int fd_ = -1;
  std::uint64_t size_ = 0;
};

// Converts packed samples (8-bit, or 16-bit in the given byte order) to
// normalized floats.
void decode_samples(std::span<const std::uint8_t> bytes, int bytes_per_sample, bool big_endian,
                    float scale, std::span<float> out) {
  if (bytes_per_sample == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(bytes[i]) * scale;
    return;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t a = bytes[2 * i];
    const std::uint8_t b = bytes[2 * i + 1];
    const unsigned v = big_endian ? (a << 8u) | b : (b << 8u) | a;
    out[i] = static_cast<float>(v) * scale;
  }
}

int bit_depth_for_maxval(std::uint32_t maxval) {
  int bits = 1;
  while (bits < 16 && ((1u << bits) - 1u) < maxval) ++bits;
  return bits;
}

std::uint32_t quantize(float v, std::uint32_t maxval) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint32_t>(std::lround(c * maxval));
}

// ---------------------------------------------------------------------------
// Y4M

struct Y4mLayout {
  int width = 0;
  int height = 0;
  Rational rate;
  int bit_depth = 8;
  std::uint64_t chroma_samples = 0;
};

Y4mLayout parse_y4m_header(std::string_view header, const std::string& path) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kMalformedHeader, path + ": " + why);
  };
  if (header.substr(0, 10) != "YUV4MPEG2 " && header != "YUV4MPEG2") fail("missing YUV4MPEG2 signature");
  Y4mLayout layout;
  bool have_w = false, have_h = false, have_f = false;
  std::string colorspace = "420jpeg";
  std::size_t pos = 9;
  while (pos < header.size()) {
    while (pos < header.size() && header[pos] == ' ') ++pos;
    const auto end = std::min(header.find(' ', pos), header.size());
    const std::string_view tok = header.substr(pos, end - pos);
    pos = end;
    if (tok.empty()) continue;
    const std::string_view val = tok.substr(1);
    switch (tok[0]) {
      case 'W': layout.width = static_cast<int>(parse_int(val)); have_w = true; break;
      case 'H': layout.height = static_cast<int>(parse_int(val)); have_h = true; break;
      case 'F': {
        const auto colon = val.find(':');
        if (colon == std::string_view::npos) fail("bad frame rate tag");
        layout.rate = Rational{parse_int(val.substr(0, colon)), parse_int(val.substr(colon + 1))};
        have_f = true;
        break;
      }
      case 'C': colorspace = std::string(val); break;
      default: break;  // I, A, X tags do not affect the luma plane
    }
  }
  if (!have_w || !have_h || !have_f) fail("header must carry W, H and F tags");
  if (layout.width <= 0 || layout.height <= 0) fail("non-positive dimensions");
  if (layout.rate.num <= 0 || layout.rate.den <= 0) fail("non-positive frame rate");

  const auto w = static_cast<std::uint64_t>(layout.width);
  const auto h = static_cast<std::uint64_t>(layout.height);
  const auto p = colorspace.find('p');
  std::string family = colorspace;
  if (colorspace.rfind("mono", 0) == 0) {
    family = "mono";
    if (colorspace.size() > 4) layout.bit_depth = static_cast<int>(parse_int(colorspace.substr(4)));
  } else if (p != std::string::npos && p + 1 < colorspace.size() &&
             std::isdigit(static_cast<unsigned char>(colorspace[p + 1]))) {
    family = colorspace.substr(0, p);
    layout.bit_depth = static_cast<int>(parse_int(colorspace.substr(p + 1)));
  }
  if (layout.bit_depth < 8 || layout.bit_depth > 16) fail("unsupported bit depth");

  if (family.rfind("420", 0) == 0) {
    layout.chroma_samples = 2 * ((w + 1) / 2) * ((h + 1) / 2);
  } else if (family == "422") {
    layout.chroma_samples = 2 * ((w + 1) / 2) * h;
  } else if (family == "444") {
    layout.chroma_samples = 2 * w * h;
  } else if (family == "444alpha") {
    layout.chroma_samples = 3 * w * h;
  } else if (family == "411") {
    layout.chroma_samples = 2 * ((w + 3) / 4) * h;
  } else if (family == "mono") {
    layout.chroma_samples = 0;
  } else {
    fail("unsupported colorspace C" + colorspace);
  }
  return layout;
}

class Y4mSource final : public FrameSource {
 public:
  Y4mSource(const fs::path& path, const LoadOptions& options) : file_(path) {
    const std::string p = path.string();
    std::vector<std::uint8_t> buf(4096);
    const std::size_t got = file_.read_some(0, buf);
    const auto nl = std::find(buf.begin(), buf.begin() + got, '\n');
    if (nl == buf.begin() + got) throw Error(ErrorCode::kMalformedHeader, p + ": no header line");
    const std::string header(buf.begin(), nl);
    const Y4mLayout layout = parse_y4m_header(header, p);

    bytes_per_sample_ = layout.bit_depth > 8 ? 2 : 1;
    width_ = layout.width;
    scale_ = 1.0f / static_cast<float>(max_sample_value(layout.bit_depth));
    const std::uint64_t luma_bytes =
        static_cast<std::uint64_t>(layout.width) * layout.height * bytes_per_sample_;
    const std::uint64_t frame_bytes = luma_bytes + layout.chroma_samples * bytes_per_sample_;

    std::uint64_t pos = static_cast<std::uint64_t>(nl - buf.begin()) + 1;
    std::array<std::uint8_t, 256> marker{};
    const std::size_t limit = options.max_frames.value_or(SIZE_MAX);
    while (pos < file_.size() && offsets_.size() < limit) {
      const std::size_t n = file_.read_some(pos, marker);
      const std::string_view view(reinterpret_cast<const char*>(marker.data()), n);
      if (view.substr(0, 5) != "FRAME") {
        throw Error(ErrorCode::kMalformedHeader, p + ": missing FRAME marker");
      }
      const auto eol = view.find('\n');
      if (eol == std::string_view::npos) {
        throw Error(ErrorCode::kTruncatedStream, p + ": incomplete FRAME header");
      }
      const std::uint64_t data = pos + eol + 1;
      if (data + frame_bytes > file_.size()) {
        throw Error(ErrorCode::kTruncatedStream, p + ": partial frame " + std::to_string(offsets_.size()));
      }
      offsets_.push_back(data);
      pos = data + frame_bytes;
    }
    if (offsets_.empty()) throw Error(ErrorCode::kEmptySequence, p + ": no frames");

    meta_ = VideoMeta{layout.width, layout.height, layout.rate, offsets_.size(), layout.bit_depth};
    meta_.validate();
  }

  const VideoMeta& meta() const override { return meta_; }

  void read_rows(std::size_t index, int row_begin, int row_end,
                 std::span<float> out) const override {
    const std::size_t count = static_cast<std::size_t>(row_end - row_begin) * width_;
    std::vector<std::uint8_t> bytes(count * bytes_per_sample_);
    file_.read_exact(offsets_.at(index) +
                         static_cast<std::uint64_t>(row_begin) * width_ * bytes_per_sample_,
                     bytes);
    decode_samples(bytes, bytes_per_sample_, false, scale_, out.first(count));
  }

 private:
  PosixFile file_;
  VideoMeta meta_;
  int width_ = 0;
  int bytes_per_sample_ = 1;
  float scale_ = 1.0f;
  std::vector<std::uint64_t> offsets_;
};

// ---------------------------------------------------------------------------
// RAW planar

fs::path descriptor_path(const fs::path& raw) { return fs::path(raw.string() + ".meta"); }

class RawSource final : public FrameSource {
 public:
  RawSource(const fs::path& path, const LoadOptions& options) : file_(path) {
    const auto desc_path = descriptor_path(path);
    if (!fs::exists(desc_path)) {
      throw Error(ErrorCode::kFileNotFound, "missing descriptor " + desc_path.string());
    }
    const auto kv = KeyValues::read_file(desc_path);
    meta_.width = static_cast<int>(kv.require_int("width"));
    meta_.height = static_cast<int>(kv.require_int("height"));
    meta_.frame_rate = Rational{kv.require_int("fps_num"), kv.require_int("fps_den")};
    meta_.bit_depth = static_cast<int>(kv.require_int("bit_depth"));
    const auto declared = kv.require_int("frame_count");
    channels_ = kv.contains("channels") ? static_cast<int>(kv.require_int("channels")) : 1;
    if (declared < 1) throw Error(ErrorCode::kMalformedHeader, "frame_count must be >= 1");
    if (channels_ != 1 && channels_ != 3) {
      throw Error(ErrorCode::kMalformedHeader, "channels must be 1 or 3");
    }
    if (meta_.bit_depth < 1 || meta_.bit_depth > 16) {
      throw Error(ErrorCode::kMalformedHeader, "bit_depth must be in [1,16]");
    }
    meta_.frame_count = static_cast<std::size_t>(declared);
    meta_.validate();

    bytes_per_sample_ = meta_.bit_depth > 8 ? 2 : 1;
    scale_ = 1.0f / static_cast<float>(max_sample_value(meta_.bit_depth));
    plane_bytes_ = static_cast<std::uint64_t>(meta_.pixel_count()) * bytes_per_sample_;
    frame_bytes_ = plane_bytes_ * channels_;
    const std::uint64_t expected = frame_bytes_ * meta_.frame_count;
    if (file_.size() != expected) {
      throw Error(ErrorCode::kTruncatedStream,
                  path.string() + ": byte length " + std::to_string(file_.size()) +
                      " != declared " + std::to_string(expected));
    }
    if (options.max_frames) meta_.frame_count = std::min(meta_.frame_count, *options.max_frames);
  }

  const VideoMeta& meta() const override { return meta_; }

  void read_rows(std::size_t index, int row_begin, int row_end,
                 std::span<float> out) const override {
    const std::size_t count = static_cast<std::size_t>(row_end - row_begin) * meta_.width;
    const std::uint64_t row_offset =
        static_cast<std::uint64_t>(row_begin) * meta_.width * bytes_per_sample_;
    std::vector<std::uint8_t> bytes(count * bytes_per_sample_);
    const std::uint64_t base = frame_bytes_ * index;
    if (channels_ == 1) {
      file_.read_exact(base + row_offset, bytes);
      decode_samples(bytes, bytes_per_sample_, false, scale_, out.first(count));
      return;
    }
    std::vector<float> planes(3 * count);
    for (int c = 0; c < 3; ++c) {
      file_.read_exact(base + plane_bytes_ * c + row_offset, bytes);
      decode_samples(bytes, bytes_per_sample_, false, scale_,
                     std::span<float>(planes).subspan(c * count, count));
    }
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = static_cast<float>(to_luminance(planes[i], planes[count + i], planes[2 * count + i]));
    }
  }

 private:
  PosixFile file_;
  VideoMeta meta_;
  int channels_ = 1;
  int bytes_per_sample_ = 1;
  float scale_ = 1.0f;
  std::uint64_t plane_bytes_ = 0;
  std::uint64_t frame_bytes_ = 0;
};

// ---------------------------------------------------------------------------
// PGM / PPM sequence

struct PnmInfo {
  int width = 0;
  int height = 0;
  std::uint32_t maxval = 0;
  int channels = 1;
  std::uint64_t data_offset = 0;
};

PnmInfo parse_pnm_header(const PosixFile& file, const std::string& path) {
  std::array<std::uint8_t, 512> buf{};
  const std::size_t n = file.read_some(0, buf);
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kMalformedHeader, path + ": " + why);
  };
  if (n < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6')) fail("not a binary PGM/PPM");
  PnmInfo info;
  info.channels = buf[1] == '6' ? 3 : 1;
  pos = 2;
  auto next_int = [&]() -> long long {
    while (pos < n) {
      if (buf[pos] == '#') {
        while (pos < n && buf[pos] != '\n') ++pos;
      } else if (std::isspace(buf[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long long v = 0;
    std::size_t digits = 0;
    while (pos < n && std::isdigit(buf[pos])) {
      v = v * 10 + (buf[pos] - '0');
      ++pos;
      ++digits;
    }
    if (digits == 0) fail("bad header field");
    return v;
  };
  info.width = static_cast<int>(next_int());
  info.height = static_cast<int>(next_int());
  const long long maxval = next_int();
  if (pos >= n || !std::isspace(buf[pos])) fail("header not terminated");
  ++pos;
  if (info.width <= 0 || info.height <= 0) fail("non-positive dimensions");
  if (maxval < 1 || maxval > 65535) fail("maxval out of range");
  info.maxval = static_cast<std::uint32_t>(maxval);
  info.data_offset = pos;
  const std::uint64_t expected = static_cast<std::uint64_t>(info.width) * info.height *
                                 info.channels * (info.maxval > 255 ? 2 : 1);
  if (file.size() < info.data_offset + expected) {
    throw Error(ErrorCode::kTruncatedStream, path + ": pixel data shorter than header declares");
  }
  return info;
}

class PnmSequenceSource final : public FrameSource {
 public:
  PnmSequenceSource(const fs::path& dir, const LoadOptions& options) {
    if (!fs::exists(dir)) throw Error(ErrorCode::kFileNotFound, dir.string());
    if (!fs::is_directory(dir)) {
      throw Error(ErrorCode::kMalformedHeader, dir.string() + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto ext = lower(entry.path().extension().string());
      if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (options.max_frames && files.size() > *options.max_frames) files.resize(*options.max_frames);
    if (files.empty()) throw Error(ErrorCode::kEmptySequence, dir.string() + ": no PGM files");

    for (const auto& f : files) {
      auto file = std::make_unique<PosixFile>(f);
      PnmInfo info = parse_pnm_header(*file, f.string());
      if (!infos_.empty() && (info.width != infos_.front().width || info.height != infos_.front().height)) {
        throw Error(ErrorCode::kMalformedHeader, f.string() + ": dimensions differ from first frame");
      }
      infos_.push_back(info);
      files_.push_back(std::move(file));
    }

    meta_.width = infos_.front().width;
    meta_.height = infos_.front().height;
    meta_.frame_count = files_.size();
    std::uint32_t maxval = 0;
    for (const auto& i : infos_) maxval = std::max(maxval, i.maxval);
    meta_.bit_depth = bit_depth_for_maxval(maxval);
    meta_.frame_rate = options.default_frame_rate;
    if (const auto desc = dir / "sequence.meta"; fs::exists(desc)) {
      const auto kv = KeyValues::read_file(desc);
      meta_.frame_rate = Rational{kv.require_int("fps_num"), kv.require_int("fps_den")};
    }
    meta_.validate();
  }

  const VideoMeta& meta() const override { return meta_; }

  void read_rows(std::size_t index, int row_begin, int row_end,
                 std::span<float> out) const override {
    const PnmInfo& info = infos_.at(index);
    const int bps = info.maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(row_end - row_begin) * info.width;
    const std::size_t values = count * info.channels;
    std::vector<std::uint8_t> bytes(values * bps);
    files_[index]->read_exact(info.data_offset + static_cast<std::uint64_t>(row_begin) *
                                                     info.width * info.channels * bps,
                              bytes);
    const float scale = 1.0f / static_cast<float>(info.maxval);
    if (info.channels == 1) {
      decode_samples(bytes, bps, true, scale, out.first(count));
      return;
    }
    std::vector<float> rgb(values);
    decode_samples(bytes, bps, true, scale, rgb);
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = static_cast<float>(to_luminance(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]));
    }
  }

 private:
  VideoMeta meta_;
  std::vector<PnmInfo> infos_;
  std::vector<std::unique_ptr<PosixFile>> files_;
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

void append_sample(std::vector<char>& out, std::uint32_t code, int bytes, bool big_endian) {
  if (bytes == 1) {
    out.push_back(static_cast<char>(code));
  } else if (big_endian) {
    out.push_back(static_cast<char>(code >> 8));
    out.push_back(static_cast<char>(code & 0xff));
  } else {
    out.push_back(static_cast<char>(code & 0xff));
    out.push_back(static_cast<char>(code >> 8));
  }
}

void write_pgm_samples(std::span<const float> values, int width, int height, std::uint32_t maxval,
                       const fs::path& path) {
  auto out = open_output(path);
  out << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<char> data;
  data.reserve(values.size() * bytes);
  for (float v : values) append_sample(data, quantize(v, maxval), bytes, true);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------

Rational parse_rational(std::string_view text) {
  const auto sep = text.find_first_of(":/");
  Rational r;
  if (sep != std::string_view::npos) {
    r = Rational{parse_int(text.substr(0, sep)), parse_int(text.substr(sep + 1))};
  } else if (text.find('.') != std::string_view::npos) {
    r = Rational{std::llround(parse_double(text) * 1000.0), 1000};
  } else {
    r = Rational{parse_int(text), 1};
  }
  if (r.num <= 0 || r.den <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "frame rate must be positive: " + std::string(text));
  }
  return r;
}

std::string to_string(const Rational& r) { return std::to_string(r.num) + ":" + std::to_string(r.den); }

void VideoMeta::validate() const {
  if (width < 1 || height < 1) throw Error(ErrorCode::kMalformedHeader, "width and height must be >= 1");
  if (frame_count < 1) throw Error(ErrorCode::kEmptySequence, "frame_count must be >= 1");
  if (frame_rate.num <= 0 || frame_rate.den <= 0) {
    throw Error(ErrorCode::kMalformedHeader, "frame rate must be positive");
  }
  if (bit_depth < 1 || bit_depth > 16) throw Error(ErrorCode::kMalformedHeader, "bit depth out of range");
}

std::uint32_t max_sample_value(int bit_depth) { return (1u << bit_depth) - 1u; }

Frame FrameSource::frame(std::size_t index) const {
  Frame f{Image<float>(meta().width, meta().height), index};
  read_frame(index, f.luma.pixels());
  return f;
}

FrameSequence::FrameSequence(VideoMeta meta, std::vector<float> samples) : meta_(meta) {
  meta_.validate();
  if (samples.size() != meta_.pixel_count() * meta_.frame_count) {
    throw Error(ErrorCode::kTruncatedStream, "sample count does not match frame geometry");
  }
  for (float v : samples) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorCode::kMalformedHeader, "luma samples must lie in [0,1]");
    }
  }
  samples_ = std::make_shared<const std::vector<float>>(std::move(samples));
}

FrameSequence FrameSequence::from_source(const FrameSource& source) {
  const VideoMeta& meta = source.meta();
  std::vector<float> samples(meta.pixel_count() * meta.frame_count);
  for (std::size_t n = 0; n < meta.frame_count; ++n) {
    source.read_frame(n, std::span<float>(samples).subspan(n * meta.pixel_count(), meta.pixel_count()));
  }
  return FrameSequence(meta, std::move(samples));
}

std::span<const float> FrameSequence::frame_data(std::size_t index) const {
  if (index >= meta_.frame_count) throw std::out_of_range("frame index out of range");
  return std::span<const float>(*samples_).subspan(index * meta_.pixel_count(), meta_.pixel_count());
}

void FrameSequence::read_rows(std::size_t index, int row_begin, int row_end,
                              std::span<float> out) const {
  const auto data = frame_data(index);
  const std::size_t begin = static_cast<std::size_t>(row_begin) * meta_.width;
  const std::size_t count = static_cast<std::size_t>(row_end - row_begin) * meta_.width;
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(begin), count, out.begin());
}

TruncatedSource::TruncatedSource(const FrameSource& inner, std::size_t frame_count)
    : inner_(inner), meta_(inner.meta()) {
  meta_.frame_count = std::min(meta_.frame_count, frame_count);
  meta_.validate();
}

void TruncatedSource::read_rows(std::size_t index, int row_begin, int row_end,
                                std::span<float> out) const {
  if (index >= meta_.frame_count) throw std::out_of_range("frame index out of range");
  inner_.read_rows(index, row_begin, row_end, out);
}

std::string_view to_string(IngestFormat format) {
  switch (format) {
    case IngestFormat::kY4m: return "y4m";
    case IngestFormat::kPgmSequence: return "pgm";
    case IngestFormat::kRawPlanar: return "raw";
  }
  return "unknown";
}

IngestFormat parse_ingest_format(std::string_view text) {
  const std::string t = lower(text);
  if (t == "y4m") return IngestFormat::kY4m;
  if (t == "pgm" || t == "pgm_sequence") return IngestFormat::kPgmSequence;
  if (t == "raw" || t == "raw_planar") return IngestFormat::kRawPlanar;
  throw Error(ErrorCode::kInvalidConfig, "unknown input format '" + std::string(text) + "'");
}

IngestFormat guess_ingest_format(const fs::path& path) {
  if (fs::is_directory(path)) return IngestFormat::kPgmSequence;
  if (lower(path.extension().string()) == ".y4m") return IngestFormat::kY4m;
  return IngestFormat::kRawPlanar;
}

std::unique_ptr<FrameSource> open_frame_source(const fs::path& path, IngestFormat format,
                                               const LoadOptions& options) {
  if (!fs::exists(path)) throw Error(ErrorCode::kFileNotFound, path.string());
  switch (format) {
    case IngestFormat::kY4m: return std::make_unique<Y4mSource>(path, options);
    case IngestFormat::kPgmSequence: return std::make_unique<PnmSequenceSource>(path, options);
    case IngestFormat::kRawPlanar: return std::make_unique<RawSource>(path, options);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown format");
}

FrameSequence load_frame_sequence(const fs::path& path, IngestFormat format,
                                  const LoadOptions& options) {
  const auto source = open_frame_source(path, format, options);
  return FrameSequence::from_source(*source);
}

std::size_t representative_frame_index(std::size_t frame_count) {
  if (frame_count == 0) throw Error(ErrorCode::kEmptySequence, "no frames");
  return frame_count / 2;
}

void write_pgm_sequence(const FrameSource& source, const fs::path& dir, int bit_depth) {
  const VideoMeta& meta = source.meta();
  fs::create_directories(dir);
  const std::uint32_t maxval = max_sample_value(bit_depth);
  std::vector<float> frame(meta.pixel_count());
  char name[32];
  for (std::size_t n = 0; n < meta.frame_count; ++n) {
    source.read_frame(n, frame);
    std::snprintf(name, sizeof(name), "frame_%07zu.pgm", n);
    write_pgm_samples(frame, meta.width, meta.height, maxval, dir / name);
  }
  auto out = open_output(dir / "sequence.meta");
  out << "fps_num=" << meta.frame_rate.num << "\nfps_den=" << meta.frame_rate.den
      << "\nwidth=" << meta.width << "\nheight=" << meta.height << "\nbit_depth=" << bit_depth
      << "\nframe_count=" << meta.frame_count << '\n';
}

void write_y4m(const FrameSource& source, const fs::path& path) {
  const VideoMeta& meta = source.meta();
  auto out = open_output(path);
  out << "YUV4MPEG2 W" << meta.width << " H" << meta.height << " F" << meta.frame_rate.num << ':'
      << meta.frame_rate.den << " Ip A1:1 C420jpeg\n";
  const std::size_t chroma = 2 * static_cast<std::size_t>((meta.width + 1) / 2) *
                             static_cast<std::size_t>((meta.height + 1) / 2);
  std::vector<float> frame(meta.pixel_count());
  std::vector<char> bytes(meta.pixel_count() + chroma, static_cast<char>(128));
  for (std::size_t n = 0; n < meta.frame_count; ++n) {
    source.read_frame(n, frame);
    for (std::size_t i = 0; i < frame.size(); ++i) bytes[i] = static_cast<char>(quantize(frame[i], 255));
    out << "FRAME\n";
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

void write_raw_planar(const FrameSource& source, const fs::path& path, int bit_depth) {
  const VideoMeta& meta = source.meta();
  const std::uint32_t maxval = max_sample_value(bit_depth);
  const int bytes_per_sample = bit_depth > 8 ? 2 : 1;
  {
    auto out = open_output(path);
    std::vector<float> frame(meta.pixel_count());
    std::vector<char> bytes;
    for (std::size_t n = 0; n < meta.frame_count; ++n) {
      source.read_frame(n, frame);
      bytes.clear();
      for (float v : frame) append_sample(bytes, quantize(v, maxval), bytes_per_sample, false);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
  }
  auto desc = open_output(descriptor_path(path));
  desc << "width=" << meta.width << "\nheight=" << meta.height << "\nfps_num=" << meta.frame_rate.num
       << "\nfps_den=" << meta.frame_rate.den << "\nbit_depth=" << bit_depth
       << "\nframe_count=" << meta.frame_count << "\nchannels=1\n";
}

void write_pgm(const Image<float>& image, const fs::path& path, int maxval) {
  write_pgm_samples(image.pixels(), image.width(), image.height(), static_cast<std::uint32_t>(maxval), path);
}

void write_pgm16(const Image<std::uint16_t>& image, const fs::path& path) {
  auto out = open_output(path);
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  std::vector<char> data;
  data.reserve(image.pixel_count() * 2);
  for (std::uint16_t v : image.pixels()) append_sample(data, v, 2, true);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

void write_ppm(const Image<float>& r, const Image<float>& g, const Image<float>& b,
               const fs::path& path) {
  auto out = open_output(path);
  out << "P6\n" << r.width() << ' ' << r.height() << "\n255\n";
  std::vector<char> data;
  data.reserve(r.pixel_count() * 3);
  for (std::size_t i = 0; i < r.pixel_count(); ++i) {
    data.push_back(static_cast<char>(quantize(r[i], 255)));
    data.push_back(static_cast<char>(quantize(g[i], 255)));
    data.push_back(static_cast<char>(quantize(b[i], 255)));
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

void write_pbm(const Image<std::uint8_t>& mask, const fs::path& path) {
  auto out = open_output(path);
  out << "P4\n" << mask.width() << ' ' << mask.height() << '\n';
  const int row_bytes = (mask.width() + 7) / 8;
  std::vector<char> row(static_cast<std::size_t>(row_bytes));
  for (int y = 0; y < mask.height(); ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y)) row[x / 8] = static_cast<char>(row[x / 8] | (0x80 >> (x % 8)));
    }
    out.write(row.data(), row_bytes);
  }
}

}  // namespace enfpd
