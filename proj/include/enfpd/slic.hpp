#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "enfpd/image.hpp"
#include "enfpd/ingest.hpp"

namespace enfpd {

struct SlicConfig {
  int target_superpixels = 48;
  // Weight of the spatial term, in normalized luma units (10 on a 0..255 scale).
  double compactness = 10.0 / 255.0;
  int max_iterations = 10;
  // Fragments smaller than this fraction of the nominal cell area are merged.
  double connectivity_min_fraction = 0.25;

  // Throws kInvalidConfig.
  void validate() const;
};

struct SuperpixelMap {
  Image<std::int32_t> labels;
  int region_count = 0;

  int width() const noexcept { return labels.width(); }
  int height() const noexcept { return labels.height(); }
  std::vector<std::size_t> region_sizes() const;
};

// Grayscale SLIC on normalized luma. Deterministic: grid-initialized centers,
// lowest center id wins exact distance ties.
SuperpixelMap segment_slic(const Image<float>& luma, const SlicConfig& config);
inline SuperpixelMap segment_slic(const Frame& frame, const SlicConfig& config) {
  return segment_slic(frame.luma, config);
}

// Color SLIC in CIELAB. Channels are sRGB in [0,1].
SuperpixelMap segment_slic_rgb(const Image<float>& r, const Image<float>& g, const Image<float>& b,
                               const SlicConfig& config);

// Relabels each 4-connected fragment smaller than
// min_fraction * (pixels / expected_regions) into its largest adjacent region.
// `expected_regions` defaults to the number of distinct input labels.
// Output labels are compacted to [0, region_count), ordered by
// (input label, first raster position), so a labeling that is already
// connected and compact comes back unchanged.
SuperpixelMap enforce_connectivity(const Image<std::int32_t>& labels, double min_fraction,
                                   std::optional<int> expected_regions = std::nullopt);

// Checks the partition invariants: labels in range, no empty region, every
// region 4-connected.
bool is_valid_superpixel_map(const SuperpixelMap& map);

// Debug dumps.
void write_label_map(const SuperpixelMap& map, const std::filesystem::path& path);
void write_boundary_overlay(const Image<float>& luma, const SuperpixelMap& map,
                            const std::filesystem::path& path);

}  // namespace enfpd
