#include "enfpd/slic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <tuple>

#include "enfpd/error.hpp"

namespace enfpd {
namespace {

struct Center {
  double x = 0;
  double y = 0;
  std::vector<double> feature;
};

using Channels = std::vector<const Image<float>*>;

double gradient_at(const Channels& ch, int x, int y) {
  const int w = ch.front()->width();
  const int h = ch.front()->height();
  const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
  const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
  double g = 0;
  for (const auto* c : ch) {
    g += std::abs((*c)(xr, y) - (*c)(xl, y)) + std::abs((*c)(x, yd) - (*c)(x, yu));
  }
  return g;
}

std::vector<double> feature_at(const Channels& ch, int x, int y) {
  std::vector<double> f;
  f.reserve(ch.size());
  for (const auto* c : ch) f.push_back((*c)(x, y));
  return f;
}

std::vector<Center> initial_centers(const Channels& ch, int target) {
  const int w = ch.front()->width();
  const int h = ch.front()->height();
  const double step = std::sqrt(static_cast<double>(w) * h / target);
  const int nx = std::max(1, static_cast<int>(std::lround(w / step)));
  const int ny = std::max(1, static_cast<int>(std::lround(h / step)));
  const double sx = static_cast<double>(w) / nx;
  const double sy = static_cast<double>(h) / ny;

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      Center c;
      c.x = (i + 0.5) * sx - 0.5;
      c.y = (j + 0.5) * sy - 0.5;
      const int rx = std::clamp(static_cast<int>(std::lround(c.x)), 0, w - 1);
      const int ry = std::clamp(static_cast<int>(std::lround(c.y)), 0, h - 1);

      // Move to the lowest-gradient pixel of the 3x3 neighborhood, only on a
      // strict improvement.
      double best = gradient_at(ch, rx, ry);
      int bx = rx, by = ry;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int px = rx + dx, py = ry + dy;
          if (px < 0 || py < 0 || px >= w || py >= h) continue;
          const double g = gradient_at(ch, px, py);
          if (g < best) {
            best = g;
            bx = px;
            by = py;
          }
        }
      }
      if (bx != rx || by != ry) {
        c.x = bx;
        c.y = by;
      }
      c.feature = feature_at(ch, bx, by);
      centers.push_back(std::move(c));
    }
  }
  return centers;
}

SuperpixelMap run_slic(const Channels& ch, const SlicConfig& config) {
  config.validate();
  const int w = ch.front()->width();
  const int h = ch.front()->height();
  if (w < 2 || h < 2) throw Error(ErrorCode::kInvalidConfig, "frame must be at least 2x2");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (static_cast<std::size_t>(config.target_superpixels) > n) {
    throw Error(ErrorCode::kInvalidConfig, "more superpixels requested than pixels");
  }

  const double step = std::sqrt(static_cast<double>(n) / config.target_superpixels);
  const double spatial_weight = (config.compactness / step) * (config.compactness / step);
  std::vector<Center> centers = initial_centers(ch, config.target_superpixels);
  const std::size_t k_count = centers.size();

  Image<std::int32_t> labels(w, h, -1);
  std::vector<double> dist(n);

  auto distance2 = [&](const Center& c, int x, int y) {
    double d = 0;
    for (std::size_t f = 0; f < ch.size(); ++f) {
      const double diff = (*ch[f])(x, y) - c.feature[f];
      d += diff * diff;
    }
    const double dx = x - c.x, dy = y - c.y;
    return d + (dx * dx + dy * dy) * spatial_weight;
  };

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(labels.pixels().begin(), labels.pixels().end(), -1);

    for (std::size_t k = 0; k < k_count; ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - step)));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.x + step)));
      const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - step)));
      const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.y + step)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d = distance2(c, x, y);
          const std::size_t i = labels.index(x, y);
          if (d < dist[i]) {
            dist[i] = d;
            labels[i] = static_cast<std::int32_t>(k);
          }
        }
      }
    }

    // Pixels outside every search window (centers drifted apart) fall back to
    // a global nearest-center search.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = labels.index(x, y);
        if (labels[i] >= 0) continue;
        for (std::size_t k = 0; k < k_count; ++k) {
          const double d = distance2(centers[k], x, y);
          if (d < dist[i]) {
            dist[i] = d;
            labels[i] = static_cast<std::int32_t>(k);
          }
        }
      }
    }

    std::vector<double> sx(k_count, 0), sy(k_count, 0), cnt(k_count, 0);
    std::vector<std::vector<double>> sf(k_count, std::vector<double>(ch.size(), 0));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto k = static_cast<std::size_t>(labels(x, y));
        sx[k] += x;
        sy[k] += y;
        cnt[k] += 1;
        for (std::size_t f = 0; f < ch.size(); ++f) sf[k][f] += (*ch[f])(x, y);
      }
    }
    double movement = 0;
    for (std::size_t k = 0; k < k_count; ++k) {
      if (cnt[k] == 0) continue;
      const double nx = sx[k] / cnt[k], ny = sy[k] / cnt[k];
      movement = std::max(movement, std::hypot(nx - centers[k].x, ny - centers[k].y));
      centers[k].x = nx;
      centers[k].y = ny;
      for (std::size_t f = 0; f < ch.size(); ++f) centers[k].feature[f] = sf[k][f] / cnt[k];
    }
    if (movement < 0.25) break;
  }

  return enforce_connectivity(labels, config.connectivity_min_fraction, config.target_superpixels);
}

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double e = 216.0 / 24389.0;
  constexpr double k = 24389.0 / 27.0;
  return t > e ? std::cbrt(t) : (k * t + 16.0) / 116.0;
}

}  // namespace

void SlicConfig::validate() const {
  if (target_superpixels < 1) throw Error(ErrorCode::kInvalidConfig, "slic.target_superpixels must be >= 1");
  if (!(compactness > 0)) throw Error(ErrorCode::kInvalidConfig, "slic.compactness must be > 0");
  if (max_iterations < 1) throw Error(ErrorCode::kInvalidConfig, "slic.max_iterations must be >= 1");
  if (!(connectivity_min_fraction > 0 && connectivity_min_fraction <= 1)) {
    throw Error(ErrorCode::kInvalidConfig, "slic.connectivity_min_fraction must be in (0,1]");
  }
}

std::vector<std::size_t> SuperpixelMap::region_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(region_count), 0);
  for (auto l : labels.pixels()) ++sizes.at(static_cast<std::size_t>(l));
  return sizes;
}

SuperpixelMap segment_slic(const Image<float>& luma, const SlicConfig& config) {
  return run_slic(Channels{&luma}, config);
}

SuperpixelMap segment_slic_rgb(const Image<float>& r, const Image<float>& g, const Image<float>& b,
                               const SlicConfig& config) {
  // Lab scaled by 1/255 so the compactness default matches the usual m = 10.
  Image<float> lc(r.width(), r.height()), ac(r.width(), r.height()), bc(r.width(), r.height());
  for (std::size_t i = 0; i < r.pixel_count(); ++i) {
    const double rl = srgb_to_linear(r[i]), gl = srgb_to_linear(g[i]), bl = srgb_to_linear(b[i]);
    const double x = (0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl) / 0.95047;
    const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    const double z = (0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl) / 1.08883;
    const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
    lc[i] = static_cast<float>((116.0 * fy - 16.0) / 255.0);
    ac[i] = static_cast<float>(500.0 * (fx - fy) / 255.0);
    bc[i] = static_cast<float>(200.0 * (fy - fz) / 255.0);
  }
  return run_slic(Channels{&lc, &ac, &bc}, config);
}

SuperpixelMap enforce_connectivity(const Image<std::int32_t>& labels, double min_fraction,
                                   std::optional<int> expected_regions) {
  const int w = labels.width();
  const int h = labels.height();
  const std::size_t n = labels.pixel_count();

  // 1. 4-connected components of equal input label, numbered in raster order.
  Image<std::int32_t> comp(w, h, -1);
  std::vector<std::int32_t> comp_label;
  std::vector<std::size_t> comp_size;
  std::vector<std::size_t> comp_first;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const auto id = static_cast<std::int32_t>(comp_label.size());
    const std::int32_t lab = labels[start];
    comp_label.push_back(lab);
    comp_first.push_back(start);
    std::size_t size = 0;
    comp[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      const std::size_t nb[4] = {x > 0 ? i - 1 : n, x + 1 < w ? i + 1 : n, y > 0 ? i - w : n,
                                 y + 1 < h ? i + w : n};
      for (std::size_t j : nb) {
        if (j < n && comp[j] < 0 && labels[j] == lab) {
          comp[j] = id;
          stack.push_back(j);
        }
      }
    }
    comp_size.push_back(size);
  }
  const std::size_t comps = comp_label.size();

  // 2. Component adjacency.
  std::vector<std::set<std::int32_t>> adj(comps);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto a = comp(x, y);
      if (x + 1 < w && comp(x + 1, y) != a) {
        adj[a].insert(comp(x + 1, y));
        adj[comp(x + 1, y)].insert(a);
      }
      if (y + 1 < h && comp(x, y + 1) != a) {
        adj[a].insert(comp(x, y + 1));
        adj[comp(x, y + 1)].insert(a);
      }
    }
  }

  int regions = expected_regions.value_or(0);
  if (regions <= 0) {
    std::set<std::int32_t> distinct(labels.pixels().begin(), labels.pixels().end());
    regions = static_cast<int>(distinct.size());
  }
  const double threshold = min_fraction * static_cast<double>(n) / regions;

  // 3. Merge the smallest undersized component (ties: lowest id) into its
  // largest neighbor (ties: lowest id) until none is left or one remains.
  std::vector<std::int32_t> parent(comps);
  for (std::size_t i = 0; i < comps; ++i) parent[i] = static_cast<std::int32_t>(i);
  auto find = [&](std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  using Entry = std::pair<std::size_t, std::int32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (std::size_t i = 0; i < comps; ++i) {
    if (static_cast<double>(comp_size[i]) < threshold) queue.emplace(comp_size[i], static_cast<std::int32_t>(i));
  }
  std::size_t alive = comps;
  while (!queue.empty() && alive > 1) {
    const auto [size, id] = queue.top();
    queue.pop();
    if (find(id) != id || comp_size[id] != size) continue;

    std::int32_t best = -1;
    std::set<std::int32_t> neighbors;
    for (auto a : adj[id]) {
      const auto r = find(a);
      if (r != id) neighbors.insert(r);
    }
    for (auto r : neighbors) {
      if (best < 0 || comp_size[r] > comp_size[best]) best = r;
    }
    if (best < 0) continue;

    parent[id] = best;
    comp_size[best] += comp_size[id];
    for (auto r : neighbors) {
      if (r != best) adj[best].insert(r);
    }
    adj[best].erase(id);
    adj[id].clear();
    --alive;
    if (static_cast<double>(comp_size[best]) < threshold) queue.emplace(comp_size[best], best);
  }

  // 4. Compact the surviving roots.
  std::vector<std::int32_t> roots;
  for (std::size_t i = 0; i < comps; ++i) {
    if (find(static_cast<std::int32_t>(i)) == static_cast<std::int32_t>(i)) {
      roots.push_back(static_cast<std::int32_t>(i));
    }
  }
  std::sort(roots.begin(), roots.end(), [&](std::int32_t a, std::int32_t b) {
    return std::tie(comp_label[a], comp_first[a]) < std::tie(comp_label[b], comp_first[b]);
  });
  std::vector<std::int32_t> new_id(comps, -1);
  for (std::size_t i = 0; i < roots.size(); ++i) new_id[roots[i]] = static_cast<std::int32_t>(i);

  SuperpixelMap out{Image<std::int32_t>(w, h), static_cast<int>(roots.size())};
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = new_id[find(comp[i])];
  return out;
}

bool is_valid_superpixel_map(const SuperpixelMap& map) {
  const auto& labels = map.labels;
  if (map.region_count < 1 || labels.empty()) return false;
  for (auto l : labels.pixels()) {
    if (l < 0 || l >= map.region_count) return false;
  }
  const auto sizes = map.region_sizes();
  if (std::any_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s == 0; })) return false;
  // Each label must form exactly one 4-connected component.
  const auto relabeled = enforce_connectivity(labels, 1e-12, map.region_count);
  return relabeled.region_count == map.region_count;
}

void write_label_map(const SuperpixelMap& map, const std::filesystem::path& path) {
  Image<std::uint16_t> img(map.width(), map.height());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img[i] = static_cast<std::uint16_t>(std::min<std::int32_t>(map.labels[i], 65535));
  }
  write_pgm16(img, path);
}

void write_boundary_overlay(const Image<float>& luma, const SuperpixelMap& map,
                            const std::filesystem::path& path) {
  Image<float> r = luma, g = luma, b = luma;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const auto l = map.labels(x, y);
      const bool edge = (x + 1 < map.width() && map.labels(x + 1, y) != l) ||
                        (y + 1 < map.height() && map.labels(x, y + 1) != l);
      if (edge) {
        r(x, y) = 1.0f;
        g(x, y) = 0.0f;
        b(x, y) = 0.0f;
      }
    }
  }
  write_ppm(r, g, b, path);
}

}  // namespace enfpd
