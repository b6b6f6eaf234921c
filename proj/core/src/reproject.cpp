#include "solarpipe/reproject.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "solarpipe/geom.hpp"

namespace solarpipe {

namespace {

struct SourcePoint {
  double height;        // z-buffer key
  std::int64_t src;     // row-major index of the originating pixel
  std::int64_t target;  // row-major index it lands on, -1 if off-grid
  double value_height;  // height value carried to the target (for rungs)
};

// displacement in pixels per meter of height, along rows and columns
struct Displacement {
  double rows_per_m;
  double cols_per_m;
};

Displacement displacement_for(const GridMeta& meta, const ViewGeometry& view, Direction dir) {
  double sign = dir == Direction::to_offnadir ? 1.0 : -1.0;
  double per_m = sign / meta.spatial_resolution;
  return {per_m * std::tan(deg_to_rad(view.angle_y_deg)),
          per_m * std::tan(deg_to_rad(view.angle_x_deg))};
}

std::int64_t target_index(const GridMeta& meta, int row, int col, double height,
                          const Displacement& d) {
  // round half away from zero, matching llround
  std::int64_t tr = row + std::llround(height * d.rows_per_m);
  std::int64_t tc = col + std::llround(height * d.cols_per_m);
  if (tr < 0 || tr >= meta.height || tc < 0 || tc >= meta.width) return -1;
  return tr * meta.width + tc;
}

// Sorts source points so that overwriting in order leaves the highest point
// (ties: the latest source in row-major order) on each target.
void sort_for_zbuffer(std::vector<SourcePoint>& points) {
  std::sort(points.begin(), points.end(), [](const SourcePoint& a, const SourcePoint& b) {
    if (a.height != b.height) return a.height < b.height;
    return a.src < b.src;
  });
}

template <typename T>
ReprojectionResult<T> project_points(const Raster<T>& values, const GridMeta& meta,
                                     std::vector<SourcePoint>& points, bool carry_rung_height) {
  ReprojectionResult<T> res{Raster<T>(meta, T{}, false), MaskRaster(meta, 1),
                            Raster<std::int64_t>(meta, -1, false)};
  sort_for_zbuffer(points);
  for (const SourcePoint& p : points) {
    if (p.target < 0) continue;
    std::size_t t = static_cast<std::size_t>(p.target);
    std::size_t s = static_cast<std::size_t>(p.src);
    if constexpr (std::is_same_v<T, double>) {
      if (carry_rung_height) {
        res.output.at(t) = p.value_height;
        res.output.set_valid(t, true);
      } else {
        res.output.at(t) = values.at(s);
        res.output.set_valid(t, values.is_valid(s));
      }
    } else {
      res.output.at(t) = values.at(s);
      res.output.set_valid(t, values.is_valid(s));
    }
    res.occlusion.at(t) = 0;
    res.provenance.at(t) = static_cast<std::int64_t>(s);
    res.provenance.set_valid(t, true);
  }
  return res;
}

template <typename T>
ReprojectionResult<T> reproject_impl(const Raster<T>& values, const HeightRaster& heights,
                                     const ViewGeometry& view, Direction dir) {
  if (values.meta() != heights.meta())
    throw std::invalid_argument("reproject: value and height grids must match");
  const GridMeta& meta = heights.meta();
  Displacement d = displacement_for(meta, view, dir);
  std::vector<SourcePoint> points;
  points.reserve(heights.size());
  for (int row = 0; row < meta.height; ++row) {
    for (int col = 0; col < meta.width; ++col) {
      if (!heights.is_valid(row, col)) continue;
      double h = heights(row, col);
      std::int64_t src = static_cast<std::int64_t>(row) * meta.width + col;
      points.push_back({h, src, target_index(meta, row, col, h, d), h});
    }
  }
  return project_points(values, meta, points, false);
}

}  // namespace

ReprojectionResult<double> reproject(const HeightRaster& values, const HeightRaster& heights,
                                     const ViewGeometry& view, Direction dir) {
  return reproject_impl(values, heights, view, dir);
}

ReprojectionResult<Rgb8> reproject(const ColorRaster& values, const HeightRaster& heights,
                                   const ViewGeometry& view, Direction dir) {
  return reproject_impl(values, heights, view, dir);
}

ReprojectionResult<std::int32_t> reproject(const LabelRaster& values,
                                           const HeightRaster& heights,
                                           const ViewGeometry& view, Direction dir) {
  return reproject_impl(values, heights, view, dir);
}

ReprojectionResult<double> reproject_with_sides(const HeightRaster& heights,
                                                const ViewGeometry& view, Direction dir) {
  const GridMeta& meta = heights.meta();
  Displacement d = displacement_for(meta, view, dir);
  std::vector<SourcePoint> points;
  points.reserve(heights.size());
  constexpr int kDr[4] = {-1, 1, 0, 0};
  constexpr int kDc[4] = {0, 0, -1, 1};
  for (int row = 0; row < meta.height; ++row) {
    for (int col = 0; col < meta.width; ++col) {
      if (!heights.is_valid(row, col)) continue;
      double h = heights(row, col);
      std::int64_t src = static_cast<std::int64_t>(row) * meta.width + col;
      // base of the facade: lowest valid 4-neighbor (own height if none)
      double base = h;
      bool any = false;
      for (int k = 0; k < 4; ++k) {
        int rr = row + kDr[k], cc = col + kDc[k];
        if (!heights.in_bounds(rr, cc) || !heights.is_valid(rr, cc)) continue;
        base = any ? std::min(base, heights(rr, cc)) : heights(rr, cc);
        any = true;
      }
      if (!any || base > h) base = h;
      // 1 m rungs from the base up, top always included
      for (double z = base; z < h; z += 1.0)
        points.push_back({z, src, target_index(meta, row, col, z, d), z});
      points.push_back({h, src, target_index(meta, row, col, h, d), h});
    }
  }
  HeightRaster dummy(meta);
  return project_points(dummy, meta, points, true);
}

// --- occlusion infill --------------------------------------------------------

namespace {

// Diffuses plane values into `occluded` pixels from their valid, non-occluded
// neighbors (Jacobi), then smooths the filled pixels with a 5x5 mean.
// `valid` marks pixels carrying usable values.
void infill_plane(std::vector<double>& plane, const std::vector<std::uint8_t>& valid,
                  const MaskRaster& occlusion, const GridMeta& meta) {
  const int w = meta.width, h = meta.height;
  auto occluded = [&](int r, int c) { return occlusion(r, c) != 0; };

  // initialize unknowns with the mean of the known pixels
  double sum = 0.0;
  std::int64_t count = 0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (!occluded(r, c) && valid[occlusion.index(r, c)]) {
        sum += plane[occlusion.index(r, c)];
        ++count;
      }
  if (count == 0)
    throw std::invalid_argument("infill_occlusions: every pixel is occluded or invalid");
  double mean = sum / count;

  std::vector<std::size_t> unknowns;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (occluded(r, c)) {
        plane[occlusion.index(r, c)] = mean;
        unknowns.push_back(occlusion.index(r, c));
      }
  if (unknowns.empty()) return;

  constexpr int kDr[4] = {-1, 1, 0, 0};
  constexpr int kDc[4] = {0, 0, -1, 1};
  std::vector<double> next(plane);
  for (int iter = 0; iter < 500; ++iter) {
    double max_change = 0.0;
    for (std::size_t idx : unknowns) {
      int r = static_cast<int>(idx / w), c = static_cast<int>(idx % w);
      double acc = 0.0;
      int n = 0;
      for (int k = 0; k < 4; ++k) {
        int rr = r + kDr[k], cc = c + kDc[k];
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        std::size_t j = occlusion.index(rr, cc);
        if (!occluded(rr, cc) && !valid[j]) continue;  // invalid data pixel: skip
        acc += plane[j];
        ++n;
      }
      if (n == 0) continue;
      double v = acc / n;
      max_change = std::max(max_change, std::fabs(v - plane[idx]));
      next[idx] = v;
    }
    for (std::size_t idx : unknowns) plane[idx] = next[idx];
    if (max_change < 0.5) break;
  }

  // 5x5 mean over the filled region to hide the diffusion texture
  std::vector<double> smoothed(unknowns.size());
  for (std::size_t u = 0; u < unknowns.size(); ++u) {
    std::size_t idx = unknowns[u];
    int r = static_cast<int>(idx / w), c = static_cast<int>(idx % w);
    double acc = 0.0;
    int n = 0;
    for (int dr = -2; dr <= 2; ++dr) {
      for (int dc = -2; dc <= 2; ++dc) {
        int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        std::size_t j = occlusion.index(rr, cc);
        if (!occluded(rr, cc) && !valid[j]) continue;
        acc += plane[j];
        ++n;
      }
    }
    smoothed[u] = n > 0 ? acc / n : plane[idx];
  }
  for (std::size_t u = 0; u < unknowns.size(); ++u) plane[unknowns[u]] = smoothed[u];
}

}  // namespace

HeightRaster infill_occlusions(const HeightRaster& image, const MaskRaster& occlusion,
                               const HeightRaster* fill) {
  if (occlusion.meta() != image.meta())
    throw std::invalid_argument("infill_occlusions: occlusion grid mismatch");
  if (fill && fill->meta() != image.meta())
    throw std::invalid_argument("infill_occlusions: fill grid mismatch");
  HeightRaster out = image;
  if (fill) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (occlusion.at(i) == 0) continue;
      out.at(i) = fill->at(i);
      out.set_valid(i, fill->is_valid(i));
    }
    return out;
  }
  std::vector<double> plane(out.values());
  infill_plane(plane, out.validity(), occlusion, out.meta());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (occlusion.at(i) == 0) continue;
    out.at(i) = plane[i];
    out.set_valid(i, true);
  }
  return out;
}

ColorRaster infill_occlusions(const ColorRaster& image, const MaskRaster& occlusion,
                              const ColorRaster* fill) {
  if (occlusion.meta() != image.meta())
    throw std::invalid_argument("infill_occlusions: occlusion grid mismatch");
  if (fill && fill->meta() != image.meta())
    throw std::invalid_argument("infill_occlusions: fill grid mismatch");
  ColorRaster out = image;
  if (fill) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (occlusion.at(i) == 0) continue;
      out.at(i) = fill->at(i);
      out.set_valid(i, fill->is_valid(i));
    }
    return out;
  }
  // diffuse each channel independently in double precision
  std::vector<double> channels[3];
  for (int ch = 0; ch < 3; ++ch) channels[ch].resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    channels[0][i] = out.at(i).r;
    channels[1][i] = out.at(i).g;
    channels[2][i] = out.at(i).b;
  }
  for (int ch = 0; ch < 3; ++ch) infill_plane(channels[ch], out.validity(), occlusion, out.meta());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (occlusion.at(i) == 0) continue;
    auto quantize = [](double v) {
      return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
    };
    out.at(i) = {quantize(channels[0][i]), quantize(channels[1][i]), quantize(channels[2][i])};
    out.set_valid(i, true);
  }
  return out;
}

}  // namespace solarpipe
