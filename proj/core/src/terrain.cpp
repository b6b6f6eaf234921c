#include "solarpipe/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "solarpipe/geom.hpp"

namespace solarpipe {

namespace {

// Sobel kernels for d/dx (east) and d/dy (north).  Rows advance southward,
// so the +y (north) direction is toward smaller row indices.
constexpr int kSx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr int kSyNorth[3][3] = {{1, 2, 1}, {0, 0, 0}, {-1, -2, -1}};

}  // namespace

std::pair<HeightRaster, HeightRaster> sobel_gradients(const HeightRaster& heights,
                                                      const MaskRaster* footprint) {
  if (footprint && footprint->meta() != heights.meta())
    throw std::invalid_argument("sobel_gradients: footprint grid mismatch");
  if (heights.width() < 3 || heights.height() < 3)
    throw std::invalid_argument("sobel_gradients: raster must be at least 3x3");
  const GridMeta& m = heights.meta();
  HeightRaster gx(m), gy(m);
  double scale = 1.0 / (8.0 * m.spatial_resolution);
  for (int row = 0; row < m.height; ++row) {
    for (int col = 0; col < m.width; ++col) {
      bool center_in = !footprint || (*footprint)(row, col) != 0;
      if (!center_in || !heights.is_valid(row, col)) {
        gx.set_valid(row, col, false);
        gy.set_valid(row, col, false);
        continue;
      }
      double center = heights(row, col);
      double sx = 0.0, sy = 0.0;
      bool ok = true;
      for (int dr = -1; dr <= 1 && ok; ++dr) {
        for (int dc = -1; dc <= 1 && ok; ++dc) {
          // edge replication: clamp the window to the grid
          int rr = std::clamp(row + dr, 0, m.height - 1);
          int cc = std::clamp(col + dc, 0, m.width - 1);
          double v;
          if (footprint && (*footprint)(rr, cc) == 0) {
            // outside the footprint the surface is unrelated (ground vs
            // roof); substitute the center height so the window stays local
            v = center;
          } else if (heights.is_valid(rr, cc)) {
            v = heights(rr, cc);
          } else {
            ok = false;
            break;
          }
          sx += kSx[dr + 1][dc + 1] * v;
          sy += kSyNorth[dr + 1][dc + 1] * v;
        }
      }
      if (!ok) {
        gx.set_valid(row, col, false);
        gy.set_valid(row, col, false);
        continue;
      }
      gx(row, col) = sx * scale;
      gy(row, col) = sy * scale;
    }
  }
  return {std::move(gx), std::move(gy)};
}

NormalField surface_normals(const HeightRaster& gx, const HeightRaster& gy) {
  if (gx.meta() != gy.meta())
    throw std::invalid_argument("surface_normals: gradient grid mismatch");
  NormalField n(gx.meta());
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!gx.is_valid(i) || !gy.is_valid(i)) {
      n.set_valid(i, false);
      continue;
    }
    n.at(i) = normalized({-gx.at(i), -gy.at(i), 1.0});
  }
  return n;
}

NormalField surface_normals(const HeightRaster& heights, const MaskRaster* footprint) {
  auto [gx, gy] = sobel_gradients(heights, footprint);
  return surface_normals(gx, gy);
}

PitchAzimuth pitch_azimuth(const Vec3& normal) {
  double len = norm(normal);
  if (std::fabs(len - 1.0) > 1e-6)
    throw std::invalid_argument("pitch_azimuth: normal must be unit length");
  if (normal.z < 0.0)
    throw std::invalid_argument("pitch_azimuth: normal must point upward");
  PitchAzimuth pa;
  pa.pitch_deg = rad_to_deg(std::acos(std::clamp(normal.z, 0.0, 1.0)));
  if (pa.pitch_deg >= 0.5) {
    // downslope direction is the horizontal projection of the normal
    pa.azimuth_deg = wrap_degrees(rad_to_deg(std::atan2(normal.x, normal.y)));
  }
  return pa;
}

GrayRaster hillshade(const NormalField& normals, double sun_elevation_deg,
                     double sun_azimuth_deg) {
  Vec3 s = direction_from_bearing(sun_azimuth_deg, sun_elevation_deg);
  GrayRaster out(normals.meta());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!normals.is_valid(i)) {
      out.at(i) = 0;
      out.set_valid(i, false);
      continue;
    }
    double shade = std::max(0.0, dot(normals.at(i), s));
    out.at(i) = static_cast<std::uint8_t>(std::lround(255.0 * shade));
  }
  return out;
}

HeightRaster resample_bilinear(const HeightRaster& source, const GridMeta& target_meta) {
  target_meta.validate();
  const GridMeta& sm = source.meta();
  if (target_meta == sm) return source;  // same grid: bit-exact copy

  // map extents (pixel centers) must overlap
  double sx0 = sm.x(0), sx1 = sm.x(sm.width - 1);
  double sy1 = sm.y(0), sy0 = sm.y(sm.height - 1);  // y decreases with row
  double tx0 = target_meta.x(0), tx1 = target_meta.x(target_meta.width - 1);
  double ty1 = target_meta.y(0), ty0 = target_meta.y(target_meta.height - 1);
  if (tx1 < sx0 || tx0 > sx1 || ty1 < sy0 || ty0 > sy1)
    throw std::invalid_argument("resample_bilinear: source and target extents do not overlap");

  HeightRaster out(target_meta);
  for (int row = 0; row < target_meta.height; ++row) {
    double v = sm.row_of(target_meta.y(row));
    for (int col = 0; col < target_meta.width; ++col) {
      double u = sm.col_of(target_meta.x(col));
      if (u < 0.0 || u > sm.width - 1 || v < 0.0 || v > sm.height - 1) {
        out.set_valid(row, col, false);
        continue;
      }
      int c0 = std::min(static_cast<int>(u), sm.width - 2);
      int r0 = std::min(static_cast<int>(v), sm.height - 2);
      if (sm.width == 1) c0 = 0;
      if (sm.height == 1) r0 = 0;
      int c1 = std::min(c0 + 1, sm.width - 1);
      int r1 = std::min(r0 + 1, sm.height - 1);
      if (!source.is_valid(r0, c0) || !source.is_valid(r0, c1) ||
          !source.is_valid(r1, c0) || !source.is_valid(r1, c1)) {
        out.set_valid(row, col, false);
        continue;
      }
      double fu = u - c0;
      double fv = v - r0;
      double top = source(r0, c0) * (1.0 - fu) + source(r0, c1) * fu;
      double bottom = source(r1, c0) * (1.0 - fu) + source(r1, c1) * fu;
      out(row, col) = top * (1.0 - fv) + bottom * fv;
    }
  }
  return out;
}

HeightRaster compose_dsm(const HeightRaster& heightmap, const HeightRaster& terrain) {
  if (heightmap.meta() != terrain.meta())
    throw std::invalid_argument("compose_dsm: grids must match");
  HeightRaster out(heightmap.meta());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!heightmap.is_valid(i) || !terrain.is_valid(i)) {
      out.set_valid(i, false);
      continue;
    }
    out.at(i) = heightmap.at(i) + terrain.at(i);
  }
  return out;
}

}  // namespace solarpipe
