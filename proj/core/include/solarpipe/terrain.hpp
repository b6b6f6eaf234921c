#pragma once

#include <optional>
#include <utility>

#include "solarpipe/raster.hpp"

namespace solarpipe {

// Horizontal gradients (dz/dx eastward, dz/dy northward, in m/m) of a height
// raster, via the 3x3 Sobel operator normalized by 8 * spatial_resolution.
// Border pixels use edge replication.  A pixel's gradient is valid only if
// all pixels of its (replicated) 3x3 window are valid.
//
// When `footprint` is given, window samples outside the footprint are
// replaced by the center pixel's value, so gradients never mix roof and
// ground heights across a footprint boundary; only pixels inside the
// footprint get a gradient.  Throws std::invalid_argument for rasters
// smaller than 3x3.
std::pair<HeightRaster, HeightRaster> sobel_gradients(
    const HeightRaster& heights, const MaskRaster* footprint = nullptr);

// Upward unit normals n = normalize(-gx, -gy, 1).
NormalField surface_normals(const HeightRaster& gx, const HeightRaster& gy);
NormalField surface_normals(const HeightRaster& heights,
                            const MaskRaster* footprint = nullptr);

// Pitch (tilt from horizontal, degrees in [0, 90]) and downslope compass
// azimuth of a unit normal.  Azimuth is undefined (nullopt) when pitch is
// below 0.5 degrees.  Throws std::invalid_argument unless |n| = 1 within
// 1e-6 and n.z >= 0.
struct PitchAzimuth {
  double pitch_deg = 0.0;
  std::optional<double> azimuth_deg;
};
PitchAzimuth pitch_azimuth(const Vec3& normal);

// Lambertian hillshade: 255 * max(0, n . s) rounded to nearest, where s is
// the unit vector toward the light.  Invalid normals give invalid pixels.
GrayRaster hillshade(const NormalField& normals, double sun_elevation_deg = 45.0,
                     double sun_azimuth_deg = 315.0);

// Bilinear resampling of `source` onto the grid of `target_meta`, in map
// coordinates.  Target pixels whose interpolation stencil falls outside the
// source hull (or touches an invalid source pixel) are invalid.  Throws
// std::invalid_argument if the source and target extents do not overlap.
// Resampling onto the source's own grid returns a bit-exact copy.
HeightRaster resample_bilinear(const HeightRaster& source, const GridMeta& target_meta);

// DSM = per-pixel height above ground + terrain elevation.  Grids must
// match exactly; a pixel is valid only if both inputs are.
HeightRaster compose_dsm(const HeightRaster& heightmap, const HeightRaster& terrain);

}  // namespace solarpipe
