#pragma once

#include <cstdint>

#include "solarpipe/raster.hpp"
#include "solarpipe/view_geometry.hpp"

namespace solarpipe {

// Direction of the parallax warp.  to_offnadir applies the displacement
// (row += h/res * tan(angle_y), col += h/res * tan(angle_x), rounded half
// away from zero); to_nadir applies its negation, mapping an off-nadir
// image back onto true ground positions.
enum class Direction { to_offnadir, to_nadir };

template <typename T>
struct ReprojectionResult {
  Raster<T> output;            // warped values; invalid where nothing landed
  MaskRaster occlusion;        // 1 where no source pixel landed
  Raster<std::int64_t> provenance;  // winning source index (row-major), -1 if none
};

// Z-buffered parallax reprojection: every valid pixel of `heights` is
// displaced by its own height; when several sources land on one target the
// highest wins (ties: the later pixel in row-major order).  `values` rides
// along and must share the grid of `heights`.
ReprojectionResult<double> reproject(const HeightRaster& values,
                                     const HeightRaster& heights,
                                     const ViewGeometry& view, Direction dir);
ReprojectionResult<Rgb8> reproject(const ColorRaster& values,
                                   const HeightRaster& heights,
                                   const ViewGeometry& view, Direction dir);
ReprojectionResult<std::int32_t> reproject(const LabelRaster& values,
                                           const HeightRaster& heights,
                                           const ViewGeometry& view, Direction dir);

// Reprojects a height grid while also rasterizing building sides: each pixel
// contributes a 1 m ladder of rungs from its base height (minimum of its
// valid 4-neighbors, or its own height if it has none) up to its height,
// with the top always included.  This fills the facade pixels an oblique
// sensor actually sees, so the inverse warp meets fewer spurious holes.
ReprojectionResult<double> reproject_with_sides(const HeightRaster& heights,
                                                const ViewGeometry& view,
                                                Direction dir);

// Fills occluded pixels.  With a `fill` raster, occluded pixels copy from
// it; otherwise they are diffused from the non-occluded boundary (Jacobi
// iterations until the largest per-iteration change drops below 0.5, at most
// 500 rounds) and smoothed with a 5x5 mean over the occluded set.
// Non-occluded pixels are returned bit-exactly unchanged.  Throws
// std::invalid_argument if every pixel is occluded and no fill is given.
HeightRaster infill_occlusions(const HeightRaster& image, const MaskRaster& occlusion,
                               const HeightRaster* fill = nullptr);
ColorRaster infill_occlusions(const ColorRaster& image, const MaskRaster& occlusion,
                              const ColorRaster* fill = nullptr);

}  // namespace solarpipe
