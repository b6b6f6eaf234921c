#pragma once

#include <vector>

#include "solarpipe/raster.hpp"

namespace solarpipe {

// One tile placed into a mosaic at a pixel offset.  `margin` is the width of
// the overlap feathering ramp in pixels: within `margin` pixels of a tile
// edge the tile's blend weight falls off linearly ((i + 1) / (margin + 1)
// at distance i from the edge), reaching 1 in the interior.
template <typename T>
struct TilePlacement {
  Raster<T> tile;
  int offset_row = 0;
  int offset_col = 0;
  int margin = 0;
};

// Feathered mosaic of float tiles.  Overlapping pixels blend by normalized
// ramp weights; the result is clamped to the range of the contributing
// values, so a pixel covered by tiles that agree is returned bit-exactly.
// Tiles are accumulated in a canonical order (sorted by offset), making the
// output independent of the order tiles are supplied.  Throws
// std::invalid_argument if any mosaic pixel is covered by no valid tile
// pixel, or if a tile extends outside the mosaic.
HeightRaster stitch(const std::vector<TilePlacement<double>>& tiles,
                    const GridMeta& mosaic_meta);

// Label mosaics take the candidate with the greatest blend weight
// (ties: the earliest tile in canonical order).
LabelRaster stitch_labels(const std::vector<TilePlacement<std::int32_t>>& tiles,
                          const GridMeta& mosaic_meta);

// Color mosaics blend per channel like float tiles, then round half away
// from zero.
ColorRaster stitch_color(const std::vector<TilePlacement<Rgb8>>& tiles,
                         const GridMeta& mosaic_meta);

}  // namespace solarpipe
