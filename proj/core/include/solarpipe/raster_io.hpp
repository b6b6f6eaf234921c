#pragma once

#include <string>

#include "solarpipe/raster.hpp"

namespace solarpipe {

// --- ESRI ASCII grid (.asc) ---------------------------------------------
//
// Float rasters are written with enough digits (%.17g) to round-trip
// bit-exactly; integer rasters are written as plain integers.  NODATA cells
// map to the invalid flag on read and back to NODATA on write.  Files use
// center registration (xllcenter / yllcenter = center of the lower-left
// cell), matching the pixel-center convention of GridMeta.

HeightRaster read_height_asc(const std::string& path);
void write_height_asc(const std::string& path, const HeightRaster& r);

LabelRaster read_label_asc(const std::string& path);
void write_label_asc(const std::string& path, const LabelRaster& r);

MaskRaster read_mask_asc(const std::string& path);
void write_mask_asc(const std::string& path, const MaskRaster& r);

// --- PNG ------------------------------------------------------------------
//
// Color rasters are 8-bit RGB PNGs with a JSON sidecar ("<path>.json")
// carrying the GridMeta; invalid pixels are written as a fourth (alpha = 0)
// channel when present and restored on read.  Gray images are 8-bit
// single-channel PNGs.

ColorRaster read_color_png(const std::string& path);
void write_color_png(const std::string& path, const ColorRaster& r);

GrayRaster read_gray_png(const std::string& path);
void write_gray_png(const std::string& path, const GrayRaster& r);

// False-color rendering of a float raster (low = dark blue, high = yellow),
// for quick visual inspection of flux / height grids.  Invalid pixels are
// black.
ColorRaster false_color(const HeightRaster& r);

}  // namespace solarpipe
