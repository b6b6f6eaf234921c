#pragma once

#include <vector>

#include "solarpipe/raster.hpp"

namespace solarpipe {

// Evaluation masks: 1 = pixel participates in evaluation, 0 = excluded.

// Excludes pixels where building presence disagrees between the two maps
// (a building exists in one footprint set but not the other, e.g. built or
// demolished between captures).  Presence is binarized occupancy (id > 0);
// instance ids themselves are not compared.  Grids must match.
MaskRaster temporal_mismatch_mask(const InstanceMap& first, const InstanceMap& second);

// Excludes every pixel of buildings whose fraction of segment-covered pixels
// is strictly below `threshold`; background and sufficiently covered
// buildings are kept.  A building at exactly the threshold is kept.
MaskRaster coverage_mask(const InstanceMap& buildings, const InstanceMap& segments,
                         double threshold = 0.5);

// Pixel-wise AND.  Throws std::invalid_argument on empty input or grid
// mismatch.
MaskRaster combine_masks(const std::vector<MaskRaster>& masks);

}  // namespace solarpipe
