#include "solarpipe/masking.hpp"

#include <stdexcept>

#include "solarpipe/roof_segments.hpp"

namespace solarpipe {

MaskRaster temporal_mismatch_mask(const InstanceMap& first, const InstanceMap& second) {
  if (first.ids.meta() != second.ids.meta())
    throw std::invalid_argument("temporal_mismatch_mask: grids must match");
  MaskRaster out(first.ids.meta(), 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    bool a = first.ids.is_valid(i) && first.ids.at(i) > 0;
    bool b = second.ids.is_valid(i) && second.ids.at(i) > 0;
    out.at(i) = (a == b) ? 1 : 0;
  }
  return out;
}

MaskRaster coverage_mask(const InstanceMap& buildings, const InstanceMap& segments,
                         double threshold) {
  auto coverage = coverage_fraction(buildings, segments);
  MaskRaster out(buildings.ids.meta(), 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!buildings.ids.is_valid(i)) continue;
    int bid = buildings.ids.at(i);
    if (bid <= 0) continue;
    auto it = coverage.find(bid);
    if (it != coverage.end() && it->second < threshold) out.at(i) = 0;
  }
  return out;
}

MaskRaster combine_masks(const std::vector<MaskRaster>& masks) {
  if (masks.empty()) throw std::invalid_argument("combine_masks: empty mask list");
  MaskRaster out = masks.front();
  for (std::size_t m = 1; m < masks.size(); ++m) {
    if (masks[m].meta() != out.meta())
      throw std::invalid_argument("combine_masks: grids must match");
    for (std::size_t i = 0; i < out.size(); ++i)
      out.at(i) = out.at(i) && masks[m].at(i) ? 1 : 0;
  }
  return out;
}

}  // namespace solarpipe
