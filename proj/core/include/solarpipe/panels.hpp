#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "solarpipe/raster.hpp"
#include "solarpipe/roof_segments.hpp"

namespace solarpipe {

struct PanelSpec {
  double length_m = 1.65;          // along the fall line (up-slope)
  double width_m = 0.99;           // across the slope
  double rated_power_w = 400.0;
  double efficiency = 0.20;
  double performance_ratio = 0.85;
};

struct PanelPlacement {
  int panel_index = 0;    // global rank, 0 = most productive
  int segment_id = 0;
  int building_id = 0;
  // footprint corners in map coordinates, counter-clockwise
  std::array<std::array<double, 2>, 4> footprint{};
  double orientation_deg = 0.0;  // fall-line bearing the panel faces
  double annual_energy_kwh = 0.0;
};

// Packs panels onto every roof segment.
//
// Per segment, a rectangular grid is laid out in the frame rotated to the
// segment azimuth (flat segments face south, 180): cell size = width_m
// across-slope by length_m * cos(pitch) along the fall line (the plan-view
// foreshortening of a panel lying on the roof), anchored at the minimum
// corner of the segment's rotated bounding box (pixel edges).  A candidate
// survives if every raster pixel it covers belongs to the segment.  Energy =
// mean flux over covered pixels * panel area * efficiency *
// performance_ratio.  All candidates are then ranked globally by descending
// energy (ties: footprint centroid row, then column, then segment id) and
// indexed in that order.
std::vector<PanelPlacement> place_panels(const InstanceMap& segments,
                                         const std::vector<SegmentStats>& stats,
                                         const FluxRaster& flux,
                                         const PanelSpec& spec = {});

// Total annual energy per building, in global rank order.  When
// `cap_kilowatts` is set, each building keeps only its first
// ceil(cap_kilowatts * 1000 / rated_power_w) panels.
std::map<int, double> building_energy(const std::vector<PanelPlacement>& placements,
                                      const PanelSpec& spec,
                                      std::optional<double> cap_kilowatts = std::nullopt);

void write_panels(const std::string& path, const std::vector<PanelPlacement>& placements);
std::vector<PanelPlacement> read_panels(const std::string& path);

// Returns a copy of `base` with each panel footprint outlined as a one-pixel
// polyline (corners are map coordinates, drawn via the raster's
// georeferencing).  Edges falling outside the image are clipped.
ColorRaster render_panel_overlay(const ColorRaster& base,
                                 const std::vector<PanelPlacement>& placements,
                                 Rgb8 color = {255, 64, 32});

}  // namespace solarpipe
