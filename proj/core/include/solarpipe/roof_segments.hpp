#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "solarpipe/raster.hpp"

namespace solarpipe {

// Candidate roof-plane orientations for the MRF: an optional flat label plus
// one label per (pitch, azimuth) pair.  Defaults give 61 labels: flat and
// pitches {10..50} x 12 azimuths (0, 30, ..., 330).
struct SegmentationParams {
  std::vector<double> pitches_deg = {10.0, 20.0, 30.0, 40.0, 50.0};
  int azimuth_count = 12;
  bool include_flat = true;
  double smoothness_lambda = 15.0;   // Potts penalty per disagreeing 4-neighbor pair
  double data_cost_cap_deg = 60.0;   // cap on the angular data cost, degrees
  int passes = 2;                    // full alpha-expansion sweeps
  double min_segment_area_m2 = 2.0;  // post-process merge threshold
  double cost_scale = 1e6;           // fixed-point scale: costs -> integer capacities
};

struct PlaneLabel {
  double pitch_deg = 0.0;
  std::optional<double> azimuth_deg;  // nullopt for the flat label
  Vec3 normal{0.0, 0.0, 1.0};
};

// The label set induced by the parameters, in fixed order: flat first, then
// pitches in listed order, each with azimuths 0, 360/n, ..., in increasing
// order.  Alpha-expansion sweeps labels in exactly this order.
std::vector<PlaneLabel> plane_labels(const SegmentationParams& params);

struct SegmentStats {
  int id = 0;
  int building_id = 0;
  std::int64_t pixel_count = 0;
  double area_m2 = 0.0;
  double pitch_deg = 0.0;
  std::optional<double> azimuth_deg;  // undefined for flat segments
  Vec3 mean_normal{0.0, 0.0, 1.0};
};

struct SegmentationResult {
  InstanceMap segments;  // kind = roof_segments; ids canonical (see below)
  std::vector<SegmentStats> stats;
};

// Per-building alpha-expansion energy after each accepted expansion move,
// for regression checks; energies are the integer fixed-point MRF values.
struct SegmentationDiagnostics {
  struct BuildingTrace {
    int building_id = 0;
    std::vector<std::int64_t> energies;
  };
  std::vector<BuildingTrace> traces;
};

// Decomposes every building footprint into planar roof segments.
//
// Surface normals come from within-footprint Sobel gradients of the DSM
// (window samples outside the building are replaced by the center height, so
// roof pixels never mix with ground).  Per building, a multi-label MRF over
// its pixels is solved by alpha-expansion (each move a binary min-cut):
// data cost = angular distance between the pixel normal and the label
// normal, capped at data_cost_cap_deg; smoothness = Potts penalty
// smoothness_lambda on 4-neighbor pairs inside the building.  Costs are
// scaled to integers by cost_scale so moves are exact.  The labeling starts
// from the per-pixel data-cost argmin (ties: lower label id) and labels are
// swept in fixed id order for `passes` full passes.  Post-process:
// 4-connected components of equal label become instances; instances smaller
// than min_segment_area_m2 merge into the adjacent instance with the longest
// shared boundary (ties: lower id; isolated ones stay); segments are
// renumbered 1..N by the row-major position of each segment's first pixel.
//
// Pixels with invalid DSM inside a building are left unsegmented (id 0).
SegmentationResult segment_roofs(const HeightRaster& dsm, const InstanceMap& buildings,
                                 const SegmentationParams& params = {},
                                 SegmentationDiagnostics* diagnostics = nullptr);

// Fraction of each building's pixels covered by roof segments.
std::map<int, double> coverage_fraction(const InstanceMap& buildings,
                                        const InstanceMap& segments);

// MRF energy of an arbitrary labeling of one building's pixels (row-major
// order over that building's pixels), in the same integer fixed-point units
// as the diagnostics traces.  Exposed for optimality tests against
// exhaustive enumeration on tiny inputs.
std::int64_t labeling_energy(const HeightRaster& dsm, const InstanceMap& buildings,
                             int building_id, const std::vector<int>& labeling,
                             const SegmentationParams& params);

// Mean-normal statistics for an existing segmentation; normals are derived
// from the DSM exactly as segment_roofs derives them.  The orientation mean
// runs over interior pixels (3x3 window entirely inside the segment), since
// boundary windows blend adjacent planes and bias the estimate toward flat;
// segments with no interior pixel average over all their pixels instead.
std::vector<SegmentStats> compute_segment_stats(const InstanceMap& segments,
                                                const InstanceMap& buildings,
                                                const HeightRaster& dsm);

void write_segment_stats(const std::string& path, const std::vector<SegmentStats>& stats);
std::vector<SegmentStats> read_segment_stats(const std::string& path);

}  // namespace solarpipe
