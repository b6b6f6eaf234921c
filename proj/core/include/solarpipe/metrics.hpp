#pragma once

#include <map>
#include <string>
#include <vector>

#include "solarpipe/raster.hpp"
#include "solarpipe/roof_segments.hpp"

namespace solarpipe {

// Mean absolute error between prediction and label over pixels that are
// valid in both, pass the optional mask, and (if `region` is given) fall
// inside a building footprint.  Throws std::invalid_argument when no pixel
// qualifies.
double masked_mae(const HeightRaster& pred, const HeightRaster& label,
                  const MaskRaster* mask = nullptr, const InstanceMap* region = nullptr);

struct SegmentMatch {
  int label_id = 0;
  int pred_id = 0;
  std::int64_t intersection = 0;
  std::int64_t union_count = 0;
  double iou = 0.0;
  std::int64_t label_area_px = 0;
};

struct IouResult {
  std::vector<SegmentMatch> matches;   // one entry per matched label segment
  double area_weighted_iou = 0.0;      // unmatched label segments count as 0
  int unmatched_labels = 0;
  int unmatched_preds = 0;
};

// Greedy one-to-one matching between label and predicted segments over
// masked-in pixels: label segments are visited in decreasing area (ties:
// lower id) and claim the unmatched predicted segment with the largest
// intersection (ties: lower id), provided the intersection is nonempty.
// IoU is computed over masked-in pixels.  Throws std::invalid_argument if
// the label map has no segments.
IouResult match_and_iou(const InstanceMap& pred, const InstanceMap& label,
                        const MaskRaster* mask = nullptr);

struct AngleErrors {
  double pitch_error_deg = 0.0;    // area-weighted over matched pairs
  double azimuth_error_deg = 0.0;  // area-weighted over pairs where both defined
  int pitch_pairs = 0;
  int azimuth_pairs = 0;
};

// Pitch and azimuth errors over matched segment pairs, weighted by label
// segment area.  Azimuth distance is circular (<= 180); pairs where either
// side is flat (undefined azimuth) are excluded from the azimuth mean.
// Throws std::invalid_argument when `matches` is empty.
AngleErrors segment_angle_errors(const std::vector<SegmentStats>& pred_stats,
                                 const std::vector<SegmentStats>& label_stats,
                                 const std::vector<SegmentMatch>& matches);

struct MapeResult {
  double mape = 0.0;  // mean of |pred - label| / label over common ids
  int common = 0;
  int skipped = 0;    // common ids skipped because label <= 0
};

// Mean absolute percentage error between per-building energies, over
// building ids present in both maps.  Throws std::invalid_argument when no
// common id has a positive label value.
MapeResult energy_mape(const std::map<int, double>& pred, const std::map<int, double>& label);

struct MetricsReport {
  double mae_all_m = 0.0;
  double mae_buildings_m = 0.0;
  double area_weighted_iou = 0.0;
  int matched_segments = 0;
  int unmatched_labels = 0;
  int unmatched_preds = 0;
  double pitch_error_deg = 0.0;
  double azimuth_error_deg = 0.0;
  int azimuth_pairs = 0;
  double mape_uncapped = 0.0;
  double mape_capped = 0.0;
  double cap_kilowatts = 0.0;
  int energy_buildings = 0;
  int energy_skipped = 0;
  std::int64_t masked_pixels = 0;
  // per-instance detail
  std::vector<SegmentMatch> matches;
  std::map<int, double> pred_energy_kwh;   // uncapped, by building id
  std::map<int, double> label_energy_kwh;  // uncapped, by building id
};

void write_metrics_report(const std::string& path, const MetricsReport& report);

}  // namespace solarpipe
