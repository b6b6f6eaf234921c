#pragma once

#include <optional>
#include <string>
#include <vector>

#include "solarpipe/metrics.hpp"
#include "solarpipe/panels.hpp"
#include "solarpipe/raster.hpp"
#include "solarpipe/roof_segments.hpp"
#include "solarpipe/solar.hpp"

namespace solarpipe {

// End-to-end run configuration.  Loaded from JSON by validate_config; every
// field has a JSON key of the same name.
struct PipelineConfig {
  // inputs
  std::string heightmap_path;       // required: per-pixel height above ground (.asc)
  std::string buildings_path;       // required: building instance ids (.asc)
  std::string rgb_path;             // optional: color image (.png + sidecar)
  std::string dtm_path;             // optional: terrain at working resolution (.asc)
  std::string dem_path;             // optional: coarse elevation (.asc), resampled
  std::string labels_prefix;        // optional: ground-truth artifact prefix

  // acquisition geometry
  double view_elevation_deg = 90.0;
  double view_azimuth_deg = 0.0;

  // site + irradiance
  double latitude_deg = 0.0;
  int samples_per_day = 24;
  IrradianceModel irradiance;
  ShadingParams shading;

  // processing
  SegmentationParams segmentation;
  PanelSpec panel;
  double cap_kilowatts = 5.0;
  int tile_size = 1024;     // tiles larger inputs for flux + stitches back
  int tile_margin = 64;     // feathering overlap per tile edge
  bool flux_full_grid = false;  // default: flux only on building pixels
  int workers = 0;          // 0 = default_worker_count()

  std::string output_dir;   // required
};

struct ConfigValidation {
  PipelineConfig config;
  std::vector<std::string> errors;  // empty means the config is usable
  bool ok() const { return errors.empty(); }
};

// Parses and cross-checks a JSON config file, collecting every violation
// (unknown keys, missing required fields, out-of-range values) instead of
// stopping at the first.
ConfigValidation validate_config(const std::string& path);
ConfigValidation validate_config_json(const std::string& json_text);

struct StageRecord {
  std::string name;
  double wall_ms = 0.0;
  std::vector<std::string> outputs;  // files written by the stage
};

struct RunManifest {
  std::string version;
  std::vector<StageRecord> stages;
  std::vector<std::string> warnings;
};

// Runs the full pipeline: reproject the inputs to nadir, infill occlusions,
// compose the DSM, segment roofs, compute flux, place panels, total per
// building, and (when labels_prefix is set) evaluate against the labels.
// Artifacts are written under output_dir with the prefix "out." (see
// artifact_path); a manifest.json records stages, timings and outputs.
// Throws PipelineError on stage failure; files written by earlier stages
// are left in place.
RunManifest run_pipeline(const PipelineConfig& config);

class PipelineError : public std::runtime_error {
 public:
  PipelineError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Artifact naming shared by `run`, `synth` and `evaluate`: a prefix P means
// P.dsm.asc, P.segments.asc, P.segment_stats.json, P.buildings.asc, ...
std::string artifact_path(const std::string& prefix, const std::string& suffix);

// Scoring configuration for comparing two artifact prefixes.
struct EvaluationInputs {
  std::string pred_prefix;
  std::string label_prefix;
  double latitude_deg = 0.0;
  int samples_per_day = 24;
  IrradianceModel irradiance;
  ShadingParams shading;
  PanelSpec panel;
  double cap_kilowatts = 5.0;
  bool apply_masks = true;  // temporal mismatch + coverage masks
  std::vector<std::string> extra_mask_paths;  // additional 0/1 masks, ANDed in
  int workers = 0;
};

// Loads both artifact sets, builds the evaluation mask, computes MAE / IoU /
// angle errors, recomputes per-building energies from each side's artifacts
// with identical settings, and reports energy MAPE (uncapped and capped).
MetricsReport evaluate_run(const EvaluationInputs& inputs);

}  // namespace solarpipe
