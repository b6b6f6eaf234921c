#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "solarpipe/raster.hpp"
#include "solarpipe/roof_segments.hpp"

namespace solarpipe {

// Planar ground: z = base + slope_x * (x - origin_x) + slope_y * (y - origin_y).
struct TerrainSpec {
  double base_m = 0.0;
  double slope_x = 0.0;
  double slope_y = 0.0;
};

enum class RoofType { flat, gable, hip };

// Rectangular building, axis u along the ridge (bearing
// ridge_orientation_deg), axis v across it.  Roof heights are relative to
// the ground: eaves at eave_height_m, the ridge at ridge_height_m.
struct BuildingSpec {
  double center_x = 0.0;
  double center_y = 0.0;
  double length_m = 0.0;  // along the ridge
  double width_m = 0.0;   // across the ridge
  double ridge_orientation_deg = 0.0;
  double eave_height_m = 0.0;
  double ridge_height_m = 0.0;
  RoofType roof = RoofType::gable;
};

struct SceneSpec {
  GridMeta meta;
  TerrainSpec terrain;
  std::vector<BuildingSpec> buildings;
};

// Ground-truth description of one roof face.
struct FaceTruth {
  int segment_id = 0;
  int building_id = 0;
  int face_index = 0;
  double pitch_deg = 0.0;
  std::optional<double> azimuth_deg;  // downslope bearing; nullopt when flat
  Vec3 normal{0.0, 0.0, 1.0};
  std::int64_t pixel_count = 0;
};

struct SceneTruth {
  HeightRaster dtm;        // terrain
  HeightRaster heightmap;  // height above ground
  HeightRaster dsm;        // dtm + heightmap (bit-exact sum)
  InstanceMap buildings;   // ids 1..B in spec order
  InstanceMap segments;    // roof faces, ids sequential across buildings
  ColorRaster rgb;         // flat-shaded faces over textured ground
  std::vector<FaceTruth> faces;
};

// Rasterizes the scene at pixel centers.  Analytic truth: every face's
// pitch / azimuth / normal come from the roof geometry, not from raster
// derivatives.  Gable roofs have 2 faces (downslope +-v), hip roofs 4 (the
// nearest-eave rule; seam ties go to the lower face index), flat roofs 1.
// Throws std::invalid_argument when building footprints overlap or a
// building has ridge below eave.
SceneTruth render_scene(const SceneSpec& spec);

// DSM with i.i.d. Gaussian noise (mean 0, sigma in meters) added to every
// valid pixel.  Deterministic across platforms: SplitMix64 drives a
// Box-Muller transform, two draws per pixel in row-major order.
HeightRaster perturb(const HeightRaster& dsm, double noise_sigma_m, std::uint64_t seed);

void write_scene_spec(const std::string& path, const SceneSpec& spec);
SceneSpec read_scene_spec(const std::string& path);

// Uniform helpers over the same SplitMix64 stream, for building randomized
// test scenes reproducibly.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive bounds

 private:
  std::uint64_t state_;
};

}  // namespace solarpipe
