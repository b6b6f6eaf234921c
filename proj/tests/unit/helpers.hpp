#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <system_error>

#include "solarpipe/raster.hpp"
#include "solarpipe/synth_scene.hpp"

namespace test_helpers {

inline solarpipe::GridMeta make_meta(int width, int height, double res = 0.25,
                                     double origin_x = 0.0, double origin_y = 0.0) {
  solarpipe::GridMeta meta;
  meta.width = width;
  meta.height = height;
  meta.spatial_resolution = res;
  meta.origin_x = origin_x;
  meta.origin_y = origin_y;
  return meta;
}

// Unique scratch directory, removed when the test that owns it finishes.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      auto candidate = base / ("solarpipe_test_" + std::to_string(::getpid()) + "_" +
                               std::to_string(counter_++) + "_" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        break;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

// A single east-west gable (ridge bearing 90) centered in a square tile.
// span across the ridge = width_m, so face pitch = atan(2 * rise / width_m).
inline solarpipe::SceneSpec gable_scene(double ridge_rise_m = 2.0, double width_m = 8.0,
                                        int tile_px = 96, double res = 0.25) {
  solarpipe::SceneSpec spec;
  spec.meta = make_meta(tile_px, tile_px, res, 0.0, tile_px * res);
  spec.terrain.base_m = 0.0;
  solarpipe::BuildingSpec b;
  b.center_x = tile_px * res / 2.0 + 0.11;  // off the pixel grid on purpose
  b.center_y = tile_px * res / 2.0 + 0.07;
  b.length_m = 14.0;
  b.width_m = width_m;
  b.ridge_orientation_deg = 90.0;
  b.eave_height_m = 4.0;
  b.ridge_height_m = 4.0 + ridge_rise_m;
  b.roof = solarpipe::RoofType::gable;
  spec.buildings.push_back(b);
  return spec;
}

inline solarpipe::SceneSpec hip_scene(int tile_px = 96, double res = 0.25) {
  solarpipe::SceneSpec spec = gable_scene(2.0, 8.0, tile_px, res);
  spec.buildings[0].roof = solarpipe::RoofType::hip;
  return spec;
}

inline solarpipe::SceneSpec flat_scene(int tile_px = 64, double res = 0.25) {
  solarpipe::SceneSpec spec = gable_scene(0.0, 8.0, tile_px, res);
  spec.buildings[0].roof = solarpipe::RoofType::flat;
  spec.buildings[0].ridge_height_m = spec.buildings[0].eave_height_m;
  return spec;
}

}  // namespace test_helpers
