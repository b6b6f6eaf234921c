#include <doctest.h>

#include <cmath>

#include "solarpipe/geom.hpp"
#include "solarpipe/synth_scene.hpp"
#include "solarpipe/terrain.hpp"

#include "helpers.hpp"

using namespace solarpipe;
using test_helpers::make_meta;

namespace {

// raster sampling z = a*x + b*y + c at pixel centers
HeightRaster plane_raster(const GridMeta& meta, double a, double b, double c) {
  HeightRaster r(meta);
  for (int row = 0; row < meta.height; ++row)
    for (int col = 0; col < meta.width; ++col)
      r(row, col) = a * meta.x(col) + b * meta.y(row) + c;
  return r;
}

// unit normal of a plane with the given pitch, downslope bearing `azimuth`
Vec3 plane_normal(double pitch_deg, double azimuth_deg) {
  double slope = std::tan(deg_to_rad(pitch_deg));
  double az = deg_to_rad(azimuth_deg);
  return normalized({slope * std::sin(az), slope * std::cos(az), 1.0});
}

}  // namespace

TEST_SUITE("sobel") {
  TEST_CASE("constant raster has zero gradients") {
    auto [gx, gy] = sobel_gradients(HeightRaster(make_meta(12, 9), 42.0));
    for (std::size_t i = 0; i < gx.size(); ++i) {
      CHECK(gx.at(i) == 0.0);
      CHECK(gy.at(i) == 0.0);
    }
  }

  TEST_CASE("eastward ramp z = x returns slope 1 on interior pixels") {
    GridMeta meta = make_meta(10, 10, 0.25);
    auto [gx, gy] = sobel_gradients(plane_raster(meta, 1.0, 0.0, 0.0));
    for (int row = 1; row < 9; ++row)
      for (int col = 1; col < 9; ++col) {
        CHECK(gx(row, col) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(gy(row, col) == doctest::Approx(0.0).epsilon(1e-12));
      }
  }

  TEST_CASE("northward ramp z = 2y returns slope 2 on interior pixels") {
    GridMeta meta = make_meta(10, 10, 0.25);
    auto [gx, gy] = sobel_gradients(plane_raster(meta, 0.0, 2.0, 0.0));
    for (int row = 1; row < 9; ++row)
      for (int col = 1; col < 9; ++col) {
        CHECK(gy(row, col) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(gx(row, col) == doctest::Approx(0.0).epsilon(1e-12));
      }
  }

  TEST_CASE("affine surfaces are recovered exactly on the interior") {
    GridMeta meta = make_meta(16, 14, 0.25, -3.0, 8.0);
    SplitMix64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
      double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
      auto [gx, gy] = sobel_gradients(plane_raster(meta, a, b, rng.uniform(-5.0, 5.0)));
      for (int row = 1; row < meta.height - 1; ++row)
        for (int col = 1; col < meta.width - 1; ++col) {
          CHECK(gx(row, col) == doctest::Approx(a).epsilon(1e-9));
          CHECK(gy(row, col) == doctest::Approx(b).epsilon(1e-9));
        }
    }
  }

  TEST_CASE("gradient is invalid where the window touches an invalid pixel") {
    HeightRaster r(make_meta(7, 7), 1.0);
    r.set_valid(3, 3, false);
    auto [gx, gy] = sobel_gradients(r);
    for (int row = 2; row <= 4; ++row)
      for (int col = 2; col <= 4; ++col) CHECK_FALSE(gx.is_valid(row, col));
    CHECK(gx.is_valid(0, 0));
    CHECK(gy.is_valid(6, 6));
  }

  TEST_CASE("footprint masking keeps roof gradients clear of the ground") {
    // 5 m slab on zero ground; inside the footprint the roof is flat, so
    // masked gradients must be 0 even at the footprint boundary
    GridMeta meta = make_meta(12, 12, 0.25);
    HeightRaster r(meta, 0.0);
    MaskRaster footprint(meta, 0);
    for (int row = 3; row < 9; ++row)
      for (int col = 3; col < 9; ++col) {
        r(row, col) = 5.0;
        footprint(row, col) = 1;
      }
    auto [gx, gy] = sobel_gradients(r, &footprint);
    for (int row = 3; row < 9; ++row)
      for (int col = 3; col < 9; ++col) {
        CHECK(gx(row, col) == 0.0);
        CHECK(gy(row, col) == 0.0);
      }
    CHECK_FALSE(gx.is_valid(0, 0));  // outside the footprint: no gradient
  }

  TEST_CASE("rasters smaller than the kernel are rejected") {
    CHECK_THROWS_AS(sobel_gradients(HeightRaster(make_meta(2, 5), 0.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(sobel_gradients(HeightRaster(make_meta(5, 2), 0.0)),
                    std::invalid_argument);
  }
}

TEST_SUITE("surface_normals") {
  TEST_CASE("flat raster points straight up") {
    NormalField n = surface_normals(HeightRaster(make_meta(6, 6), 3.0));
    for (std::size_t i = 0; i < n.size(); ++i) {
      CHECK(n.at(i).x == 0.0);
      CHECK(n.at(i).y == 0.0);
      CHECK(n.at(i).z == 1.0);
    }
  }

  TEST_CASE("z = x tilts the normal west") {
    GridMeta meta = make_meta(8, 8, 0.25);
    NormalField n = surface_normals(plane_raster(meta, 1.0, 0.0, 0.0));
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int row = 1; row < 7; ++row)
      for (int col = 1; col < 7; ++col) {
        CHECK(n(row, col).x == doctest::Approx(-inv_sqrt2).epsilon(1e-12));
        CHECK(n(row, col).y == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(n(row, col).z == doctest::Approx(inv_sqrt2).epsilon(1e-12));
      }
  }

  TEST_CASE("normals are unit length") {
    GridMeta meta = make_meta(20, 20, 0.25);
    HeightRaster r(meta);
    SplitMix64 rng(5);
    for (std::size_t i = 0; i < r.size(); ++i) r.at(i) = rng.uniform(0.0, 2.0);
    NormalField n = surface_normals(r);
    for (std::size_t i = 0; i < n.size(); ++i)
      CHECK(norm(n.at(i)) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_SUITE("pitch_azimuth") {
  TEST_CASE("vertical normal is flat with undefined azimuth") {
    PitchAzimuth pa = pitch_azimuth({0.0, 0.0, 1.0});
    CHECK(pa.pitch_deg == doctest::Approx(0.0));
    CHECK_FALSE(pa.azimuth_deg.has_value());
  }

  TEST_CASE("z = x plane: pitch 45, downslope due west") {
    double s = 1.0 / std::sqrt(2.0);
    PitchAzimuth pa = pitch_azimuth({-s, 0.0, s});
    CHECK(pa.pitch_deg == doctest::Approx(45.0).epsilon(1e-9));
    REQUIRE(pa.azimuth_deg.has_value());
    CHECK(*pa.azimuth_deg == doctest::Approx(270.0).epsilon(1e-9));
  }

  TEST_CASE("north-rising plane faces south") {
    double s = 1.0 / std::sqrt(2.0);
    PitchAzimuth pa = pitch_azimuth({0.0, -s, s});
    CHECK(pa.pitch_deg == doctest::Approx(45.0).epsilon(1e-9));
    REQUIRE(pa.azimuth_deg.has_value());
    CHECK(*pa.azimuth_deg == doctest::Approx(180.0).epsilon(1e-9));
  }

  TEST_CASE("round-trips any pitch and bearing") {
    SplitMix64 rng(17);
    for (int i = 0; i < 50; ++i) {
      double pitch = rng.uniform(1.0, 80.0);
      double azimuth = rng.uniform(0.0, 360.0);
      PitchAzimuth pa = pitch_azimuth(plane_normal(pitch, azimuth));
      CHECK(pa.pitch_deg == doctest::Approx(pitch).epsilon(1e-9));
      REQUIRE(pa.azimuth_deg.has_value());
      CHECK(circular_distance_deg(*pa.azimuth_deg, azimuth) < 1e-9);
    }
  }

  TEST_CASE("analytic raster plane recovers its pitch and azimuth") {
    // property: pitch_azimuth(surface_normals(plane)) matches the plane to
    // 1e-4 degrees on interior pixels
    GridMeta meta = make_meta(12, 12, 0.25);
    double pitch = 30.0, azimuth = 120.0;
    double slope = std::tan(deg_to_rad(pitch));
    double az = deg_to_rad(azimuth);
    // downslope toward `azimuth` means z decreases along that bearing
    NormalField n =
        surface_normals(plane_raster(meta, -slope * std::sin(az), -slope * std::cos(az), 50.0));
    for (int row = 1; row < 11; ++row)
      for (int col = 1; col < 11; ++col) {
        PitchAzimuth pa = pitch_azimuth(n(row, col));
        CHECK(pa.pitch_deg == doctest::Approx(pitch).epsilon(1e-4));
        REQUIRE(pa.azimuth_deg.has_value());
        CHECK(circular_distance_deg(*pa.azimuth_deg, azimuth) < 1e-4);
      }
  }

  TEST_CASE("rejects non-unit and downward normals") {
    CHECK_THROWS_AS(pitch_azimuth({0.0, 0.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(pitch_azimuth({0.0, 0.0, -1.0}), std::invalid_argument);
  }
}

TEST_SUITE("hillshade") {
  TEST_CASE("flat raster under a zenith sun is full white") {
    GrayRaster shade = hillshade(surface_normals(HeightRaster(make_meta(6, 6), 2.0)), 90.0, 0.0);
    for (std::size_t i = 0; i < shade.size(); ++i) CHECK(shade.at(i) == 255);
  }

  TEST_CASE("flat raster at 30 degrees elevation shades to half gray") {
    // sin(30 deg) computed through radians lands a hair under 0.5, so half
    // gray rounds down to 127 rather than up to 128
    GrayRaster shade = hillshade(surface_normals(HeightRaster(make_meta(6, 6), 2.0)), 30.0, 315.0);
    for (std::size_t i = 0; i < shade.size(); ++i) CHECK(shade.at(i) == 127);
  }

  TEST_CASE("sun-facing gable plane is brighter than the far plane") {
    // plane normals evaluated analytically; sun from due south at 45
    Vec3 south_face = plane_normal(30.0, 180.0);
    Vec3 north_face = plane_normal(30.0, 0.0);
    NormalField normals(make_meta(2, 1));
    normals(0, 0) = south_face;
    normals(0, 1) = north_face;
    GrayRaster shade = hillshade(normals, 45.0, 180.0);
    CHECK(shade(0, 0) > shade(0, 1));
  }
}

TEST_SUITE("resample_bilinear") {
  TEST_CASE("identity when the target grid equals the source grid") {
    GridMeta meta = make_meta(9, 9, 0.25, 4.0, 9.0);
    HeightRaster r(meta);
    SplitMix64 rng(3);
    for (std::size_t i = 0; i < r.size(); ++i) r.at(i) = rng.uniform(0.0, 10.0);
    r.set_valid(5, false);
    CHECK(resample_bilinear(r, meta) == r);
  }

  TEST_CASE("constant coarse terrain upsamples to the same constant") {
    // 30 m DEM covering the whole fine tile
    GridMeta coarse = make_meta(5, 5, 30.0, 0.0, 120.0);
    GridMeta fine = make_meta(40, 40, 0.25, 40.0, 80.0);
    HeightRaster out = resample_bilinear(HeightRaster(coarse, 100.0), fine);
    for (std::size_t i = 0; i < out.size(); ++i) {
      REQUIRE(out.is_valid(i));
      CHECK(out.at(i) == doctest::Approx(100.0).epsilon(1e-12));
    }
  }

  TEST_CASE("linear ramps resample exactly at any resolution") {
    GridMeta coarse = make_meta(6, 6, 2.0, 0.0, 10.0);
    GridMeta fine = make_meta(16, 16, 0.5, 1.0, 9.0);
    HeightRaster src = plane_raster(coarse, 3.0, -2.0, 7.0);
    HeightRaster out = resample_bilinear(src, fine);
    HeightRaster expect = plane_raster(fine, 3.0, -2.0, 7.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      REQUIRE(out.is_valid(i));
      CHECK(out.at(i) == doctest::Approx(expect.at(i)).epsilon(1e-12));
    }
  }

  TEST_CASE("2x2 grid interpolates by hand values") {
    // centers at y = 1 (row 0, value 0) and y = 0 (row 1, value 10);
    // a 5-row target at res 0.25 between them reads 0, 2.5, 5, 7.5, 10
    GridMeta src_meta = make_meta(2, 2, 1.0, 0.0, 1.0);
    HeightRaster src(src_meta);
    src(0, 0) = src(0, 1) = 0.0;
    src(1, 0) = src(1, 1) = 10.0;
    GridMeta target = make_meta(5, 5, 0.25, 0.0, 1.0);
    HeightRaster out = resample_bilinear(src, target);
    for (int row = 0; row < 5; ++row)
      for (int col = 0; col < 5; ++col) {
        REQUIRE(out.is_valid(row, col));
        CHECK(out(row, col) == doctest::Approx(2.5 * row).epsilon(1e-12));
      }
  }

  TEST_CASE("pixels outside the source hull are invalid") {
    GridMeta src_meta = make_meta(4, 4, 1.0, 0.0, 3.0);
    GridMeta target = make_meta(10, 10, 1.0, -3.0, 6.0);
    HeightRaster out = resample_bilinear(HeightRaster(src_meta, 1.0), target);
    CHECK_FALSE(out.is_valid(0, 0));           // far corner, outside
    CHECK(out.is_valid(4, 4));                 // inside the hull
    CHECK_FALSE(out.all_valid());
  }

  TEST_CASE("disjoint extents are an error") {
    GridMeta src_meta = make_meta(4, 4, 1.0, 0.0, 3.0);
    GridMeta target = make_meta(4, 4, 1.0, 100.0, 103.0);
    CHECK_THROWS_AS(resample_bilinear(HeightRaster(src_meta, 1.0), target),
                    std::invalid_argument);
  }
}

TEST_SUITE("compose_dsm") {
  TEST_CASE("adds height above ground to the terrain") {
    GridMeta meta = make_meta(4, 4);
    HeightRaster dsm = compose_dsm(HeightRaster(meta, 5.0), HeightRaster(meta, 100.0));
    for (std::size_t i = 0; i < dsm.size(); ++i) CHECK(dsm.at(i) == 105.0);
  }

  TEST_CASE("zero heightmap returns the terrain bit-exactly") {
    GridMeta meta = make_meta(6, 5);
    HeightRaster terrain(meta);
    SplitMix64 rng(21);
    for (std::size_t i = 0; i < terrain.size(); ++i) terrain.at(i) = rng.uniform(50.0, 90.0);
    HeightRaster dsm = compose_dsm(HeightRaster(meta, 0.0), terrain);
    for (std::size_t i = 0; i < dsm.size(); ++i) CHECK(dsm.at(i) == terrain.at(i));
  }

  TEST_CASE("subtracting terrain from a scene dsm recovers the heightmap") {
    SceneTruth truth = render_scene(test_helpers::gable_scene());
    CHECK(compose_dsm(truth.heightmap, truth.dtm) == truth.dsm);
  }

  TEST_CASE("grid mismatch and validity propagation") {
    CHECK_THROWS_AS(
        compose_dsm(HeightRaster(make_meta(4, 4), 0.0), HeightRaster(make_meta(5, 4), 0.0)),
        std::invalid_argument);
    GridMeta meta = make_meta(3, 3);
    HeightRaster h(meta, 1.0), t(meta, 2.0);
    h.set_valid(4, false);
    HeightRaster dsm = compose_dsm(h, t);
    CHECK_FALSE(dsm.is_valid(4));
    CHECK(dsm.is_valid(0));
  }
}
