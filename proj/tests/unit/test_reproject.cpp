#include <doctest.h>

#include <cmath>

#include "solarpipe/geom.hpp"
#include "solarpipe/reproject.hpp"
#include "solarpipe/synth_scene.hpp"
#include "solarpipe/view_geometry.hpp"

#include "helpers.hpp"

using namespace solarpipe;
using test_helpers::make_meta;

TEST_SUITE("view_geometry") {
  TEST_CASE("nadir view has zero displacement angles") {
    for (double az : {0.0, 90.0, 123.0, 359.0}) {
      ViewGeometry v = ViewGeometry::from_angles(90.0, az);
      CHECK(v.angle_x_deg == 0.0);
      CHECK(v.angle_y_deg == 0.0);
    }
  }

  TEST_CASE("45 degrees elevation from due north tilts rows only") {
    ViewGeometry v = ViewGeometry::from_angles(45.0, 0.0);
    CHECK(v.angle_y_deg == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(v.angle_x_deg == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("45 degrees elevation from due east tilts columns only") {
    ViewGeometry v = ViewGeometry::from_angles(45.0, 90.0);
    CHECK(v.angle_x_deg == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(v.angle_y_deg == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("angles follow the arctan decomposition for any view") {
    SplitMix64 rng(31);
    for (int i = 0; i < 200; ++i) {
      double elev = rng.uniform(1.0, 89.9);
      double az = rng.uniform(0.0, 360.0);
      ViewGeometry v = ViewGeometry::from_angles(elev, az);
      double tan_elev = std::tan(deg_to_rad(elev));
      CHECK(v.angle_y_deg ==
            doctest::Approx(rad_to_deg(std::atan(std::cos(deg_to_rad(az)) / tan_elev)))
                .epsilon(1e-12));
      CHECK(v.angle_x_deg ==
            doctest::Approx(rad_to_deg(std::atan(std::sin(deg_to_rad(az)) / tan_elev)))
                .epsilon(1e-12));
    }
  }

  TEST_CASE("elevation outside (0, 90] is rejected") {
    CHECK_THROWS_AS(ViewGeometry::from_angles(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ViewGeometry::from_angles(-10.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ViewGeometry::from_angles(90.5, 0.0), std::invalid_argument);
  }
}

TEST_SUITE("reproject") {
  TEST_CASE("zero heights are the identity with an empty occlusion mask") {
    GridMeta meta = make_meta(12, 10);
    HeightRaster values(meta);
    SplitMix64 rng(8);
    for (std::size_t i = 0; i < values.size(); ++i) values.at(i) = rng.uniform(0.0, 9.0);
    HeightRaster heights(meta, 0.0);
    auto res = reproject(values, heights, ViewGeometry::from_angles(35.0, 200.0),
                         Direction::to_nadir);
    CHECK(res.output == values);
    for (std::size_t i = 0; i < res.occlusion.size(); ++i) {
      CHECK(res.occlusion.at(i) == 0);
      CHECK(res.provenance.at(i) == static_cast<std::int64_t>(i));
    }
  }

  TEST_CASE("nadir view is bit-exact identity regardless of heights") {
    GridMeta meta = make_meta(20, 20);
    HeightRaster heights(meta);
    SplitMix64 rng(12);
    for (std::size_t i = 0; i < heights.size(); ++i) heights.at(i) = rng.uniform(0.0, 30.0);
    auto res = reproject(heights, heights, ViewGeometry::from_angles(90.0, 77.0),
                         Direction::to_offnadir);
    CHECK(res.output == heights);
  }

  TEST_CASE("a 2 m pixel at 0.25 m resolution and view (45, 0) moves 8 rows") {
    GridMeta meta = make_meta(5, 15, 0.25);
    HeightRaster heights(meta, 0.0);
    heights(2, 2) = 2.0;
    HeightRaster values(meta, 0.0);
    values(2, 2) = 7.0;
    auto res = reproject(values, heights, ViewGeometry::from_angles(45.0, 0.0),
                         Direction::to_offnadir);
    CHECK(res.output(10, 2) == 7.0);  // (2/0.25) * tan 45 = 8 rows south
    CHECK(res.provenance(10, 2) == 2 * meta.width + 2);
    // the source position is vacated: nothing else lands there
    CHECK(res.occlusion(2, 2) == 1);
  }

  TEST_CASE("direction to_nadir negates the displacement") {
    GridMeta meta = make_meta(5, 15, 0.25);
    HeightRaster heights(meta, 0.0);
    heights(10, 2) = 2.0;
    auto res = reproject(heights, heights, ViewGeometry::from_angles(45.0, 0.0),
                         Direction::to_nadir);
    CHECK(res.output(2, 2) == 2.0);  // 8 rows back north
  }

  TEST_CASE("collisions keep the highest source") {
    GridMeta meta = make_meta(40, 3, 0.25);
    HeightRaster heights(meta, 0.0);
    HeightRaster values(meta, 0.0);
    // 3 m displaces 12 rows... columns here: view from due east displaces
    // columns by h / 0.25 * tan(45) = 4 h
    heights(1, 20) = 3.0;  // -> column 32
    values(1, 20) = 111.0;
    heights(1, 12) = 5.0;  // -> column 32 as well
    values(1, 12) = 222.0;
    auto res = reproject(values, heights, ViewGeometry::from_angles(45.0, 90.0),
                         Direction::to_offnadir);
    CHECK(res.output(1, 32) == 222.0);  // the 5 m pixel wins
    CHECK(res.provenance(1, 32) == 1 * meta.width + 12);
  }

  TEST_CASE("colliding sources of different heights rank by height") {
    GridMeta meta = make_meta(40, 3, 0.25);
    HeightRaster heights(meta, 0.0);
    LabelRaster values(meta, 0);
    heights(0, 10) = 2.0;  // eastward view: col 10 + 4 * 2 = 18
    values(0, 10) = 7;
    heights(0, 2) = 4.0;  // col 2 + 4 * 4 = 18 as well
    values(0, 2) = 8;
    auto res = reproject(values, heights, ViewGeometry::from_angles(45.0, 90.0),
                         Direction::to_offnadir);
    CHECK(res.output(0, 18) == 8);  // 4 m beats 2 m
    CHECK(res.provenance(0, 18) == 2);
  }

  TEST_CASE("equal heights displace identically and never collide") {
    // the displacement depends only on the height, so two distinct sources
    // of equal height always land on distinct targets: a height raster of
    // one constant warps injectively
    GridMeta meta = make_meta(30, 30, 0.25);
    HeightRaster heights(meta, 1.5);
    auto res = reproject(heights, heights, ViewGeometry::from_angles(40.0, 235.0),
                         Direction::to_offnadir);
    std::int64_t filled = 0, inside = 0;
    ViewGeometry view = ViewGeometry::from_angles(40.0, 235.0);
    double dr = 1.5 / 0.25 * std::tan(deg_to_rad(view.angle_y_deg));
    double dc = 1.5 / 0.25 * std::tan(deg_to_rad(view.angle_x_deg));
    for (int row = 0; row < 30; ++row)
      for (int col = 0; col < 30; ++col) {
        std::int64_t tr = row + std::llround(dr), tc = col + std::llround(dc);
        if (tr < 0 || tr >= 30 || tc < 0 || tc >= 30) continue;
        ++inside;
        if (res.output.is_valid(static_cast<int>(tr), static_cast<int>(tc))) ++filled;
      }
    CHECK(filled == inside);  // one source per surviving target
  }

  TEST_CASE("doubling the height doubles the displacement") {
    GridMeta meta = make_meta(60, 3, 0.25);
    for (double h : {1.0, 2.0, 4.0}) {
      HeightRaster heights(meta, 0.0);
      heights(1, 4) = h;
      auto res = reproject(heights, heights, ViewGeometry::from_angles(45.0, 90.0),
                           Direction::to_offnadir);
      int expected_col = 4 + static_cast<int>(std::llround(4.0 * h));
      CHECK(res.output(1, expected_col) == h);
    }
  }

  TEST_CASE("targets outside the grid are dropped") {
    GridMeta meta = make_meta(4, 4, 0.25);
    HeightRaster heights(meta, 0.0);
    heights(3, 3) = 10.0;  // would displace 40 rows south, far off-grid
    auto res = reproject(heights, heights, ViewGeometry::from_angles(45.0, 0.0),
                         Direction::to_offnadir);
    CHECK(res.occlusion(3, 3) == 1);  // vacated and nothing replaced it
  }

  TEST_CASE("grid mismatch is rejected") {
    HeightRaster values(make_meta(4, 4));
    HeightRaster heights(make_meta(5, 4));
    CHECK_THROWS_AS(
        reproject(values, heights, ViewGeometry::from_angles(45.0, 0.0), Direction::to_nadir),
        std::invalid_argument);
  }

  TEST_CASE("occlusion mask marks exactly the unfilled targets") {
    GridMeta meta = make_meta(32, 32, 0.25);
    HeightRaster heights(meta, 0.0);
    for (int row = 10; row < 16; ++row)
      for (int col = 10; col < 16; ++col) heights(row, col) = 3.0;
    auto res = reproject(heights, heights, ViewGeometry::from_angles(50.0, 30.0),
                         Direction::to_offnadir);
    for (std::size_t i = 0; i < res.occlusion.size(); ++i) {
      CHECK((res.occlusion.at(i) == 1) == !res.output.is_valid(i));
      CHECK((res.occlusion.at(i) == 1) == !res.provenance.is_valid(i));
    }
  }
}

TEST_SUITE("reproject_with_sides") {
  TEST_CASE("flat heights match plain reprojection bit-exactly") {
    GridMeta meta = make_meta(16, 16, 0.25);
    HeightRaster heights(meta, 2.0);
    ViewGeometry view = ViewGeometry::from_angles(55.0, 120.0);
    auto plain = reproject(heights, heights, view, Direction::to_offnadir);
    auto sides = reproject_with_sides(heights, view, Direction::to_offnadir);
    CHECK(sides.output == plain.output);
    CHECK(sides.occlusion == plain.occlusion);
  }

  TEST_CASE("an isolated tower renders a wall of 1 m rungs") {
    GridMeta meta = make_meta(12, 5, 1.0);  // 1 m pixels: h tan(45) = h rows
    HeightRaster heights(meta, 0.0);
    heights(2, 2) = 4.0;
    auto res = reproject_with_sides(heights, ViewGeometry::from_angles(45.0, 0.0),
                                    Direction::to_offnadir);
    for (int k = 0; k <= 4; ++k) {
      REQUIRE(res.output.is_valid(2 + k, 2));
      CHECK(res.output(2 + k, 2) == doctest::Approx(k).epsilon(1e-12));
    }
  }

  TEST_CASE("gable down-view side has no holes next to the building") {
    SceneTruth truth = render_scene(test_helpers::gable_scene());
    auto res = reproject_with_sides(truth.heightmap, ViewGeometry::from_angles(55.0, 0.0),
                                    Direction::to_offnadir);
    // walls fill the gap the roof vacates: no occluded pixel may touch a
    // pixel that came from the building
    const GridMeta& meta = truth.heightmap.meta();
    for (int row = 1; row < meta.height - 1; ++row)
      for (int col = 1; col < meta.width - 1; ++col) {
        if (res.occlusion(row, col) == 0) continue;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            std::int64_t p = res.provenance(row + dr, col + dc);
            if (p < 0) continue;
            CHECK(truth.buildings.ids.at(static_cast<std::size_t>(p)) == 0);
          }
      }
  }

  TEST_CASE("forward then inverse recovers a flat-roof scene everywhere") {
    // constant roof height: the top rung of every pixel survives the forward
    // z-buffer, so every non-occluded pixel comes back bit-exactly
    SceneTruth truth = render_scene(test_helpers::flat_scene());
    ViewGeometry view = ViewGeometry::from_angles(55.0, 30.0);
    auto oblique = reproject_with_sides(truth.heightmap, view, Direction::to_offnadir);
    auto back = reproject(oblique.output, oblique.output, view, Direction::to_nadir);
    std::int64_t checked = 0, exact = 0;
    for (std::size_t i = 0; i < back.output.size(); ++i) {
      if (back.occlusion.at(i) != 0) continue;
      ++checked;
      if (back.output.at(i) == truth.heightmap.at(i)) ++exact;
    }
    CHECK(checked > 0);
    CHECK(exact == checked);
  }

  TEST_CASE("forward then inverse recovers a gable scene almost everywhere") {
    // sloped faces foreshorten in the oblique frame; isolated pixels on the
    // away-facing slope can lose their top rung, but at least 99% of the
    // non-occluded pixels must come back bit-exactly
    SceneTruth truth = render_scene(test_helpers::gable_scene());
    ViewGeometry view = ViewGeometry::from_angles(60.0, 135.0);
    auto oblique = reproject_with_sides(truth.heightmap, view, Direction::to_offnadir);
    auto back = reproject(oblique.output, oblique.output, view, Direction::to_nadir);
    std::int64_t checked = 0, exact = 0;
    for (std::size_t i = 0; i < back.output.size(); ++i) {
      if (back.occlusion.at(i) != 0) continue;
      ++checked;
      if (back.output.at(i) == truth.heightmap.at(i)) ++exact;
    }
    CHECK(checked > 0);
    CHECK(static_cast<double>(exact) >= 0.99 * static_cast<double>(checked));
  }
}

TEST_SUITE("infill_occlusions") {
  TEST_CASE("an empty occlusion mask returns the input bit-exactly") {
    GridMeta meta = make_meta(10, 10);
    HeightRaster img(meta);
    SplitMix64 rng(77);
    for (std::size_t i = 0; i < img.size(); ++i) img.at(i) = rng.uniform(0.0, 255.0);
    CHECK(infill_occlusions(img, MaskRaster(meta, 0)) == img);
  }

  TEST_CASE("a lone hole in a constant field fills with the constant") {
    GridMeta meta = make_meta(9, 9);
    HeightRaster img(meta, 42.0);
    MaskRaster occ(meta, 0);
    occ(4, 4) = 1;
    img(4, 4) = -1000.0;  // garbage behind the hole
    HeightRaster filled = infill_occlusions(img, occ);
    CHECK(filled(4, 4) == doctest::Approx(42.0).epsilon(1e-9));
    // untouched elsewhere
    for (std::size_t i = 0; i < img.size(); ++i)
      if (i != img.index(4, 4)) CHECK(filled.at(i) == img.at(i));
  }

  TEST_CASE("a hole in a linear ramp fills close to the ramp") {
    GridMeta meta = make_meta(24, 24, 1.0, 0.0, 23.0);
    HeightRaster img(meta);
    for (int row = 0; row < 24; ++row)
      for (int col = 0; col < 24; ++col) img(row, col) = 10.0 * col;
    MaskRaster occ(meta, 0);
    for (int row = 9; row < 15; ++row)
      for (int col = 9; col < 15; ++col) {
        occ(row, col) = 1;
        img(row, col) = 0.0;
      }
    HeightRaster filled = infill_occlusions(img, occ);
    for (int row = 9; row < 15; ++row)
      for (int col = 9; col < 15; ++col)
        CHECK(std::fabs(filled(row, col) - 10.0 * col) < 2.0 * 10.0);
    // linear ramps are harmonic, so diffusion converges to the ramp; the
    // 5x5 smoothing pass keeps values within a couple of intensity steps
  }

  TEST_CASE("an explicit fill raster wins over diffusion") {
    GridMeta meta = make_meta(6, 6);
    HeightRaster img(meta, 1.0);
    HeightRaster fill(meta, 9.0);
    MaskRaster occ(meta, 0);
    occ(3, 3) = 1;
    HeightRaster filled = infill_occlusions(img, occ, &fill);
    CHECK(filled(3, 3) == 9.0);
    CHECK(filled(0, 0) == 1.0);
  }

  TEST_CASE("fully occluded input without a fill raster is an error") {
    GridMeta meta = make_meta(4, 4);
    CHECK_THROWS_AS(infill_occlusions(HeightRaster(meta, 0.0), MaskRaster(meta, 1)),
                    std::invalid_argument);
  }

  TEST_CASE("color images fill per channel") {
    GridMeta meta = make_meta(7, 7);
    ColorRaster img(meta, Rgb8{10, 200, 90});
    MaskRaster occ(meta, 0);
    occ(3, 3) = 1;
    img(3, 3) = Rgb8{0, 0, 0};
    ColorRaster filled = infill_occlusions(img, occ);
    CHECK(std::abs(static_cast<int>(filled(3, 3).r) - 10) <= 1);
    CHECK(std::abs(static_cast<int>(filled(3, 3).g) - 200) <= 1);
    CHECK(std::abs(static_cast<int>(filled(3, 3).b) - 90) <= 1);
  }
}
