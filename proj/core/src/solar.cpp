#include "solarpipe/solar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "solarpipe/geom.hpp"
#include "solarpipe/parallel.hpp"

namespace solarpipe {

namespace {

// day-of-year of the 15th of each month, and month lengths (non-leap year)
constexpr int kDay15[12] = {15, 46, 74, 105, 135, 166, 196, 227, 258, 288, 319, 349};
constexpr int kDaysInMonth[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

}  // namespace

double solar_declination_deg(int day_of_year) {
  if (day_of_year < 1 || day_of_year > 365)
    throw std::invalid_argument("solar_declination_deg: day_of_year must be in [1, 365]");
  return 23.45 * std::sin(deg_to_rad(360.0 * (284.0 + day_of_year) / 365.0));
}

SunPosition sun_position(double latitude_deg, int day_of_year, double solar_time_hours) {
  if (latitude_deg < -90.0 || latitude_deg > 90.0)
    throw std::invalid_argument("sun_position: latitude must be in [-90, 90]");
  double decl = deg_to_rad(solar_declination_deg(day_of_year));
  double lat = deg_to_rad(latitude_deg);
  double hour_angle = deg_to_rad(15.0 * (solar_time_hours - 12.0));

  double sin_elev = std::sin(lat) * std::sin(decl) +
                    std::cos(lat) * std::cos(decl) * std::cos(hour_angle);
  sin_elev = std::clamp(sin_elev, -1.0, 1.0);
  double elev = std::asin(sin_elev);

  // compass azimuth from the south-referenced horizontal coordinates:
  // east component = -cos(decl) sin(H), north = sin(decl) cos(lat) -
  // cos(decl) sin(lat) cos(H)
  double east = -std::cos(decl) * std::sin(hour_angle);
  double north = std::sin(decl) * std::cos(lat) - std::cos(decl) * std::sin(lat) * std::cos(hour_angle);
  double az = wrap_degrees(rad_to_deg(std::atan2(east, north)));

  return {rad_to_deg(elev), az};
}

std::vector<SunSample> sun_positions(double latitude_deg, int samples_per_day) {
  if (samples_per_day < 1)
    throw std::invalid_argument("sun_positions: samples_per_day must be >= 1");
  // polar day/night breaks the representative-day weighting scheme
  if (latitude_deg < -66.0 || latitude_deg > 66.0)
    throw std::invalid_argument("sun_positions: latitude must be in [-66, 66]");
  std::vector<SunSample> out;
  double slice_hours = 24.0 / samples_per_day;
  for (int month = 0; month < 12; ++month) {
    double weight = kDaysInMonth[month] * slice_hours;
    for (int j = 0; j < samples_per_day; ++j) {
      // midpoint of the j-th slice: unbiased day-length coverage, and never
      // exactly on the sunrise/sunset boundary for common sample counts
      double t = (j + 0.5) * slice_hours;
      SunPosition pos = sun_position(latitude_deg, kDay15[month], t);
      if (pos.elevation_deg > 0.0)
        out.push_back({pos.elevation_deg, pos.azimuth_deg, weight});
    }
  }
  return out;
}

namespace {

// bilinear DSM sample at fractional pixel coordinates; pixels outside the
// grid or stencils touching invalid pixels read as "no occluder"
bool sample_dsm(const HeightRaster& dsm, double row, double col, double& value) {
  const GridMeta& m = dsm.meta();
  if (row < 0.0 || row > m.height - 1 || col < 0.0 || col > m.width - 1) return false;
  int r0 = std::min(static_cast<int>(row), m.height - 2);
  int c0 = std::min(static_cast<int>(col), m.width - 2);
  if (m.height == 1) r0 = 0;
  if (m.width == 1) c0 = 0;
  int r1 = std::min(r0 + 1, m.height - 1);
  int c1 = std::min(c0 + 1, m.width - 1);
  if (!dsm.is_valid(r0, c0) || !dsm.is_valid(r0, c1) || !dsm.is_valid(r1, c0) ||
      !dsm.is_valid(r1, c1))
    return false;
  double fr = row - r0, fc = col - c0;
  double top = dsm(r0, c0) * (1.0 - fc) + dsm(r0, c1) * fc;
  double bottom = dsm(r1, c0) * (1.0 - fc) + dsm(r1, c1) * fc;
  value = top * (1.0 - fr) + bottom * fr;
  return true;
}

bool is_shaded_impl(const HeightRaster& dsm, int row, int col, const SunSample& sun,
                    const ShadingParams& params, double dsm_max) {
  if (sun.elevation_deg <= 0.0) return true;  // sun below horizon: no direct beam
  const GridMeta& m = dsm.meta();
  double z0 = dsm(row, col);
  double step = params.step_fraction * m.spatial_resolution;
  if (!(step > 0.0)) throw std::invalid_argument("is_shaded: step must be positive");
  double tan_elev = std::tan(deg_to_rad(sun.elevation_deg));
  double az = deg_to_rad(sun.azimuth_deg);
  // horizontal direction toward the sun, in pixel units: columns grow east,
  // rows grow south
  double dcol = std::sin(az) / m.spatial_resolution;
  double drow = -std::cos(az) / m.spatial_resolution;
  for (double d = step; d <= params.max_distance_m; d += step) {
    double ray_z = z0 + d * tan_elev;
    if (ray_z >= dsm_max) return false;  // above everything: can't be blocked
    double sample;
    if (!sample_dsm(dsm, row + d * drow, col + d * dcol, sample)) return false;
    if (sample > ray_z + params.tolerance_m) return true;
  }
  return false;
}

double raster_max(const HeightRaster& r) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r.is_valid(i)) m = std::max(m, r.at(i));
  return m;
}

}  // namespace

bool is_shaded(const HeightRaster& dsm, int row, int col, const SunSample& sun,
               const ShadingParams& params) {
  if (!dsm.in_bounds(row, col)) throw std::invalid_argument("is_shaded: pixel out of bounds");
  if (!dsm.is_valid(row, col)) throw std::invalid_argument("is_shaded: pixel has no height");
  return is_shaded_impl(dsm, row, col, sun, params, raster_max(dsm));
}

FluxRaster annual_flux(const HeightRaster& dsm, const NormalField& normals,
                       const std::vector<SunSample>& suns, const IrradianceModel& model,
                       const ShadingParams& params, const MaskRaster* domain, int workers) {
  if (normals.meta() != dsm.meta())
    throw std::invalid_argument("annual_flux: dsm and normals grids must match");
  if (domain && domain->meta() != dsm.meta())
    throw std::invalid_argument("annual_flux: domain grid mismatch");
  if (!(model.dni_w_m2 >= 0.0) || model.diffuse_fraction < 0.0)
    throw std::invalid_argument("annual_flux: irradiance values must be non-negative");

  FluxRaster out(dsm.meta(), 0.0, false);
  double dsm_max = raster_max(dsm);

  struct SunTerm {
    Vec3 dir;
    double weight;
  };
  std::vector<SunTerm> terms(suns.size());
  for (std::size_t s = 0; s < suns.size(); ++s)
    terms[s] = {direction_from_bearing(suns[s].azimuth_deg, suns[s].elevation_deg),
                suns[s].weight_hours};

  const int w = dsm.meta().width;
  parallel_for(workers, dsm.meta().height, [&](std::int64_t row_begin, std::int64_t row_end) {
    for (std::int64_t row = row_begin; row < row_end; ++row) {
      for (int col = 0; col < w; ++col) {
        std::size_t i = out.index(static_cast<int>(row), col);
        if (domain && (*domain).at(i) == 0) continue;
        if (!dsm.is_valid(i) || !normals.is_valid(i)) continue;
        const Vec3& n = normals.at(i);
        double diffuse_shape = (1.0 + n.z) / 2.0;  // cos(pitch) = n.z for unit normals
        double acc = 0.0;
        for (std::size_t s = 0; s < suns.size(); ++s) {
          double cos_incidence = dot(n, terms[s].dir);
          double direct = 0.0;
          if (cos_incidence > 0.0 &&
              !is_shaded_impl(dsm, static_cast<int>(row), col, suns[s], params, dsm_max))
            direct = model.dni_w_m2 * cos_incidence;
          double diffuse = model.dni_w_m2 * model.diffuse_fraction * diffuse_shape;
          acc += terms[s].weight * (direct + diffuse);
        }
        out.at(i) = acc / 1000.0;
        out.set_valid(i, true);
      }
    }
  });
  return out;
}

}  // namespace solarpipe
