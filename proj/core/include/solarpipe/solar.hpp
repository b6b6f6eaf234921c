#pragma once

#include <vector>

#include "solarpipe/raster.hpp"

namespace solarpipe {

// One sun position with the number of hours per year it represents.
struct SunSample {
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;   // compass bearing
  double weight_hours = 0.0;
};

// Cooper's approximation of the solar declination, degrees.
double solar_declination_deg(int day_of_year);

struct SunPosition {
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
};

// Sun elevation and compass azimuth for a latitude (degrees, +north), a day
// of year (1..365) and local solar time in hours (solar noon = 12).
SunPosition sun_position(double latitude_deg, int day_of_year, double solar_time_hours);

// The annual sun-position table: one representative day per month (the
// 15th), `samples_per_day` positions at the midpoints of equal time slices
// (t_j = (j + 0.5) * 24 / k), each weighted by days_in_month * 24 / k hours.
// Only positions above the horizon are returned.  February uses 28 days; the
// table covers 8760 hours before horizon culling.  Latitudes beyond +-66
// (polar day/night) are rejected.
std::vector<SunSample> sun_positions(double latitude_deg, int samples_per_day = 24);

struct ShadingParams {
  double step_fraction = 0.5;    // march step as a fraction of the pixel size
  double max_distance_m = 100.0; // horizontal search radius
  double tolerance_m = 1e-3;     // occluder must clear the ray by this much
};

// True if the DSM blocks the ray from pixel (row, col) toward the sun: the
// ray is marched horizontally in steps of step_fraction * resolution up to
// max_distance_m; at each step the bilinearly interpolated DSM is compared
// against the ray height z0 + d * tan(elevation).  Rays that leave the tile
// are unshaded.
bool is_shaded(const HeightRaster& dsm, int row, int col, const SunSample& sun,
               const ShadingParams& params = {});

struct IrradianceModel {
  double dni_w_m2 = 1000.0;      // direct normal irradiance while the sun is up
  double diffuse_fraction = 0.0; // isotropic diffuse as a fraction of DNI
};

// Annual insolation in kWh/m^2/year:
//   flux(p) = sum_s w_s * [ DNI * max(0, n.s) * (1 - shaded)
//                           + DNI * diffuse_fraction * (1 + cos(pitch)) / 2 ] / 1000
// Pixels with invalid DSM or normals are invalid.  When `domain` is given,
// only pixels with domain != 0 are computed (others invalid).  Work is
// partitioned across `workers` threads by row ranges; outputs are identical
// for every worker count.
FluxRaster annual_flux(const HeightRaster& dsm, const NormalField& normals,
                       const std::vector<SunSample>& suns, const IrradianceModel& model,
                       const ShadingParams& params = {}, const MaskRaster* domain = nullptr,
                       int workers = 1);

}  // namespace solarpipe
