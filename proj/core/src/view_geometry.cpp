#include "solarpipe/view_geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "solarpipe/geom.hpp"

namespace solarpipe {

ViewGeometry ViewGeometry::from_angles(double elevation_deg, double azimuth_deg) {
  if (!(elevation_deg > 0.0) || elevation_deg > 90.0)
    throw std::invalid_argument("ViewGeometry: elevation must be in (0, 90]");
  ViewGeometry v;
  v.elevation_deg = elevation_deg;
  v.azimuth_deg = wrap_degrees(azimuth_deg);
  if (elevation_deg == 90.0) {
    // tan(90 deg) is not representable; the nadir case is exact by definition
    v.angle_x_deg = 0.0;
    v.angle_y_deg = 0.0;
    return v;
  }
  double tan_elev = std::tan(deg_to_rad(elevation_deg));
  double az = deg_to_rad(v.azimuth_deg);
  v.angle_y_deg = rad_to_deg(std::atan(std::cos(az) / tan_elev));
  v.angle_x_deg = rad_to_deg(std::atan(std::sin(az) / tan_elev));
  return v;
}

}  // namespace solarpipe
