#pragma once

namespace solarpipe {

// Oblique viewing geometry of a satellite image.  The per-axis displacement
// angles decompose the view ray's tilt into the grid's row (y, north-south)
// and column (x, east-west) axes:
//
//   angle_y = arctan(cos(azimuth) / tan(elevation))
//   angle_x = arctan(sin(azimuth) / tan(elevation))
//
// A roof point at height h above ground appears displaced from its true
// ground position by h * tan(angle) pixels' worth of meters along each axis
// (toward the viewer's far side).  At elevation 90 both angles are exactly 0.
struct ViewGeometry {
  double elevation_deg = 90.0;  // view elevation above horizon, (0, 90]
  double azimuth_deg = 0.0;     // compass bearing of the satellite, [0, 360)
  double angle_x_deg = 0.0;     // displacement angle along +x (east)
  double angle_y_deg = 0.0;     // displacement angle along -y (north)

  // Derives the per-axis angles from elevation and azimuth.  Throws
  // std::invalid_argument unless 0 < elevation <= 90.
  static ViewGeometry from_angles(double elevation_deg, double azimuth_deg);
};

}  // namespace solarpipe
