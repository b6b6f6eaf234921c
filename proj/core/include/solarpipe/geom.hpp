#pragma once

#include <cmath>

namespace solarpipe {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// wraps an angle in degrees into [0, 360)
inline double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w;
}

// shortest angular distance between two compass bearings, in [0, 180]
inline double circular_distance_deg(double a, double b) {
  double d = std::fabs(wrap_degrees(a) - wrap_degrees(b));
  return d > 180.0 ? 360.0 - d : d;
}

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) {
  double n = norm(v);
  return {v.x / n, v.y / n, v.z / n};
}

// unit vector pointing at the sky position given by a compass bearing
// (clockwise from north) and an elevation above the horizon.  The frame is
// x = east, y = north, z = up.
inline Vec3 direction_from_bearing(double azimuth_deg, double elevation_deg) {
  double az = deg_to_rad(azimuth_deg);
  double el = deg_to_rad(elevation_deg);
  double ce = std::cos(el);
  return {std::sin(az) * ce, std::cos(az) * ce, std::sin(el)};
}

}  // namespace solarpipe
