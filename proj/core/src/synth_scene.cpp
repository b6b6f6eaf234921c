#include "solarpipe/synth_scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "solarpipe/geom.hpp"

namespace solarpipe {

namespace {

struct LocalFrame {
  double rx, ry;  // unit vector along the ridge (map east, north)
  double ax, ay;  // unit vector across the ridge
};

LocalFrame frame_of(const BuildingSpec& b) {
  double t = deg_to_rad(b.ridge_orientation_deg);
  return {std::sin(t), std::cos(t), std::cos(t), -std::sin(t)};
}

int face_count(RoofType roof) {
  switch (roof) {
    case RoofType::flat: return 1;
    case RoofType::gable: return 2;
    case RoofType::hip: return 4;
  }
  return 0;
}

// Relative roof height and face index at local coordinates (u along ridge,
// v across).  Assumes |u| <= L/2 and |v| <= W/2.
void roof_at(const BuildingSpec& b, double u, double v, double& rel, int& face) {
  double half_w = b.width_m / 2.0;
  double half_l = b.length_m / 2.0;
  switch (b.roof) {
    case RoofType::flat:
      rel = b.eave_height_m;
      face = 0;
      return;
    case RoofType::gable: {
      double slope = (b.ridge_height_m - b.eave_height_m) / half_w;
      rel = b.eave_height_m + slope * (half_w - std::fabs(v));
      face = v >= 0.0 ? 0 : 1;  // the seam (v = 0) goes to the lower face id
      return;
    }
    case RoofType::hip: {
      double slope = (b.ridge_height_m - b.eave_height_m) / half_w;
      double d[4] = {half_w - v, half_w + v, half_l - u, half_l + u};
      double dmin = std::min(std::min(d[0], d[1]), std::min(d[2], d[3]));
      rel = b.eave_height_m + slope * std::min(dmin, half_w);
      face = 0;
      for (int k = 1; k < 4; ++k)
        if (d[k] < d[face]) face = k;  // ties keep the lower face id
      return;
    }
  }
  rel = 0.0;
  face = 0;
}

// Downslope bearing of face `k`; nullopt for flat roofs and for gable/hip
// with zero rise.
std::optional<double> face_azimuth(const BuildingSpec& b, int k) {
  if (b.roof == RoofType::flat || b.ridge_height_m == b.eave_height_m) return std::nullopt;
  LocalFrame f = frame_of(b);
  double ex = 0.0, ny = 0.0;
  if (k == 0) { ex = f.ax; ny = f.ay; }
  else if (k == 1) { ex = -f.ax; ny = -f.ay; }
  else if (k == 2) { ex = f.rx; ny = f.ry; }
  else { ex = -f.rx; ny = -f.ry; }
  return wrap_degrees(rad_to_deg(std::atan2(ex, ny)));
}

double face_pitch(const BuildingSpec& b) {
  if (b.roof == RoofType::flat) return 0.0;
  return rad_to_deg(std::atan(2.0 * (b.ridge_height_m - b.eave_height_m) / b.width_m));
}

Rgb8 hsv_to_rgb(double h_deg, double s, double v) {
  double c = v * s;
  double hp = wrap_degrees(h_deg) / 60.0;
  double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  double m = v - c;
  auto q = [&](double t) { return static_cast<std::uint8_t>(std::lround(255.0 * (t + m))); };
  return {q(r), q(g), q(b)};
}

Rgb8 face_color(int segment_id) {
  double hue = std::fmod(segment_id * 0.618033988749895, 1.0) * 360.0;
  return hsv_to_rgb(hue, 0.65, 0.9);
}

Rgb8 ground_color(int row, int col) {
  // cheap deterministic speckle so the ground is not a constant field
  std::uint32_t h = static_cast<std::uint32_t>(row) * 73856093u ^
                    static_cast<std::uint32_t>(col) * 19349663u;
  std::uint8_t g = static_cast<std::uint8_t>(90 + (h % 41));
  return {g, static_cast<std::uint8_t>(g + 8), g};
}

}  // namespace

SceneTruth render_scene(const SceneSpec& spec) {
  spec.meta.validate();
  for (const BuildingSpec& b : spec.buildings) {
    if (!(b.length_m > 0.0) || !(b.width_m > 0.0))
      throw std::invalid_argument("render_scene: building dimensions must be positive");
    if (b.roof != RoofType::flat && b.ridge_height_m < b.eave_height_m)
      throw std::invalid_argument("render_scene: ridge below eave");
    if (b.eave_height_m < 0.0)
      throw std::invalid_argument("render_scene: negative eave height");
  }

  const GridMeta& m = spec.meta;
  SceneTruth out{HeightRaster(m), HeightRaster(m), HeightRaster(m),
                 {LabelRaster(m, 0), InstanceKind::buildings},
                 {LabelRaster(m, 0), InstanceKind::roof_segments},
                 ColorRaster(m),
                 {}};

  // face-index per pixel, per building, before segment ids are assigned
  LabelRaster face_grid(m, -1);
  std::vector<std::array<std::int64_t, 4>> face_pixels(spec.buildings.size(),
                                                       {0, 0, 0, 0});

  for (int row = 0; row < m.height; ++row) {
    for (int col = 0; col < m.width; ++col) {
      double x = m.x(col), y = m.y(row);
      double ground = spec.terrain.base_m + spec.terrain.slope_x * (x - m.origin_x) +
                      spec.terrain.slope_y * (y - m.origin_y);
      out.dtm(row, col) = ground;
      double rel = 0.0;
      for (std::size_t bi = 0; bi < spec.buildings.size(); ++bi) {
        const BuildingSpec& b = spec.buildings[bi];
        LocalFrame f = frame_of(b);
        double dx = x - b.center_x, dy = y - b.center_y;
        double u = dx * f.rx + dy * f.ry;
        double v = dx * f.ax + dy * f.ay;
        if (std::fabs(u) > b.length_m / 2.0 || std::fabs(v) > b.width_m / 2.0) continue;
        if (out.buildings.ids(row, col) != 0)
          throw std::invalid_argument("render_scene: building footprints overlap");
        int face = 0;
        roof_at(b, u, v, rel, face);
        out.buildings.ids(row, col) = static_cast<int>(bi) + 1;
        face_grid(row, col) = face;
        ++face_pixels[bi][static_cast<std::size_t>(face)];
      }
      out.heightmap(row, col) = rel;
      out.dsm(row, col) = ground + rel;
    }
  }

  // segment ids sequential across (building, face), skipping empty faces
  std::vector<std::array<int, 4>> face_segment(spec.buildings.size(), {0, 0, 0, 0});
  int next_id = 0;
  for (std::size_t bi = 0; bi < spec.buildings.size(); ++bi) {
    const BuildingSpec& b = spec.buildings[bi];
    for (int k = 0; k < face_count(b.roof); ++k) {
      if (face_pixels[bi][static_cast<std::size_t>(k)] == 0) continue;
      int id = ++next_id;
      face_segment[bi][static_cast<std::size_t>(k)] = id;
      FaceTruth truth;
      truth.segment_id = id;
      truth.building_id = static_cast<int>(bi) + 1;
      truth.face_index = k;
      truth.pitch_deg = face_pitch(b);
      truth.azimuth_deg = face_azimuth(b, k);
      double p = deg_to_rad(truth.pitch_deg);
      if (truth.azimuth_deg) {
        double az = deg_to_rad(*truth.azimuth_deg);
        truth.normal = {std::sin(az) * std::sin(p), std::cos(az) * std::sin(p), std::cos(p)};
      }
      truth.pixel_count = face_pixels[bi][static_cast<std::size_t>(k)];
      out.faces.push_back(truth);
    }
  }

  for (int row = 0; row < m.height; ++row) {
    for (int col = 0; col < m.width; ++col) {
      int bid = out.buildings.ids(row, col);
      if (bid == 0) {
        out.rgb(row, col) = ground_color(row, col);
        continue;
      }
      int face = face_grid(row, col);
      int sid = face_segment[static_cast<std::size_t>(bid - 1)][static_cast<std::size_t>(face)];
      out.segments.ids(row, col) = sid;
      out.rgb(row, col) = face_color(sid);
    }
  }
  return out;
}

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int SplitMix64::uniform_int(int lo, int hi) {
  return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
}

HeightRaster perturb(const HeightRaster& dsm, double noise_sigma_m, std::uint64_t seed) {
  if (noise_sigma_m < 0.0) throw std::invalid_argument("perturb: sigma must be non-negative");
  HeightRaster out = dsm;
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < out.size(); ++i) {
    // two draws per pixel whether used or not, so the stream position depends
    // only on the pixel index
    double u1 = rng.uniform();
    double u2 = rng.uniform();
    if (!out.is_valid(i)) continue;
    double z = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * kPi * u2);
    out.at(i) += noise_sigma_m * z;
  }
  return out;
}

namespace {

std::string roof_name(RoofType r) {
  switch (r) {
    case RoofType::flat: return "flat";
    case RoofType::gable: return "gable";
    case RoofType::hip: return "hip";
  }
  return "flat";
}

RoofType roof_from_name(const std::string& s) {
  if (s == "flat") return RoofType::flat;
  if (s == "gable") return RoofType::gable;
  if (s == "hip") return RoofType::hip;
  throw std::invalid_argument("unknown roof type: " + s);
}

}  // namespace

void write_scene_spec(const std::string& path, const SceneSpec& spec) {
  nlohmann::json buildings = nlohmann::json::array();
  for (const BuildingSpec& b : spec.buildings) {
    buildings.push_back({{"center_x", b.center_x},
                         {"center_y", b.center_y},
                         {"length_m", b.length_m},
                         {"width_m", b.width_m},
                         {"ridge_orientation_deg", b.ridge_orientation_deg},
                         {"eave_height_m", b.eave_height_m},
                         {"ridge_height_m", b.ridge_height_m},
                         {"roof", roof_name(b.roof)}});
  }
  nlohmann::json j{{"meta",
                    {{"width", spec.meta.width},
                     {"height", spec.meta.height},
                     {"origin_x", spec.meta.origin_x},
                     {"origin_y", spec.meta.origin_y},
                     {"spatial_resolution", spec.meta.spatial_resolution}}},
                   {"terrain",
                    {{"base_m", spec.terrain.base_m},
                     {"slope_x", spec.terrain.slope_x},
                     {"slope_y", spec.terrain.slope_y}}},
                   {"buildings", buildings}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

SceneSpec read_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  nlohmann::json j;
  in >> j;
  SceneSpec spec;
  const auto& meta = j.at("meta");
  spec.meta.width = meta.at("width").get<int>();
  spec.meta.height = meta.at("height").get<int>();
  spec.meta.origin_x = meta.at("origin_x").get<double>();
  spec.meta.origin_y = meta.at("origin_y").get<double>();
  spec.meta.spatial_resolution = meta.at("spatial_resolution").get<double>();
  const auto& terrain = j.at("terrain");
  spec.terrain.base_m = terrain.at("base_m").get<double>();
  spec.terrain.slope_x = terrain.at("slope_x").get<double>();
  spec.terrain.slope_y = terrain.at("slope_y").get<double>();
  for (const auto& bj : j.at("buildings")) {
    BuildingSpec b;
    b.center_x = bj.at("center_x").get<double>();
    b.center_y = bj.at("center_y").get<double>();
    b.length_m = bj.at("length_m").get<double>();
    b.width_m = bj.at("width_m").get<double>();
    b.ridge_orientation_deg = bj.at("ridge_orientation_deg").get<double>();
    b.eave_height_m = bj.at("eave_height_m").get<double>();
    b.ridge_height_m = bj.at("ridge_height_m").get<double>();
    b.roof = roof_from_name(bj.at("roof").get<std::string>());
    spec.buildings.push_back(b);
  }
  return spec;
}

}  // namespace solarpipe
