#include "solarpipe/panels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "solarpipe/geom.hpp"

namespace solarpipe {

namespace {

struct Candidate {
  PanelPlacement placement;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
};

}  // namespace

std::vector<PanelPlacement> place_panels(const InstanceMap& segments,
                                         const std::vector<SegmentStats>& stats,
                                         const FluxRaster& flux, const PanelSpec& spec) {
  if (segments.ids.meta() != flux.meta())
    throw std::invalid_argument("place_panels: segment and flux grids must match");
  if (!(spec.length_m > 0.0) || !(spec.width_m > 0.0))
    throw std::invalid_argument("place_panels: panel dimensions must be positive");
  const GridMeta& m = segments.ids.meta();
  const double res = m.spatial_resolution;

  // segment id -> pixel indices (row-major)
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < segments.ids.size(); ++i)
    if (segments.ids.is_valid(i) && segments.ids.at(i) > 0)
      members[segments.ids.at(i)].push_back(i);

  std::vector<Candidate> candidates;
  for (const SegmentStats& st : stats) {
    auto it = members.find(st.id);
    if (it == members.end()) continue;
    const auto& pixels = it->second;

    // rotated frame: v along the fall line (flat roofs face south), u across
    double azimuth = st.azimuth_deg.value_or(180.0);
    double az = deg_to_rad(azimuth);
    double vx = std::sin(az), vy = std::cos(az);   // downslope, map (east, north)
    double ux = std::cos(az), uy = -std::sin(az);  // across-slope

    double umin = 0.0, umax = 0.0, vmin = 0.0, vmax = 0.0;
    bool first = true;
    for (std::size_t idx : pixels) {
      int row = static_cast<int>(idx / m.width), col = static_cast<int>(idx % m.width);
      double x = m.x(col), y = m.y(row);
      double u = x * ux + y * uy;
      double v = x * vx + y * vy;
      if (first) {
        umin = umax = u;
        vmin = vmax = v;
        first = false;
      } else {
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    }
    // bounding box extended from pixel centers to pixel edges
    double u0 = umin - res / 2.0, u1 = umax + res / 2.0;
    double v0 = vmin - res / 2.0, v1 = vmax + res / 2.0;

    // plan-view cell: a panel lying on the slope foreshortens along the fall
    // line by cos(pitch)
    double du = spec.width_m;
    double dv = spec.length_m * std::cos(deg_to_rad(st.pitch_deg));
    if (!(dv > 0.0)) continue;

    constexpr double kEps = 1e-9;
    int ni = static_cast<int>(std::floor((u1 - u0) / du + kEps));
    int nj = static_cast<int>(std::floor((v1 - v0) / dv + kEps));

    for (int j = 0; j < nj; ++j) {
      for (int i = 0; i < ni; ++i) {
        // bounds written so adjacent cells share bit-identical boundaries:
        // half-open membership then partitions pixels exactly
        double cu0 = u0 + i * du, cu1 = u0 + (i + 1) * du;
        double cv0 = v0 + j * dv, cv1 = v0 + (j + 1) * dv;

        // every grid pixel whose center falls inside the cell must belong to
        // the segment; the cell corners must land on segment pixels too (so
        // cells cannot hang past the mask between pixel centers)
        double corners_u[4] = {cu0, cu1, cu1, cu0};
        double corners_v[4] = {cv0, cv0, cv1, cv1};
        double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
        bool ok = true;
        for (int k = 0; k < 4; ++k) {
          double x = corners_u[k] * ux + corners_v[k] * vx;
          double y = corners_u[k] * uy + corners_v[k] * vy;
          if (k == 0) {
            min_x = max_x = x;
            min_y = max_y = y;
          } else {
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
          }
          int col = static_cast<int>(std::floor(m.col_of(x) + 0.5));
          int row = static_cast<int>(std::floor(m.row_of(y) + 0.5));
          if (!segments.ids.in_bounds(row, col) || segments.ids(row, col) != st.id) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;

        int col_lo = std::max(0, static_cast<int>(std::floor(m.col_of(min_x))));
        int col_hi = std::min(m.width - 1, static_cast<int>(std::ceil(m.col_of(max_x))));
        int row_lo = std::max(0, static_cast<int>(std::floor(m.row_of(max_y))));
        int row_hi = std::min(m.height - 1, static_cast<int>(std::ceil(m.row_of(min_y))));
        double flux_sum = 0.0;
        std::int64_t covered = 0;
        for (int row = row_lo; row <= row_hi && ok; ++row) {
          for (int col = col_lo; col <= col_hi; ++col) {
            double x = m.x(col), y = m.y(row);
            double u = x * ux + y * uy;
            double v = x * vx + y * vy;
            // half-open cells partition shared boundaries deterministically
            if (u < cu0 || u >= cu1 || v < cv0 || v >= cv1) continue;
            if (segments.ids(row, col) != st.id || !flux.is_valid(row, col)) {
              ok = false;
              break;
            }
            flux_sum += flux(row, col);
            ++covered;
          }
        }
        if (!ok || covered == 0) continue;

        Candidate cand;
        PanelPlacement& pl = cand.placement;
        pl.segment_id = st.id;
        pl.building_id = st.building_id;
        pl.orientation_deg = azimuth;
        double area = spec.length_m * spec.width_m;
        pl.annual_energy_kwh =
            (flux_sum / covered) * area * spec.efficiency * spec.performance_ratio;
        for (int k = 0; k < 4; ++k) {
          pl.footprint[static_cast<std::size_t>(k)] = {
              corners_u[k] * ux + corners_v[k] * vx, corners_u[k] * uy + corners_v[k] * vy};
        }
        double cx = (cu0 + cu1) / 2.0 * ux + (cv0 + cv1) / 2.0 * vx;
        double cy = (cu0 + cu1) / 2.0 * uy + (cv0 + cv1) / 2.0 * vy;
        cand.centroid_row = m.row_of(cy);
        cand.centroid_col = m.col_of(cx);
        candidates.push_back(std::move(cand));
      }
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.placement.annual_energy_kwh != b.placement.annual_energy_kwh)
      return a.placement.annual_energy_kwh > b.placement.annual_energy_kwh;
    if (a.centroid_row != b.centroid_row) return a.centroid_row < b.centroid_row;
    if (a.centroid_col != b.centroid_col) return a.centroid_col < b.centroid_col;
    return a.placement.segment_id < b.placement.segment_id;
  });

  std::vector<PanelPlacement> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].placement.panel_index = static_cast<int>(i);
    out.push_back(candidates[i].placement);
  }
  return out;
}

std::map<int, double> building_energy(const std::vector<PanelPlacement>& placements,
                                      const PanelSpec& spec,
                                      std::optional<double> cap_kilowatts) {
  std::int64_t max_panels = std::numeric_limits<std::int64_t>::max();
  if (cap_kilowatts) {
    if (!(*cap_kilowatts > 0.0) || !(spec.rated_power_w > 0.0))
      throw std::invalid_argument("building_energy: cap and rated power must be positive");
    max_panels = static_cast<std::int64_t>(std::ceil(*cap_kilowatts * 1000.0 / spec.rated_power_w));
  }
  std::map<int, double> energy;
  std::map<int, std::int64_t> counts;
  // placements are in global rank order, so per building the most productive
  // panels fill the cap first
  for (const PanelPlacement& p : placements) {
    auto& used = counts[p.building_id];
    if (used >= max_panels) continue;
    ++used;
    energy[p.building_id] += p.annual_energy_kwh;
  }
  return energy;
}

void write_panels(const std::string& path, const std::vector<PanelPlacement>& placements) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PanelPlacement& p : placements) {
    nlohmann::json corners = nlohmann::json::array();
    for (const auto& c : p.footprint) corners.push_back({c[0], c[1]});
    arr.push_back({{"panel_index", p.panel_index},
                   {"segment_id", p.segment_id},
                   {"building_id", p.building_id},
                   {"footprint", corners},
                   {"orientation_deg", p.orientation_deg},
                   {"annual_energy_kwh", p.annual_energy_kwh}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << arr.dump(2) << "\n";
}

std::vector<PanelPlacement> read_panels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  nlohmann::json arr;
  in >> arr;
  std::vector<PanelPlacement> out;
  for (const auto& j : arr) {
    PanelPlacement p;
    p.panel_index = j.at("panel_index").get<int>();
    p.segment_id = j.at("segment_id").get<int>();
    p.building_id = j.at("building_id").get<int>();
    p.orientation_deg = j.at("orientation_deg").get<double>();
    p.annual_energy_kwh = j.at("annual_energy_kwh").get<double>();
    const auto& corners = j.at("footprint");
    for (std::size_t k = 0; k < 4; ++k) {
      p.footprint[k] = {corners.at(k).at(0).get<double>(), corners.at(k).at(1).get<double>()};
    }
    out.push_back(p);
  }
  return out;
}

ColorRaster render_panel_overlay(const ColorRaster& base,
                                 const std::vector<PanelPlacement>& placements, Rgb8 color) {
  ColorRaster out = base;
  const GridMeta& meta = out.meta();
  auto draw_edge = [&](const std::array<double, 2>& a, const std::array<double, 2>& b) {
    double r0 = meta.row_of(a[1]), c0 = meta.col_of(a[0]);
    double r1 = meta.row_of(b[1]), c1 = meta.col_of(b[0]);
    // stepping at half-pixel intervals leaves no gaps in the polyline
    int steps = 1 + static_cast<int>(std::ceil(2.0 * std::max(std::fabs(r1 - r0),
                                                              std::fabs(c1 - c0))));
    for (int i = 0; i <= steps; ++i) {
      double t = static_cast<double>(i) / steps;
      int row = static_cast<int>(std::lround(r0 + t * (r1 - r0)));
      int col = static_cast<int>(std::lround(c0 + t * (c1 - c0)));
      if (out.in_bounds(row, col)) out(row, col) = color;
    }
  };
  for (const PanelPlacement& p : placements) {
    for (std::size_t k = 0; k < 4; ++k) draw_edge(p.footprint[k], p.footprint[(k + 1) % 4]);
  }
  return out;
}

}  // namespace solarpipe
