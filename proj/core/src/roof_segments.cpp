#include "solarpipe/roof_segments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "solarpipe/geom.hpp"
#include "solarpipe/max_flow.hpp"
#include "solarpipe/terrain.hpp"

namespace solarpipe {

namespace {

double angle_between_deg(const Vec3& a, const Vec3& b) {
  return rad_to_deg(std::acos(std::clamp(dot(a, b), -1.0, 1.0)));
}

MaskRaster footprint_of(const InstanceMap& buildings) {
  MaskRaster m(buildings.ids.meta());
  for (std::size_t i = 0; i < m.size(); ++i)
    m.at(i) = buildings.ids.is_valid(i) && buildings.ids.at(i) > 0 ? 1 : 0;
  return m;
}

// One building's MRF: pixels in row-major order, 4-neighbor pairs, and the
// per-pixel x per-label integer data costs.
struct BuildingProblem {
  int building_id = 0;
  std::vector<std::size_t> pixels;            // raster indices
  std::vector<std::pair<int, int>> edges;     // local index pairs, first < second
  std::vector<std::vector<std::int64_t>> data;  // [label][local pixel]
  std::int64_t lambda = 0;
};

BuildingProblem build_problem(int building_id, const std::vector<std::size_t>& pixels,
                              const NormalField& normals, const std::vector<PlaneLabel>& labels,
                              const SegmentationParams& params) {
  BuildingProblem p;
  p.building_id = building_id;
  p.pixels = pixels;
  p.lambda = std::llround(params.smoothness_lambda * params.cost_scale);

  const GridMeta& meta = normals.meta();
  std::vector<int> local(normals.size(), -1);
  for (std::size_t i = 0; i < pixels.size(); ++i) local[pixels[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    int row = static_cast<int>(pixels[i] / meta.width);
    int col = static_cast<int>(pixels[i] % meta.width);
    // right and down neighbors only: each pair once
    if (col + 1 < meta.width && local[pixels[i] + 1] >= 0)
      p.edges.emplace_back(static_cast<int>(i), local[pixels[i] + 1]);
    if (row + 1 < meta.height && local[pixels[i] + meta.width] >= 0)
      p.edges.emplace_back(static_cast<int>(i), local[pixels[i] + meta.width]);
  }

  p.data.resize(labels.size());
  for (std::size_t l = 0; l < labels.size(); ++l) {
    p.data[l].resize(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      double angle = angle_between_deg(normals.at(pixels[i]), labels[l].normal);
      p.data[l][i] =
          std::llround(std::min(angle, params.data_cost_cap_deg) * params.cost_scale);
    }
  }
  return p;
}

std::int64_t problem_energy(const BuildingProblem& p, const std::vector<int>& labeling) {
  std::int64_t e = 0;
  for (std::size_t i = 0; i < p.pixels.size(); ++i)
    e += p.data[static_cast<std::size_t>(labeling[i])][i];
  for (const auto& [a, b] : p.edges)
    if (labeling[static_cast<std::size_t>(a)] != labeling[static_cast<std::size_t>(b)])
      e += p.lambda;
  return e;
}

// One alpha-expansion move, solved exactly as a binary min-cut.  Pixels
// already labeled alpha are pinned; for the rest, variable x = 1 keeps the
// current label (sink side) and x = 0 takes alpha (source side).
void expand_label(const BuildingProblem& p, int alpha, std::vector<int>& labeling) {
  const std::size_t n = p.pixels.size();
  std::vector<int> node(n, -1);
  int free_count = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (labeling[i] != alpha) node[i] = free_count++;
  if (free_count == 0) return;

  std::vector<std::int64_t> cap_keep(static_cast<std::size_t>(free_count), 0);    // s -> i
  std::vector<std::int64_t> cap_switch(static_cast<std::size_t>(free_count), 0);  // i -> t
  const auto& data_alpha = p.data[static_cast<std::size_t>(alpha)];
  for (std::size_t i = 0; i < n; ++i) {
    if (node[i] < 0) continue;
    cap_keep[static_cast<std::size_t>(node[i])] =
        p.data[static_cast<std::size_t>(labeling[i])][i];
    cap_switch[static_cast<std::size_t>(node[i])] = data_alpha[i];
  }

  struct PairEdge {
    int a, b;
    std::int64_t cap;
  };
  std::vector<PairEdge> pair_edges;
  pair_edges.reserve(p.edges.size());
  for (const auto& [a, b] : p.edges) {
    int ca = labeling[static_cast<std::size_t>(a)];
    int cb = labeling[static_cast<std::size_t>(b)];
    if (ca == alpha && cb == alpha) continue;
    if (ca == alpha) {  // a pinned to alpha: b pays lambda only while keeping
      cap_keep[static_cast<std::size_t>(node[b])] += p.lambda;
      continue;
    }
    if (cb == alpha) {
      cap_keep[static_cast<std::size_t>(node[a])] += p.lambda;
      continue;
    }
    // both free: Potts decomposition (see docs in header); reparametrization
    // constants cancel in the argmin
    cap_keep[static_cast<std::size_t>(node[a])] += p.lambda;
    if (ca == cb) cap_switch[static_cast<std::size_t>(node[b])] += p.lambda;
    pair_edges.push_back({node[a], node[b], 2 * p.lambda - (ca == cb ? 0 : p.lambda)});
  }

  MaxFlow flow(free_count + 2);
  int source = free_count, sink = free_count + 1;
  for (int i = 0; i < free_count; ++i) {
    if (cap_keep[static_cast<std::size_t>(i)] > 0)
      flow.add_edge(source, i, cap_keep[static_cast<std::size_t>(i)]);
    if (cap_switch[static_cast<std::size_t>(i)] > 0)
      flow.add_edge(i, sink, cap_switch[static_cast<std::size_t>(i)]);
  }
  for (const PairEdge& e : pair_edges) flow.add_edge(e.a, e.b, e.cap);
  flow.solve(source, sink);

  for (std::size_t i = 0; i < n; ++i)
    if (node[i] >= 0 && flow.on_source_side(node[i])) labeling[i] = alpha;
}

}  // namespace

std::vector<PlaneLabel> plane_labels(const SegmentationParams& params) {
  if (params.azimuth_count < 1)
    throw std::invalid_argument("plane_labels: azimuth_count must be >= 1");
  std::vector<PlaneLabel> labels;
  if (params.include_flat) labels.push_back({0.0, std::nullopt, {0.0, 0.0, 1.0}});
  for (double pitch : params.pitches_deg) {
    if (!(pitch > 0.0) || pitch >= 90.0)
      throw std::invalid_argument("plane_labels: pitches must be in (0, 90)");
    double sp = std::sin(deg_to_rad(pitch));
    double cp = std::cos(deg_to_rad(pitch));
    for (int a = 0; a < params.azimuth_count; ++a) {
      double az = 360.0 * a / params.azimuth_count;
      double az_rad = deg_to_rad(az);
      labels.push_back({pitch, az, {std::sin(az_rad) * sp, std::cos(az_rad) * sp, cp}});
    }
  }
  if (labels.empty()) throw std::invalid_argument("plane_labels: empty label set");
  return labels;
}

SegmentationResult segment_roofs(const HeightRaster& dsm, const InstanceMap& buildings,
                                 const SegmentationParams& params,
                                 SegmentationDiagnostics* diagnostics) {
  if (dsm.meta() != buildings.ids.meta())
    throw std::invalid_argument("segment_roofs: dsm and buildings grids must match");
  if (buildings.kind != InstanceKind::buildings)
    throw std::invalid_argument("segment_roofs: instance map must be of building kind");
  if (params.passes < 1) throw std::invalid_argument("segment_roofs: passes must be >= 1");

  const GridMeta& meta = dsm.meta();
  MaskRaster footprint = footprint_of(buildings);
  NormalField normals = surface_normals(dsm, &footprint);
  std::vector<PlaneLabel> labels = plane_labels(params);

  // building id -> pixels with usable normals, in row-major order
  std::map<int, std::vector<std::size_t>> building_pixels;
  for (std::size_t i = 0; i < dsm.size(); ++i) {
    if (footprint.at(i) && normals.is_valid(i))
      building_pixels[buildings.ids.at(i)].push_back(i);
  }

  // per-pixel MRF label, -1 outside any problem
  std::vector<int> mrf_label(dsm.size(), -1);
  for (const auto& [bid, pixels] : building_pixels) {
    BuildingProblem problem = build_problem(bid, pixels, normals, labels, params);
    std::vector<int> labeling(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      int best = 0;
      for (std::size_t l = 1; l < labels.size(); ++l)
        if (problem.data[l][i] < problem.data[static_cast<std::size_t>(best)][i])
          best = static_cast<int>(l);
      labeling[i] = best;
    }
    SegmentationDiagnostics::BuildingTrace trace;
    trace.building_id = bid;
    if (diagnostics) trace.energies.push_back(problem_energy(problem, labeling));
    for (int pass = 0; pass < params.passes; ++pass) {
      for (int alpha = 0; alpha < static_cast<int>(labels.size()); ++alpha) {
        expand_label(problem, alpha, labeling);
        if (diagnostics) trace.energies.push_back(problem_energy(problem, labeling));
      }
    }
    if (diagnostics) diagnostics->traces.push_back(std::move(trace));
    for (std::size_t i = 0; i < pixels.size(); ++i) mrf_label[pixels[i]] = labeling[i];
  }

  // 4-connected components of equal MRF label within one building, numbered
  // in row-major discovery order
  LabelRaster instance(meta, 0);
  std::vector<std::vector<std::size_t>> instance_pixels;  // by instance id - 1
  std::vector<int> instance_building;
  const int w = meta.width, h = meta.height;
  for (std::size_t start = 0; start < dsm.size(); ++start) {
    if (mrf_label[start] < 0 || instance.at(start) != 0) continue;
    int id = static_cast<int>(instance_pixels.size()) + 1;
    int bid = buildings.ids.at(start);
    int lbl = mrf_label[start];
    std::vector<std::size_t> members;
    std::queue<std::size_t> frontier;
    instance.at(start) = id;
    frontier.push(start);
    while (!frontier.empty()) {
      std::size_t idx = frontier.front();
      frontier.pop();
      members.push_back(idx);
      int row = static_cast<int>(idx / w), col = static_cast<int>(idx % w);
      constexpr int kDr[4] = {-1, 1, 0, 0};
      constexpr int kDc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int rr = row + kDr[k], cc = col + kDc[k];
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        std::size_t j = static_cast<std::size_t>(rr) * w + cc;
        if (instance.at(j) != 0 || mrf_label[j] != lbl || buildings.ids.at(j) != bid) continue;
        instance.at(j) = id;
        frontier.push(j);
      }
    }
    std::sort(members.begin(), members.end());
    instance_pixels.push_back(std::move(members));
    instance_building.push_back(bid);
  }

  // merge undersized instances into the same-building neighbor sharing the
  // longest boundary; smallest (ties: lowest id) first, repeated to fixpoint
  double px_area = meta.spatial_resolution * meta.spatial_resolution;
  auto boundary_counts = [&](int inst_id) {
    std::map<int, std::int64_t> counts;  // neighbor instance id -> shared edges
    for (std::size_t idx : instance_pixels[static_cast<std::size_t>(inst_id - 1)]) {
      int row = static_cast<int>(idx / w), col = static_cast<int>(idx % w);
      constexpr int kDr[4] = {-1, 1, 0, 0};
      constexpr int kDc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int rr = row + kDr[k], cc = col + kDc[k];
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        std::size_t j = static_cast<std::size_t>(rr) * w + cc;
        int other = instance.at(j);
        if (other == 0 || other == inst_id) continue;
        if (instance_building[static_cast<std::size_t>(other - 1)] !=
            instance_building[static_cast<std::size_t>(inst_id - 1)])
          continue;
        ++counts[other];
      }
    }
    return counts;
  };
  while (true) {
    int victim = 0;
    std::size_t victim_size = 0;
    for (std::size_t k = 0; k < instance_pixels.size(); ++k) {
      std::size_t sz = instance_pixels[k].size();
      if (sz == 0) continue;  // already merged away
      if (static_cast<double>(sz) * px_area >= params.min_segment_area_m2) continue;
      if (boundary_counts(static_cast<int>(k) + 1).empty()) continue;  // isolated: stays
      if (victim == 0 || sz < victim_size) {
        victim = static_cast<int>(k) + 1;
        victim_size = sz;
      }
    }
    if (victim == 0) break;
    auto counts = boundary_counts(victim);
    int target = 0;
    std::int64_t best = -1;
    for (const auto& [nid, cnt] : counts) {
      if (cnt > best) {
        best = cnt;
        target = nid;
      }
    }
    auto& from = instance_pixels[static_cast<std::size_t>(victim - 1)];
    auto& into = instance_pixels[static_cast<std::size_t>(target - 1)];
    for (std::size_t idx : from) instance.at(idx) = target;
    into.insert(into.end(), from.begin(), from.end());
    std::sort(into.begin(), into.end());
    from.clear();
  }

  // canonical renumbering by first-pixel row-major order
  LabelRaster canonical(meta, 0);
  std::vector<int> remap(instance_pixels.size() + 1, 0);
  int next_id = 0;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    int old = instance.at(i);
    if (old == 0) continue;
    if (remap[static_cast<std::size_t>(old)] == 0) remap[static_cast<std::size_t>(old)] = ++next_id;
    canonical.at(i) = remap[static_cast<std::size_t>(old)];
  }

  SegmentationResult result;
  result.segments.ids = std::move(canonical);
  result.segments.kind = InstanceKind::roof_segments;
  result.stats = compute_segment_stats(result.segments, buildings, dsm);
  return result;
}

std::map<int, double> coverage_fraction(const InstanceMap& buildings,
                                        const InstanceMap& segments) {
  if (buildings.ids.meta() != segments.ids.meta())
    throw std::invalid_argument("coverage_fraction: grids must match");
  std::map<int, std::pair<std::int64_t, std::int64_t>> tally;  // id -> (total, covered)
  for (std::size_t i = 0; i < buildings.ids.size(); ++i) {
    if (!buildings.ids.is_valid(i)) continue;
    int bid = buildings.ids.at(i);
    if (bid <= 0) continue;
    auto& [total, covered] = tally[bid];
    ++total;
    if (segments.ids.is_valid(i) && segments.ids.at(i) > 0) ++covered;
  }
  std::map<int, double> out;
  for (const auto& [bid, tc] : tally)
    out[bid] = static_cast<double>(tc.second) / static_cast<double>(tc.first);
  return out;
}

std::int64_t labeling_energy(const HeightRaster& dsm, const InstanceMap& buildings,
                             int building_id, const std::vector<int>& labeling,
                             const SegmentationParams& params) {
  MaskRaster footprint = footprint_of(buildings);
  NormalField normals = surface_normals(dsm, &footprint);
  std::vector<PlaneLabel> labels = plane_labels(params);
  std::vector<std::size_t> pixels;
  for (std::size_t i = 0; i < dsm.size(); ++i)
    if (footprint.at(i) && normals.is_valid(i) && buildings.ids.at(i) == building_id)
      pixels.push_back(i);
  if (labeling.size() != pixels.size())
    throw std::invalid_argument("labeling_energy: labeling size mismatch");
  for (int l : labeling)
    if (l < 0 || l >= static_cast<int>(labels.size()))
      throw std::invalid_argument("labeling_energy: label out of range");
  BuildingProblem problem = build_problem(building_id, pixels, normals, labels, params);
  return problem_energy(problem, labeling);
}

std::vector<SegmentStats> compute_segment_stats(const InstanceMap& segments,
                                                const InstanceMap& buildings,
                                                const HeightRaster& dsm) {
  if (segments.ids.meta() != dsm.meta() || buildings.ids.meta() != dsm.meta())
    throw std::invalid_argument("compute_segment_stats: grids must match");
  MaskRaster footprint = footprint_of(buildings);
  NormalField normals = surface_normals(dsm, &footprint);

  // A pixel whose 3x3 window straddles a plane boundary (segment edge, roof
  // seam, eave) carries a blended gradient that would bias the mean toward
  // flat, so the orientation average runs over interior pixels only (every
  // window sample in the same segment).  Segments too thin to have an
  // interior fall back to all their pixels.
  const LabelRaster& ids = segments.ids;
  auto interior = [&](int row, int col, int sid) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        int r = row + dr, c = col + dc;
        if (!ids.in_bounds(r, c) || !ids.is_valid(r, c) || ids(r, c) != sid) return false;
      }
    }
    return true;
  };

  std::map<int, SegmentStats> by_id;
  std::map<int, Vec3> interior_sums;
  std::map<int, Vec3> full_sums;
  for (int row = 0; row < ids.height(); ++row) {
    for (int col = 0; col < ids.width(); ++col) {
      if (!ids.is_valid(row, col)) continue;
      int sid = ids(row, col);
      if (sid <= 0) continue;
      auto& st = by_id[sid];
      if (st.pixel_count == 0) {
        st.id = sid;
        st.building_id = buildings.ids.is_valid(row, col) ? buildings.ids(row, col) : 0;
      }
      ++st.pixel_count;
      if (normals.is_valid(row, col)) {
        const Vec3& n = normals(row, col);
        auto add = [&n](Vec3& sum) {
          sum.x += n.x;
          sum.y += n.y;
          sum.z += n.z;
        };
        add(full_sums[sid]);
        if (interior(row, col, sid)) add(interior_sums[sid]);
      }
    }
  }

  double px_area = dsm.meta().spatial_resolution * dsm.meta().spatial_resolution;
  std::vector<SegmentStats> out;
  out.reserve(by_id.size());
  for (auto& [sid, st] : by_id) {
    st.area_m2 = static_cast<double>(st.pixel_count) * px_area;
    Vec3 sum = interior_sums.count(sid) ? interior_sums[sid] : full_sums[sid];
    if (norm(sum) > 1e-12) {
      st.mean_normal = normalized(sum);
      PitchAzimuth pa = pitch_azimuth(st.mean_normal);
      st.pitch_deg = pa.pitch_deg;
      st.azimuth_deg = pa.azimuth_deg;
    }
    out.push_back(st);
  }
  return out;
}

void write_segment_stats(const std::string& path, const std::vector<SegmentStats>& stats) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SegmentStats& s : stats) {
    nlohmann::json j{{"id", s.id},
                     {"building_id", s.building_id},
                     {"pixel_count", s.pixel_count},
                     {"area_m2", s.area_m2},
                     {"pitch_deg", s.pitch_deg},
                     {"normal", {s.mean_normal.x, s.mean_normal.y, s.mean_normal.z}}};
    if (s.azimuth_deg)
      j["azimuth_deg"] = *s.azimuth_deg;
    else
      j["azimuth_deg"] = nullptr;
    arr.push_back(std::move(j));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << arr.dump(2) << "\n";
}

std::vector<SegmentStats> read_segment_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  nlohmann::json arr;
  in >> arr;
  std::vector<SegmentStats> out;
  for (const auto& j : arr) {
    SegmentStats s;
    s.id = j.at("id").get<int>();
    s.building_id = j.at("building_id").get<int>();
    s.pixel_count = j.at("pixel_count").get<std::int64_t>();
    s.area_m2 = j.at("area_m2").get<double>();
    s.pitch_deg = j.at("pitch_deg").get<double>();
    if (!j.at("azimuth_deg").is_null()) s.azimuth_deg = j.at("azimuth_deg").get<double>();
    auto n = j.at("normal");
    s.mean_normal = {n.at(0).get<double>(), n.at(1).get<double>(), n.at(2).get<double>()};
    out.push_back(s);
  }
  return out;
}

}  // namespace solarpipe
