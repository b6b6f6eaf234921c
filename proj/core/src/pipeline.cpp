#include "solarpipe/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include <json.hpp>

#include "solarpipe/masking.hpp"
#include "solarpipe/parallel.hpp"
#include "solarpipe/raster_io.hpp"
#include "solarpipe/reproject.hpp"
#include "solarpipe/stitch.hpp"
#include "solarpipe/terrain.hpp"
#include "solarpipe/version.hpp"
#include "solarpipe/view_geometry.hpp"

namespace solarpipe {

std::string artifact_path(const std::string& prefix, const std::string& suffix) {
  return prefix + "." + suffix;
}

// --- config ------------------------------------------------------------------

namespace {

using nlohmann::json;

struct ConfigReader {
  const json& root;
  std::vector<std::string>& errors;

  void unknown_keys(const json& obj, const std::string& scope,
                    std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool found = false;
      for (const char* k : known)
        if (it.key() == k) {
          found = true;
          break;
        }
      if (!found) errors.push_back("unknown key: " + scope + it.key());
    }
  }

  template <typename T>
  void read(const json& obj, const std::string& scope, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      errors.push_back("bad value for " + scope + key);
    }
  }
};

void check_range(std::vector<std::string>& errors, bool ok, const std::string& message) {
  if (!ok) errors.push_back(message);
}

}  // namespace

ConfigValidation validate_config_json(const std::string& json_text) {
  ConfigValidation result;
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    result.errors.push_back(std::string("config is not valid JSON: ") + e.what());
    return result;
  }
  if (!root.is_object()) {
    result.errors.push_back("config root must be a JSON object");
    return result;
  }

  PipelineConfig& c = result.config;
  ConfigReader r{root, result.errors};
  r.unknown_keys(root, "",
                 {"heightmap_path", "buildings_path", "rgb_path", "dtm_path", "dem_path",
                  "labels_prefix", "view_elevation_deg", "view_azimuth_deg", "latitude_deg",
                  "samples_per_day", "irradiance", "shading", "segmentation", "panel",
                  "cap_kilowatts", "tile_size", "tile_margin", "flux_full_grid", "workers",
                  "output_dir"});
  r.read(root, "", "heightmap_path", c.heightmap_path);
  r.read(root, "", "buildings_path", c.buildings_path);
  r.read(root, "", "rgb_path", c.rgb_path);
  r.read(root, "", "dtm_path", c.dtm_path);
  r.read(root, "", "dem_path", c.dem_path);
  r.read(root, "", "labels_prefix", c.labels_prefix);
  r.read(root, "", "view_elevation_deg", c.view_elevation_deg);
  r.read(root, "", "view_azimuth_deg", c.view_azimuth_deg);
  r.read(root, "", "latitude_deg", c.latitude_deg);
  r.read(root, "", "samples_per_day", c.samples_per_day);
  r.read(root, "", "cap_kilowatts", c.cap_kilowatts);
  r.read(root, "", "tile_size", c.tile_size);
  r.read(root, "", "tile_margin", c.tile_margin);
  r.read(root, "", "flux_full_grid", c.flux_full_grid);
  r.read(root, "", "workers", c.workers);
  r.read(root, "", "output_dir", c.output_dir);

  if (auto it = root.find("irradiance"); it != root.end() && it->is_object()) {
    r.unknown_keys(*it, "irradiance.", {"dni_w_m2", "diffuse_fraction"});
    r.read(*it, "irradiance.", "dni_w_m2", c.irradiance.dni_w_m2);
    r.read(*it, "irradiance.", "diffuse_fraction", c.irradiance.diffuse_fraction);
  }
  if (auto it = root.find("shading"); it != root.end() && it->is_object()) {
    r.unknown_keys(*it, "shading.", {"step_fraction", "max_distance_m", "tolerance_m"});
    r.read(*it, "shading.", "step_fraction", c.shading.step_fraction);
    r.read(*it, "shading.", "max_distance_m", c.shading.max_distance_m);
    r.read(*it, "shading.", "tolerance_m", c.shading.tolerance_m);
  }
  if (auto it = root.find("segmentation"); it != root.end() && it->is_object()) {
    r.unknown_keys(*it, "segmentation.",
                   {"pitches_deg", "azimuth_count", "include_flat", "smoothness_lambda",
                    "data_cost_cap_deg", "passes", "min_segment_area_m2", "cost_scale"});
    r.read(*it, "segmentation.", "pitches_deg", c.segmentation.pitches_deg);
    r.read(*it, "segmentation.", "azimuth_count", c.segmentation.azimuth_count);
    r.read(*it, "segmentation.", "include_flat", c.segmentation.include_flat);
    r.read(*it, "segmentation.", "smoothness_lambda", c.segmentation.smoothness_lambda);
    r.read(*it, "segmentation.", "data_cost_cap_deg", c.segmentation.data_cost_cap_deg);
    r.read(*it, "segmentation.", "passes", c.segmentation.passes);
    r.read(*it, "segmentation.", "min_segment_area_m2", c.segmentation.min_segment_area_m2);
    r.read(*it, "segmentation.", "cost_scale", c.segmentation.cost_scale);
  }
  if (auto it = root.find("panel"); it != root.end() && it->is_object()) {
    r.unknown_keys(*it, "panel.",
                   {"length_m", "width_m", "rated_power_w", "efficiency", "performance_ratio"});
    r.read(*it, "panel.", "length_m", c.panel.length_m);
    r.read(*it, "panel.", "width_m", c.panel.width_m);
    r.read(*it, "panel.", "rated_power_w", c.panel.rated_power_w);
    r.read(*it, "panel.", "efficiency", c.panel.efficiency);
    r.read(*it, "panel.", "performance_ratio", c.panel.performance_ratio);
  }

  auto& errors = result.errors;
  check_range(errors, !c.heightmap_path.empty(), "heightmap_path is required");
  check_range(errors, !c.buildings_path.empty(), "buildings_path is required");
  check_range(errors, !c.output_dir.empty(), "output_dir is required");
  check_range(errors, c.view_elevation_deg > 0.0 && c.view_elevation_deg <= 90.0,
              "view_elevation_deg: elevation must be in (0, 90]");
  check_range(errors, c.latitude_deg >= -66.0 && c.latitude_deg <= 66.0,
              "latitude_deg must be in [-66, 66]");
  check_range(errors, c.samples_per_day >= 1, "samples_per_day must be >= 1");
  check_range(errors, c.irradiance.dni_w_m2 >= 0.0, "irradiance.dni_w_m2 must be >= 0");
  check_range(errors,
              c.irradiance.diffuse_fraction >= 0.0 && c.irradiance.diffuse_fraction <= 1.0,
              "irradiance.diffuse_fraction must be in [0, 1]");
  check_range(errors, c.shading.step_fraction > 0.0, "shading.step_fraction must be > 0");
  check_range(errors, c.shading.max_distance_m >= 0.0, "shading.max_distance_m must be >= 0");
  check_range(errors, c.shading.tolerance_m >= 0.0, "shading.tolerance_m must be >= 0");
  check_range(errors, c.segmentation.azimuth_count >= 1,
              "segmentation.azimuth_count must be >= 1");
  check_range(errors, c.segmentation.smoothness_lambda >= 0.0,
              "segmentation.smoothness_lambda must be >= 0");
  check_range(errors, c.segmentation.data_cost_cap_deg > 0.0,
              "segmentation.data_cost_cap_deg must be > 0");
  check_range(errors, c.segmentation.passes >= 1, "segmentation.passes must be >= 1");
  check_range(errors, c.segmentation.min_segment_area_m2 >= 0.0,
              "segmentation.min_segment_area_m2 must be >= 0");
  check_range(errors, c.segmentation.cost_scale > 0.0, "segmentation.cost_scale must be > 0");
  for (double p : c.segmentation.pitches_deg)
    check_range(errors, p > 0.0 && p < 90.0, "segmentation.pitches_deg must be in (0, 90)");
  check_range(errors, c.panel.length_m > 0.0 && c.panel.width_m > 0.0,
              "panel dimensions must be > 0");
  check_range(errors, c.panel.rated_power_w > 0.0, "panel.rated_power_w must be > 0");
  check_range(errors, c.panel.efficiency > 0.0 && c.panel.efficiency <= 1.0,
              "panel.efficiency must be in (0, 1]");
  check_range(errors, c.panel.performance_ratio > 0.0 && c.panel.performance_ratio <= 1.0,
              "panel.performance_ratio must be in (0, 1]");
  check_range(errors, c.cap_kilowatts > 0.0, "cap_kilowatts must be > 0");
  check_range(errors, c.tile_size >= 16, "tile_size must be >= 16");
  check_range(errors, c.tile_margin >= 0 && 2 * c.tile_margin < c.tile_size,
              "tile_margin must be >= 0 and < tile_size / 2");
  check_range(errors, c.workers >= 0, "workers must be >= 0");
  return result;
}

ConfigValidation validate_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ConfigValidation bad;
    bad.errors.push_back(path + ": cannot open");
    return bad;
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ConfigValidation result = validate_config_json(text);
  auto must_exist = [&](const std::string& p, const char* key) {
    if (!p.empty() && !std::filesystem::exists(p))
      result.errors.push_back(std::string(key) + ": file not found: " + p);
  };
  must_exist(result.config.heightmap_path, "heightmap_path");
  must_exist(result.config.buildings_path, "buildings_path");
  must_exist(result.config.rgb_path, "rgb_path");
  must_exist(result.config.dtm_path, "dtm_path");
  must_exist(result.config.dem_path, "dem_path");
  return result;
}

// --- pipeline ----------------------------------------------------------------

namespace {

class StageTimer {
 public:
  StageTimer(RunManifest& manifest, std::string name)
      : manifest_(manifest), record_{std::move(name), 0.0, {}},
        start_(std::chrono::steady_clock::now()) {}

  void output(const std::string& path) { record_.outputs.push_back(path); }

  void finish() {
    record_.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start_)
                          .count();
    manifest_.stages.push_back(std::move(record_));
  }

 private:
  RunManifest& manifest_;
  StageRecord record_;
  std::chrono::steady_clock::time_point start_;
};

template <typename Fn>
auto run_stage(RunManifest& manifest, const std::string& name, Fn&& fn) {
  StageTimer timer(manifest, name);
  try {
    if constexpr (std::is_void_v<decltype(fn(timer))>) {
      fn(timer);
      timer.finish();
    } else {
      auto value = fn(timer);
      timer.finish();
      return value;
    }
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what());
  }
}

LabelRaster provenance_to_labels(const Raster<std::int64_t>& prov) {
  LabelRaster out(prov.meta());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.at(i) = prov.is_valid(i) ? static_cast<std::int32_t>(prov.at(i)) : 0;
    out.set_valid(i, prov.is_valid(i));
  }
  return out;
}

// Tiled flux that matches the untiled computation exactly: each tile gets a
// halo of max_distance_m so shading rays never meet an artificial boundary,
// and overlapping outputs agree, so feathered stitching reproduces them
// bit-for-bit.
FluxRaster flux_tiled(const HeightRaster& dsm, const NormalField& normals,
                      const std::vector<SunSample>& suns, const IrradianceModel& model,
                      const ShadingParams& shading, const MaskRaster* domain, int workers,
                      int tile_size, int tile_margin) {
  const GridMeta& meta = dsm.meta();
  if (meta.width <= tile_size && meta.height <= tile_size)
    return annual_flux(dsm, normals, suns, model, shading, domain, workers);

  int halo = static_cast<int>(std::ceil(shading.max_distance_m / meta.spatial_resolution)) + 1;
  int step = tile_size - 2 * tile_margin;

  auto starts = [&](int extent) {
    std::vector<int> s;
    if (extent <= tile_size) {
      s.push_back(0);
      return s;
    }
    for (int v = 0;; v += step) {
      if (v + tile_size >= extent) {
        s.push_back(extent - tile_size);
        break;
      }
      s.push_back(v);
    }
    return s;
  };

  std::vector<TilePlacement<double>> tiles;
  for (int r0 : starts(meta.height)) {
    for (int c0 : starts(meta.width)) {
      int th = std::min(tile_size, meta.height - r0);
      int tw = std::min(tile_size, meta.width - c0);
      // window = tile plus halo, clipped to the mosaic
      int wr0 = std::max(0, r0 - halo), wc0 = std::max(0, c0 - halo);
      int wr1 = std::min(meta.height, r0 + th + halo);
      int wc1 = std::min(meta.width, c0 + tw + halo);
      GridMeta wm;
      wm.width = wc1 - wc0;
      wm.height = wr1 - wr0;
      wm.spatial_resolution = meta.spatial_resolution;
      wm.origin_x = meta.x(wc0);
      wm.origin_y = meta.y(wr0);
      HeightRaster wdsm(wm);
      NormalField wnorm(wm);
      MaskRaster wdom(wm, 0);
      for (int r = 0; r < wm.height; ++r) {
        for (int c = 0; c < wm.width; ++c) {
          int gr = wr0 + r, gc = wc0 + c;
          wdsm(r, c) = dsm(gr, gc);
          wdsm.set_valid(r, c, dsm.is_valid(gr, gc));
          wnorm(r, c) = normals(gr, gc);
          wnorm.set_valid(r, c, normals.is_valid(gr, gc));
          bool in_tile = gr >= r0 && gr < r0 + th && gc >= c0 && gc < c0 + tw;
          wdom(r, c) = in_tile && (!domain || domain->at(dsm.index(gr, gc))) ? 1 : 0;
        }
      }
      FluxRaster wflux = annual_flux(wdsm, wnorm, suns, model, shading, &wdom, workers);
      GridMeta tm;
      tm.width = tw;
      tm.height = th;
      tm.spatial_resolution = meta.spatial_resolution;
      tm.origin_x = meta.x(c0);
      tm.origin_y = meta.y(r0);
      HeightRaster tile(tm);
      for (int r = 0; r < th; ++r) {
        for (int c = 0; c < tw; ++c) {
          tile(r, c) = wflux(r + r0 - wr0, c + c0 - wc0);
          tile.set_valid(r, c, wflux.is_valid(r + r0 - wr0, c + c0 - wc0));
        }
      }
      tiles.push_back({std::move(tile), r0, c0, tile_margin});
    }
  }

  // domain-out pixels are invalid in every tile; stitch requires full
  // coverage, so blend only over covered pixels and transfer invalids
  FluxRaster out(meta, 0.0, false);
  // reuse the stitch kernel per pixel by marking uncovered pixels invalid
  // rather than erroring: flux domains are sparse by design
  auto order = [&] {
    std::vector<std::size_t> idx(tiles.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (tiles[a].offset_row != tiles[b].offset_row)
        return tiles[a].offset_row < tiles[b].offset_row;
      return tiles[a].offset_col < tiles[b].offset_col;
    });
    return idx;
  }();
  for (int row = 0; row < meta.height; ++row) {
    for (int col = 0; col < meta.width; ++col) {
      double num = 0.0, den = 0.0, lo = 0.0, hi = 0.0;
      bool any = false;
      for (std::size_t k : order) {
        const auto& t = tiles[k];
        int tr = row - t.offset_row, tc = col - t.offset_col;
        if (tr < 0 || tr >= t.tile.height() || tc < 0 || tc >= t.tile.width()) continue;
        if (!t.tile.is_valid(tr, tc)) continue;
        auto ramp = [&](int i, int extent) {
          double a = static_cast<double>(i + 1) / (t.margin + 1);
          double b = static_cast<double>(extent - i) / (t.margin + 1);
          return std::min({a, b, 1.0});
        };
        double w = ramp(tr, t.tile.height()) * ramp(tc, t.tile.width());
        double v = t.tile(tr, tc);
        num += w * v;
        den += w;
        lo = any ? std::min(lo, v) : v;
        hi = any ? std::max(hi, v) : v;
        any = true;
      }
      if (!any) continue;
      out(row, col) = std::clamp(num / den, lo, hi);
      out.set_valid(row, col, true);
    }
  }
  return out;
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& config) {
  RunManifest manifest;
  manifest.version = kVersion;
  int workers = config.workers > 0 ? config.workers : default_worker_count();

  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  std::string prefix = (fs::path(config.output_dir) / "out").string();
  auto art = [&](const std::string& suffix) { return artifact_path(prefix, suffix); };

  // ---- load
  struct Inputs {
    HeightRaster heightmap;
    InstanceMap buildings;
    ColorRaster rgb;
    bool has_rgb = false;
    HeightRaster dtm;
    bool has_dtm = false;
    HeightRaster dem;
    bool has_dem = false;
  };
  Inputs in = run_stage(manifest, "load", [&](StageTimer&) {
    Inputs i;
    i.heightmap = read_height_asc(config.heightmap_path);
    i.buildings.ids = read_label_asc(config.buildings_path);
    i.buildings.kind = InstanceKind::buildings;
    if (i.buildings.ids.meta() != i.heightmap.meta())
      throw std::runtime_error("buildings grid does not match the heightmap");
    if (!config.rgb_path.empty()) {
      i.rgb = read_color_png(config.rgb_path);
      if (i.rgb.meta() != i.heightmap.meta())
        throw std::runtime_error("rgb grid does not match the heightmap");
      i.has_rgb = true;
    }
    if (!config.dtm_path.empty()) {
      i.dtm = read_height_asc(config.dtm_path);
      if (i.dtm.meta() != i.heightmap.meta())
        throw std::runtime_error("dtm grid does not match the heightmap");
      i.has_dtm = true;
    }
    if (!config.dem_path.empty()) {
      i.dem = read_height_asc(config.dem_path);
      i.has_dem = true;
    }
    return i;
  });
  const GridMeta meta = in.heightmap.meta();

  // ---- terrain at the working grid
  HeightRaster terrain = run_stage(manifest, "terrain", [&](StageTimer& stage) {
    HeightRaster t;
    if (in.has_dtm) {
      t = in.dtm;
    } else if (in.has_dem) {
      t = resample_bilinear(in.dem, meta);
    } else {
      manifest.warnings.push_back("no dtm or dem input; assuming flat ground at 0 m");
      t = HeightRaster(meta, 0.0);
    }
    write_height_asc(art("dtm.asc"), t);
    stage.output(art("dtm.asc"));
    return t;
  });

  // ---- reproject the oblique inputs onto true ground positions
  struct Nadir {
    HeightRaster heightmap;
    ColorRaster rgb;
    MaskRaster occlusion;
  };
  Nadir nadir = run_stage(manifest, "reproject", [&](StageTimer& stage) {
    Nadir n;
    if (config.view_elevation_deg == 90.0) {
      n.heightmap = in.heightmap;
      n.rgb = in.rgb;
      n.occlusion = MaskRaster(meta, 0);
    } else {
      ViewGeometry view =
          ViewGeometry::from_angles(config.view_elevation_deg, config.view_azimuth_deg);
      auto warped = reproject(in.heightmap, in.heightmap, view, Direction::to_nadir);
      n.occlusion = warped.occlusion;
      n.heightmap = infill_occlusions(warped.output, warped.occlusion);
      write_label_asc(art("provenance.asc"), provenance_to_labels(warped.provenance));
      stage.output(art("provenance.asc"));
      if (in.has_rgb) {
        auto warped_rgb = reproject(in.rgb, in.heightmap, view, Direction::to_nadir);
        n.rgb = infill_occlusions(warped_rgb.output, warped_rgb.occlusion);
      }
    }
    write_height_asc(art("heightmap.asc"), n.heightmap);
    stage.output(art("heightmap.asc"));
    write_mask_asc(art("occlusion.asc"), n.occlusion);
    stage.output(art("occlusion.asc"));
    write_label_asc(art("buildings.asc"), in.buildings.ids);
    stage.output(art("buildings.asc"));
    if (in.has_rgb) {
      write_color_png(art("rgb.png"), n.rgb);
      stage.output(art("rgb.png"));
    }
    return n;
  });

  // ---- compose the DSM
  HeightRaster dsm = run_stage(manifest, "compose", [&](StageTimer& stage) {
    HeightRaster d = compose_dsm(nadir.heightmap, terrain);
    write_height_asc(art("dsm.asc"), d);
    stage.output(art("dsm.asc"));
    return d;
  });

  // ---- roof segmentation
  SegmentationResult segmentation = run_stage(manifest, "segment", [&](StageTimer& stage) {
    SegmentationResult s = segment_roofs(dsm, in.buildings, config.segmentation);
    write_label_asc(art("segments.asc"), s.segments.ids);
    stage.output(art("segments.asc"));
    write_segment_stats(art("segment_stats.json"), s.stats);
    stage.output(art("segment_stats.json"));
    return s;
  });

  // ---- annual flux
  FluxRaster flux = run_stage(manifest, "flux", [&](StageTimer& stage) {
    std::vector<SunSample> suns = sun_positions(config.latitude_deg, config.samples_per_day);
    NormalField normals = surface_normals(dsm);
    MaskRaster domain(meta, 1);
    if (!config.flux_full_grid) {
      for (std::size_t i = 0; i < domain.size(); ++i)
        domain.at(i) =
            in.buildings.ids.is_valid(i) && in.buildings.ids.at(i) > 0 ? 1 : 0;
    }
    FluxRaster f = flux_tiled(dsm, normals, suns, config.irradiance, config.shading, &domain,
                              workers, config.tile_size, config.tile_margin);
    write_height_asc(art("flux.asc"), f);
    stage.output(art("flux.asc"));
    write_color_png(art("flux.png"), false_color(f));
    stage.output(art("flux.png"));
    return f;
  });

  // ---- panels and per-building energy
  std::vector<PanelPlacement> placements = run_stage(manifest, "panels", [&](StageTimer& stage) {
    auto p = place_panels(segmentation.segments, segmentation.stats, flux, config.panel);
    write_panels(art("panels.json"), p);
    stage.output(art("panels.json"));
    return p;
  });

  run_stage(manifest, "energy", [&](StageTimer& stage) {
    auto uncapped = building_energy(placements, config.panel);
    auto capped = building_energy(placements, config.panel, config.cap_kilowatts);
    json j{{"cap_kilowatts", config.cap_kilowatts},
           {"uncapped", json::object()},
           {"capped", json::object()}};
    for (const auto& [bid, e] : uncapped) j["uncapped"][std::to_string(bid)] = e;
    for (const auto& [bid, e] : capped) j["capped"][std::to_string(bid)] = e;
    std::ofstream out(art("energy.json"));
    if (!out) throw std::runtime_error(art("energy.json") + ": cannot open for writing");
    out << j.dump(2) << "\n";
    stage.output(art("energy.json"));
  });

  // ---- visualization extras
  run_stage(manifest, "visualize", [&](StageTimer& stage) {
    write_gray_png(art("hillshade.png"), hillshade(surface_normals(dsm)));
    stage.output(art("hillshade.png"));
    if (in.has_rgb) {
      write_color_png(art("panels.png"), render_panel_overlay(nadir.rgb, placements));
      stage.output(art("panels.png"));
    }
  });

  // ---- optional evaluation against labels
  if (!config.labels_prefix.empty()) {
    run_stage(manifest, "evaluate", [&](StageTimer& stage) {
      EvaluationInputs ev;
      ev.pred_prefix = prefix;
      ev.label_prefix = config.labels_prefix;
      ev.latitude_deg = config.latitude_deg;
      ev.samples_per_day = config.samples_per_day;
      ev.irradiance = config.irradiance;
      ev.shading = config.shading;
      ev.panel = config.panel;
      ev.cap_kilowatts = config.cap_kilowatts;
      ev.workers = workers;
      MetricsReport report = evaluate_run(ev);
      write_metrics_report(art("report.json"), report);
      stage.output(art("report.json"));
    });
  }

  // ---- manifest
  {
    json stages = json::array();
    for (const StageRecord& s : manifest.stages) {
      stages.push_back({{"name", s.name}, {"wall_ms", s.wall_ms}, {"outputs", s.outputs}});
    }
    json j{{"version", manifest.version}, {"stages", stages}, {"warnings", manifest.warnings}};
    std::string path = (fs::path(config.output_dir) / "manifest.json").string();
    std::ofstream out(path);
    if (!out) throw PipelineError("manifest", path + ": cannot open for writing");
    out << j.dump(2) << "\n";
  }
  return manifest;
}

// --- evaluation --------------------------------------------------------------

namespace {

struct ArtifactSet {
  HeightRaster dsm;
  InstanceMap segments;
  InstanceMap buildings;
  std::vector<SegmentStats> stats;
};

ArtifactSet load_artifacts(const std::string& prefix) {
  ArtifactSet a;
  a.dsm = read_height_asc(artifact_path(prefix, "dsm.asc"));
  a.segments.ids = read_label_asc(artifact_path(prefix, "segments.asc"));
  a.segments.kind = InstanceKind::roof_segments;
  a.buildings.ids = read_label_asc(artifact_path(prefix, "buildings.asc"));
  a.buildings.kind = InstanceKind::buildings;
  a.stats = read_segment_stats(artifact_path(prefix, "segment_stats.json"));
  if (a.segments.ids.meta() != a.dsm.meta() || a.buildings.ids.meta() != a.dsm.meta())
    throw std::runtime_error(prefix + ": artifact grids do not match");
  return a;
}

std::map<int, double> energies_for(const ArtifactSet& a, const EvaluationInputs& inputs,
                                   std::optional<double> cap, int workers) {
  std::vector<SunSample> suns = sun_positions(inputs.latitude_deg, inputs.samples_per_day);
  NormalField normals = surface_normals(a.dsm);
  MaskRaster domain(a.dsm.meta(), 0);
  for (std::size_t i = 0; i < domain.size(); ++i)
    domain.at(i) = a.buildings.ids.is_valid(i) && a.buildings.ids.at(i) > 0 ? 1 : 0;
  FluxRaster flux =
      annual_flux(a.dsm, normals, suns, inputs.irradiance, inputs.shading, &domain, workers);
  auto placements = place_panels(a.segments, a.stats, flux, inputs.panel);
  return building_energy(placements, inputs.panel, cap);
}

}  // namespace

MetricsReport evaluate_run(const EvaluationInputs& inputs) {
  ArtifactSet pred = load_artifacts(inputs.pred_prefix);
  ArtifactSet label = load_artifacts(inputs.label_prefix);
  if (pred.dsm.meta() != label.dsm.meta())
    throw std::invalid_argument("evaluate_run: prediction and label grids must match");
  int workers = inputs.workers > 0 ? inputs.workers : default_worker_count();

  MaskRaster mask(pred.dsm.meta(), 1);
  {
    std::vector<MaskRaster> masks;
    if (inputs.apply_masks) {
      masks.push_back(temporal_mismatch_mask(pred.buildings, label.buildings));
      // reliability of the reference labels: buildings whose reference
      // segmentation is too sparse are excluded entirely
      masks.push_back(coverage_mask(label.buildings, label.segments));
    }
    for (const std::string& path : inputs.extra_mask_paths) {
      MaskRaster extra = read_mask_asc(path);
      if (extra.meta() != pred.dsm.meta())
        throw std::invalid_argument(path + ": mask grid does not match the artifacts");
      masks.push_back(std::move(extra));
    }
    if (!masks.empty()) mask = combine_masks(masks);
  }

  MetricsReport report;
  report.cap_kilowatts = inputs.cap_kilowatts;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask.at(i)) ++report.masked_pixels;

  report.mae_all_m = masked_mae(pred.dsm, label.dsm, &mask);
  report.mae_buildings_m = masked_mae(pred.dsm, label.dsm, &mask, &label.buildings);

  IouResult iou = match_and_iou(pred.segments, label.segments, &mask);
  report.area_weighted_iou = iou.area_weighted_iou;
  report.matched_segments = static_cast<int>(iou.matches.size());
  report.unmatched_labels = iou.unmatched_labels;
  report.unmatched_preds = iou.unmatched_preds;
  report.matches = iou.matches;

  AngleErrors angles = segment_angle_errors(pred.stats, label.stats, iou.matches);
  report.pitch_error_deg = angles.pitch_error_deg;
  report.azimuth_error_deg = angles.azimuth_error_deg;
  report.azimuth_pairs = angles.azimuth_pairs;

  auto pred_uncapped = energies_for(pred, inputs, std::nullopt, workers);
  auto label_uncapped = energies_for(label, inputs, std::nullopt, workers);
  MapeResult uncapped = energy_mape(pred_uncapped, label_uncapped);
  report.mape_uncapped = uncapped.mape;
  report.energy_buildings = uncapped.common;
  report.energy_skipped = uncapped.skipped;
  report.pred_energy_kwh = pred_uncapped;
  report.label_energy_kwh = label_uncapped;

  auto pred_capped = energies_for(pred, inputs, inputs.cap_kilowatts, workers);
  auto label_capped = energies_for(label, inputs, inputs.cap_kilowatts, workers);
  report.mape_capped = energy_mape(pred_capped, label_capped).mape;

  return report;
}

}  // namespace solarpipe
