// Command-line front end: every pipeline stage as a composable subcommand
// plus a one-shot `run` driven by a JSON config.
//
// Exit codes: 0 success, 1 usage or config error, 2 stage failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "solarpipe/masking.hpp"
#include "solarpipe/metrics.hpp"
#include "solarpipe/panels.hpp"
#include "solarpipe/parallel.hpp"
#include "solarpipe/pipeline.hpp"
#include "solarpipe/raster_io.hpp"
#include "solarpipe/reproject.hpp"
#include "solarpipe/roof_segments.hpp"
#include "solarpipe/solar.hpp"
#include "solarpipe/stitch.hpp"
#include "solarpipe/synth_scene.hpp"
#include "solarpipe/terrain.hpp"
#include "solarpipe/version.hpp"
#include "solarpipe/view_geometry.hpp"

namespace {

using namespace solarpipe;

// Thrown by callbacks that already reported their problem; carries the exit
// code (used for config validation failures, exit 1).
struct CliFailure {
  int code = 1;
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string spec_path;
  std::string out_prefix;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

void run_synth(const SynthArgs& args) {
  SceneSpec spec = read_scene_spec(args.spec_path);
  SceneTruth truth = render_scene(spec);

  auto art = [&](const char* s) { return artifact_path(args.out_prefix, s); };
  write_height_asc(art("dtm.asc"), truth.dtm);
  write_height_asc(art("heightmap.asc"), truth.heightmap);
  write_height_asc(art("dsm.asc"), truth.dsm);
  write_label_asc(art("buildings.asc"), truth.buildings.ids);
  write_label_asc(art("segments.asc"), truth.segments.ids);
  write_color_png(art("rgb.png"), truth.rgb);

  // analytic per-face statistics, the reference a segmentation is scored against
  std::vector<SegmentStats> stats;
  for (const FaceTruth& f : truth.faces) {
    SegmentStats s;
    s.id = f.segment_id;
    s.building_id = f.building_id;
    s.pixel_count = f.pixel_count;
    s.area_m2 = static_cast<double>(f.pixel_count) * spec.meta.spatial_resolution *
                spec.meta.spatial_resolution;
    s.pitch_deg = f.pitch_deg;
    s.azimuth_deg = f.azimuth_deg;
    s.mean_normal = f.normal;
    stats.push_back(s);
  }
  write_segment_stats(art("segment_stats.json"), stats);

  if (args.noise_sigma > 0.0) {
    write_height_asc(art("noisy_heightmap.asc"),
                     perturb(truth.heightmap, args.noise_sigma, args.seed));
  }
  std::cout << "synth: wrote " << args.out_prefix << ".* (" << truth.faces.size()
            << " roof faces)\n";
}

// --- reproject -------------------------------------------------------------

struct ReprojectArgs {
  double elevation = 90.0;
  double azimuth = 0.0;
  std::string direction = "to-nadir";
  std::string heights_path;
  std::string input_path;
  std::string out_prefix;
  bool sides = false;
  bool labels = false;
  bool infill = false;
};

void run_reproject(const ReprojectArgs& args) {
  ViewGeometry view = ViewGeometry::from_angles(args.elevation, args.azimuth);
  Direction dir = args.direction == "to-nadir" ? Direction::to_nadir : Direction::to_offnadir;
  HeightRaster heights = read_height_asc(args.heights_path);
  auto art = [&](const char* s) { return artifact_path(args.out_prefix, s); };

  MaskRaster occlusion;
  Raster<std::int64_t> provenance;
  if (args.sides) {
    auto result = reproject_with_sides(heights, view, dir);
    occlusion = result.occlusion;
    provenance = std::move(result.provenance);
    HeightRaster out = args.infill ? infill_occlusions(result.output, occlusion)
                                   : std::move(result.output);
    write_height_asc(art("out.asc"), out);
  } else if (ends_with(args.input_path, ".png")) {
    auto result = reproject(read_color_png(args.input_path), heights, view, dir);
    occlusion = result.occlusion;
    provenance = std::move(result.provenance);
    ColorRaster out = args.infill ? infill_occlusions(result.output, occlusion)
                                  : std::move(result.output);
    write_color_png(art("out.png"), out);
  } else if (args.labels) {
    auto result = reproject(read_label_asc(args.input_path), heights, view, dir);
    occlusion = result.occlusion;
    provenance = std::move(result.provenance);
    write_label_asc(art("out.asc"), result.output);
  } else {
    std::string path = args.input_path.empty() ? args.heights_path : args.input_path;
    auto result = reproject(read_height_asc(path), heights, view, dir);
    occlusion = result.occlusion;
    provenance = std::move(result.provenance);
    HeightRaster out = args.infill ? infill_occlusions(result.output, occlusion)
                                   : std::move(result.output);
    write_height_asc(art("out.asc"), out);
  }

  write_mask_asc(art("occlusion.asc"), occlusion);
  LabelRaster prov(provenance.meta());
  for (std::size_t i = 0; i < prov.size(); ++i) {
    prov.at(i) = provenance.is_valid(i) ? static_cast<std::int32_t>(provenance.at(i)) : 0;
    prov.set_valid(i, provenance.is_valid(i));
  }
  write_label_asc(art("provenance.asc"), prov);
}

// --- segment ---------------------------------------------------------------

struct SegmentArgs {
  std::string dsm_path;
  std::string buildings_path;
  std::string out_prefix;
  SegmentationParams params;
};

void run_segment(const SegmentArgs& args) {
  HeightRaster dsm = read_height_asc(args.dsm_path);
  InstanceMap buildings{read_label_asc(args.buildings_path), InstanceKind::buildings};
  SegmentationResult result = segment_roofs(dsm, buildings, args.params);
  write_label_asc(artifact_path(args.out_prefix, "segments.asc"), result.segments.ids);
  write_segment_stats(artifact_path(args.out_prefix, "segment_stats.json"), result.stats);
  std::cout << "segment: " << result.stats.size() << " segments\n";
}

// --- flux --------------------------------------------------------------------

struct FluxArgs {
  std::string dsm_path;
  std::string buildings_path;
  std::string out_prefix;
  double latitude = 0.0;
  int samples_per_day = 24;
  IrradianceModel model;
  ShadingParams shading;
  bool full_grid = false;
  int workers = 0;
};

void run_flux(const FluxArgs& args) {
  HeightRaster dsm = read_height_asc(args.dsm_path);
  NormalField normals = surface_normals(dsm);
  std::vector<SunSample> suns = sun_positions(args.latitude, args.samples_per_day);

  MaskRaster domain(dsm.meta(), 1);
  const MaskRaster* domain_ptr = nullptr;
  if (!args.full_grid && !args.buildings_path.empty()) {
    LabelRaster buildings = read_label_asc(args.buildings_path);
    if (buildings.meta() != dsm.meta())
      throw std::invalid_argument("buildings grid does not match the dsm");
    for (std::size_t i = 0; i < domain.size(); ++i)
      domain.at(i) = buildings.is_valid(i) && buildings.at(i) > 0 ? 1 : 0;
    domain_ptr = &domain;
  }

  int workers = args.workers > 0 ? args.workers : default_worker_count();
  FluxRaster flux = annual_flux(dsm, normals, suns, args.model, args.shading, domain_ptr, workers);
  write_height_asc(artifact_path(args.out_prefix, "flux.asc"), flux);
  write_color_png(artifact_path(args.out_prefix, "flux.png"), false_color(flux));
}

// --- panels ------------------------------------------------------------------

struct PanelsArgs {
  std::string rgb_path;  // optional: render footprint overlay onto this image
  std::string segments_path;
  std::string stats_path;
  std::string flux_path;
  std::string out_prefix;
  PanelSpec spec;
  double cap_kilowatts = 5.0;
};

void run_panels(const PanelsArgs& args) {
  InstanceMap segments{read_label_asc(args.segments_path), InstanceKind::roof_segments};
  std::vector<SegmentStats> stats = read_segment_stats(args.stats_path);
  FluxRaster flux = read_height_asc(args.flux_path);
  std::vector<PanelPlacement> placements = place_panels(segments, stats, flux, args.spec);
  write_panels(artifact_path(args.out_prefix, "panels.json"), placements);
  if (!args.rgb_path.empty()) {
    ColorRaster rgb = read_color_png(args.rgb_path);
    write_color_png(artifact_path(args.out_prefix, "panels.png"),
                    render_panel_overlay(rgb, placements));
  }

  auto uncapped = building_energy(placements, args.spec);
  auto capped = building_energy(placements, args.spec, args.cap_kilowatts);
  nlohmann::json j{{"cap_kilowatts", args.cap_kilowatts},
                   {"uncapped", nlohmann::json::object()},
                   {"capped", nlohmann::json::object()}};
  for (const auto& [bid, e] : uncapped) j["uncapped"][std::to_string(bid)] = e;
  for (const auto& [bid, e] : capped) j["capped"][std::to_string(bid)] = e;
  std::string path = artifact_path(args.out_prefix, "energy.json");
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  std::cout << "panels: " << placements.size() << " placements\n";
}

// --- stitch --------------------------------------------------------------------

struct StitchArgs {
  std::string manifest_path;
  std::string out_path;
  std::string kind = "height";
};

void run_stitch(const StitchArgs& args) {
  std::ifstream in(args.manifest_path);
  if (!in) throw std::runtime_error(args.manifest_path + ": cannot open");
  nlohmann::json j = nlohmann::json::parse(in);

  GridMeta meta;
  const auto& m = j.at("mosaic");
  meta.width = m.at("width").get<int>();
  meta.height = m.at("height").get<int>();
  meta.origin_x = m.at("origin_x").get<double>();
  meta.origin_y = m.at("origin_y").get<double>();
  meta.spatial_resolution = m.at("spatial_resolution").get<double>();

  auto base = std::filesystem::path(args.manifest_path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  if (args.kind == "label") {
    std::vector<TilePlacement<std::int32_t>> tiles;
    for (const auto& t : j.at("tiles")) {
      tiles.push_back({read_label_asc(resolve(t.at("path").get<std::string>())),
                       t.at("offset_row").get<int>(), t.at("offset_col").get<int>(),
                       t.value("margin", 0)});
    }
    write_label_asc(args.out_path, stitch_labels(tiles, meta));
  } else {
    std::vector<TilePlacement<double>> tiles;
    for (const auto& t : j.at("tiles")) {
      tiles.push_back({read_height_asc(resolve(t.at("path").get<std::string>())),
                       t.at("offset_row").get<int>(), t.at("offset_col").get<int>(),
                       t.value("margin", 0)});
    }
    write_height_asc(args.out_path, stitch(tiles, meta));
  }
}

// --- evaluate ------------------------------------------------------------------

struct EvaluateArgs {
  EvaluationInputs inputs;
  std::string out_path;
};

void run_evaluate(const EvaluateArgs& args) {
  MetricsReport report = evaluate_run(args.inputs);
  write_metrics_report(args.out_path, report);
  std::cout << "mae_all_m            " << report.mae_all_m << "\n"
            << "mae_buildings_m      " << report.mae_buildings_m << "\n"
            << "area_weighted_iou    " << report.area_weighted_iou << "\n"
            << "pitch_error_deg      " << report.pitch_error_deg << "\n"
            << "azimuth_error_deg    " << report.azimuth_error_deg << "\n"
            << "mape_uncapped        " << report.mape_uncapped << "\n"
            << "mape_capped          " << report.mape_capped << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"satellite solar potential pipeline"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // synth
  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "render a synthetic scene with ground truth");
  synth->add_option("--spec", synth_args.spec_path, "scene spec JSON")->required();
  synth->add_option("--out-prefix", synth_args.out_prefix, "artifact prefix")->required();
  synth->add_option("--noise", synth_args.noise_sigma, "also write a noisy heightmap (sigma, m)");
  synth->add_option("--seed", synth_args.seed, "noise seed");
  synth->callback([&] { run_synth(synth_args); });

  // reproject
  ReprojectArgs rep_args;
  auto* rep = app.add_subcommand("reproject", "parallax warp between off-nadir and nadir");
  rep->add_option("--elevation", rep_args.elevation, "view elevation, degrees (0, 90]")
      ->required();
  rep->add_option("--azimuth", rep_args.azimuth, "view azimuth, compass degrees")->required();
  rep->add_option("--direction", rep_args.direction, "warp direction")
      ->check(CLI::IsMember({"to-nadir", "to-offnadir"}))
      ->required();
  rep->add_option("--heights", rep_args.heights_path, "height-above-ground raster (.asc)")
      ->required();
  rep->add_option("--input", rep_args.input_path,
                  "values to warp (.asc or .png); defaults to the heights raster");
  rep->add_flag("--sides", rep_args.sides, "rasterize building sides (heights input only)");
  rep->add_flag("--labels", rep_args.labels, "treat an .asc input as integer labels");
  rep->add_flag("--infill", rep_args.infill, "diffuse-fill occluded pixels in the output");
  rep->add_option("--out-prefix", rep_args.out_prefix, "artifact prefix")->required();
  rep->callback([&] { run_reproject(rep_args); });

  // compose-dsm
  std::string cd_heightmap, cd_terrain, cd_out;
  auto* compose = app.add_subcommand("compose-dsm", "DSM = heightmap + terrain");
  compose->add_option("--heightmap", cd_heightmap, "height above ground (.asc)")->required();
  compose->add_option("--terrain", cd_terrain, "terrain elevation (.asc), resampled if needed")
      ->required();
  compose->add_option("--out", cd_out, "output DSM (.asc)")->required();
  compose->callback([&] {
    HeightRaster heightmap = read_height_asc(cd_heightmap);
    HeightRaster terrain = read_height_asc(cd_terrain);
    if (terrain.meta() != heightmap.meta())
      terrain = resample_bilinear(terrain, heightmap.meta());
    write_height_asc(cd_out, compose_dsm(heightmap, terrain));
  });

  // segment
  SegmentArgs seg_args;
  bool seg_no_flat = false;
  auto* seg = app.add_subcommand("segment", "graph-cut roof segmentation");
  seg->add_option("--dsm", seg_args.dsm_path, "DSM (.asc)")->required();
  seg->add_option("--buildings", seg_args.buildings_path, "building instances (.asc)")
      ->required();
  seg->add_option("--out-prefix", seg_args.out_prefix, "artifact prefix")->required();
  seg->add_option("--lambda", seg_args.params.smoothness_lambda, "Potts smoothness weight");
  seg->add_option("--min-area", seg_args.params.min_segment_area_m2,
                  "merge segments smaller than this (m^2)");
  seg->add_option("--passes", seg_args.params.passes, "alpha-expansion sweeps");
  seg->add_option("--azimuths", seg_args.params.azimuth_count, "azimuth discretization");
  seg->add_option("--pitches", seg_args.params.pitches_deg, "candidate pitches, degrees");
  seg->add_flag("--no-flat", seg_no_flat, "drop the flat candidate label");
  seg->callback([&] {
    seg_args.params.include_flat = !seg_no_flat;
    run_segment(seg_args);
  });

  // mask
  auto* mask = app.add_subcommand("mask", "evaluation masks");
  mask->require_subcommand(1);
  std::string mm_first, mm_second, mm_out;
  auto* mismatch = mask->add_subcommand("mismatch", "exclude building-presence disagreements");
  mismatch->add_option("--first", mm_first, "building instances (.asc)")->required();
  mismatch->add_option("--second", mm_second, "building instances (.asc)")->required();
  mismatch->add_option("--out", mm_out, "output mask (.asc)")->required();
  mismatch->callback([&] {
    InstanceMap a{read_label_asc(mm_first), InstanceKind::buildings};
    InstanceMap b{read_label_asc(mm_second), InstanceKind::buildings};
    write_mask_asc(mm_out, temporal_mismatch_mask(a, b));
  });
  std::string mc_buildings, mc_segments, mc_out;
  double mc_threshold = 0.5;
  auto* coverage = mask->add_subcommand("coverage", "exclude poorly segmented buildings");
  coverage->add_option("--buildings", mc_buildings, "building instances (.asc)")->required();
  coverage->add_option("--segments", mc_segments, "roof segments (.asc)")->required();
  coverage->add_option("--threshold", mc_threshold, "minimum covered fraction");
  coverage->add_option("--out", mc_out, "output mask (.asc)")->required();
  coverage->callback([&] {
    InstanceMap b{read_label_asc(mc_buildings), InstanceKind::buildings};
    InstanceMap s{read_label_asc(mc_segments), InstanceKind::roof_segments};
    write_mask_asc(mc_out, coverage_mask(b, s, mc_threshold));
  });
  std::vector<std::string> cb_inputs;
  std::string cb_out;
  auto* combine = mask->add_subcommand("combine", "pixel-wise AND of masks");
  combine->add_option("--inputs", cb_inputs, "input masks (.asc)")->required();
  combine->add_option("--out", cb_out, "output mask (.asc)")->required();
  combine->callback([&] {
    std::vector<MaskRaster> masks;
    for (const auto& p : cb_inputs) masks.push_back(read_mask_asc(p));
    write_mask_asc(cb_out, combine_masks(masks));
  });

  // flux
  FluxArgs flux_args;
  auto* flux = app.add_subcommand("flux", "ray-traced annual solar flux");
  flux->add_option("--dsm", flux_args.dsm_path, "DSM (.asc)")->required();
  flux->add_option("--lat", flux_args.latitude, "latitude, degrees (+north)")->required();
  flux->add_option("--buildings", flux_args.buildings_path,
                   "restrict flux to building pixels (.asc)");
  flux->add_flag("--full-grid", flux_args.full_grid, "compute flux on every pixel");
  flux->add_option("--dni", flux_args.model.dni_w_m2, "direct normal irradiance, W/m^2");
  flux->add_option("--diffuse", flux_args.model.diffuse_fraction, "diffuse fraction of DNI");
  flux->add_option("--samples", flux_args.samples_per_day, "sun samples per day");
  flux->add_option("--step", flux_args.shading.step_fraction, "ray step, pixel fraction");
  flux->add_option("--max-distance", flux_args.shading.max_distance_m,
                   "ray search radius, meters");
  flux->add_option("--workers", flux_args.workers, "worker threads (0 = default)");
  flux->add_option("--out-prefix", flux_args.out_prefix, "artifact prefix")->required();
  flux->callback([&] { run_flux(flux_args); });

  // panels
  PanelsArgs panels_args;
  auto* panels = app.add_subcommand("panels", "pack and rank solar panels per segment");
  panels->add_option("--segments", panels_args.segments_path, "roof segments (.asc)")
      ->required();
  panels->add_option("--stats", panels_args.stats_path, "segment stats JSON")->required();
  panels->add_option("--flux", panels_args.flux_path, "annual flux (.asc)")->required();
  panels->add_option("--rgb", panels_args.rgb_path, "RGB image for footprint overlay PNG");
  panels->add_option("--out-prefix", panels_args.out_prefix, "artifact prefix")->required();
  panels->add_option("--length", panels_args.spec.length_m, "panel length, m");
  panels->add_option("--width", panels_args.spec.width_m, "panel width, m");
  panels->add_option("--rated-w", panels_args.spec.rated_power_w, "rated power, W");
  panels->add_option("--efficiency", panels_args.spec.efficiency, "module efficiency");
  panels->add_option("--pr", panels_args.spec.performance_ratio, "performance ratio");
  panels->add_option("--cap-kw", panels_args.cap_kilowatts, "per-building cap, kW");
  panels->callback([&] { run_panels(panels_args); });

  // stitch
  StitchArgs stitch_args;
  auto* stitch_cmd = app.add_subcommand("stitch", "feathered mosaic of tiles");
  stitch_cmd->add_option("--tiles", stitch_args.manifest_path, "tile manifest JSON")
      ->required();
  stitch_cmd->add_option("--kind", stitch_args.kind, "tile content")
      ->check(CLI::IsMember({"height", "label"}));
  stitch_cmd->add_option("--out", stitch_args.out_path, "output mosaic (.asc)")->required();
  stitch_cmd->callback([&] { run_stitch(stitch_args); });

  // evaluate
  EvaluateArgs eval_args;
  bool eval_no_default_masks = false;
  auto* eval = app.add_subcommand("evaluate", "score one artifact prefix against another");
  eval->add_option("--pred-prefix", eval_args.inputs.pred_prefix, "prediction prefix")
      ->required();
  eval->add_option("--label-prefix", eval_args.inputs.label_prefix, "reference prefix")
      ->required();
  eval->add_option("--masks", eval_args.inputs.extra_mask_paths, "extra masks, ANDed in");
  eval->add_flag("--no-default-masks", eval_no_default_masks,
                 "skip the mismatch and coverage masks");
  eval->add_option("--lat", eval_args.inputs.latitude_deg, "latitude for energy scoring");
  eval->add_option("--samples", eval_args.inputs.samples_per_day, "sun samples per day");
  eval->add_option("--dni", eval_args.inputs.irradiance.dni_w_m2, "DNI, W/m^2");
  eval->add_option("--diffuse", eval_args.inputs.irradiance.diffuse_fraction,
                   "diffuse fraction");
  eval->add_option("--cap-kw", eval_args.inputs.cap_kilowatts, "per-building cap, kW");
  eval->add_option("--workers", eval_args.inputs.workers, "worker threads (0 = default)");
  eval->add_option("--out", eval_args.out_path, "metrics report JSON")->required();
  eval->callback([&] {
    eval_args.inputs.apply_masks = !eval_no_default_masks;
    run_evaluate(eval_args);
  });

  // hillshade
  std::string hs_input, hs_out;
  double hs_elev = 45.0, hs_az = 315.0;
  auto* hs = app.add_subcommand("hillshade", "grayscale hillshade of a height raster");
  hs->add_option("--input", hs_input, "height raster (.asc)")->required();
  hs->add_option("--sun-elevation", hs_elev, "light elevation, degrees");
  hs->add_option("--sun-azimuth", hs_az, "light azimuth, compass degrees");
  hs->add_option("--out", hs_out, "output PNG")->required();
  hs->callback([&] {
    write_gray_png(hs_out, hillshade(surface_normals(read_height_asc(hs_input)), hs_elev, hs_az));
  });

  // run
  std::string run_config;
  int run_workers = 0;
  auto* run = app.add_subcommand("run", "full pipeline from a JSON config");
  run->add_option("--config", run_config, "pipeline config JSON")->required();
  run->add_option("--workers", run_workers, "override config worker count");
  run->callback([&] {
    ConfigValidation v = validate_config(run_config);
    if (!v.ok()) {
      for (const auto& e : v.errors) std::cerr << "config: " << e << "\n";
      throw CliFailure{1};
    }
    if (run_workers > 0) v.config.workers = run_workers;
    RunManifest manifest = run_pipeline(v.config);
    for (const StageRecord& s : manifest.stages)
      std::cout << s.name << ": " << s.wall_ms << " ms\n";
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
  });

  // validate
  std::string val_config;
  auto* val = app.add_subcommand("validate", "check a pipeline config");
  val->add_option("--config", val_config, "pipeline config JSON")->required();
  val->callback([&] {
    ConfigValidation v = validate_config(val_config);
    if (!v.ok()) {
      for (const auto& e : v.errors) std::cerr << "config: " << e << "\n";
      throw CliFailure{1};
    }
    std::cout << "ok\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const CliFailure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
