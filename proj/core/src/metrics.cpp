#include "solarpipe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "solarpipe/geom.hpp"

namespace solarpipe {

double masked_mae(const HeightRaster& pred, const HeightRaster& label, const MaskRaster* mask,
                  const InstanceMap* region) {
  if (pred.meta() != label.meta()) throw std::invalid_argument("masked_mae: grids must match");
  if (mask && mask->meta() != pred.meta())
    throw std::invalid_argument("masked_mae: mask grid mismatch");
  if (region && region->ids.meta() != pred.meta())
    throw std::invalid_argument("masked_mae: region grid mismatch");
  double sum = 0.0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred.is_valid(i) || !label.is_valid(i)) continue;
    if (mask && mask->at(i) == 0) continue;
    if (region && !(region->ids.is_valid(i) && region->ids.at(i) > 0)) continue;
    sum += std::fabs(pred.at(i) - label.at(i));
    ++n;
  }
  if (n == 0) throw std::invalid_argument("masked_mae: no pixels to compare");
  return sum / static_cast<double>(n);
}

IouResult match_and_iou(const InstanceMap& pred, const InstanceMap& label,
                        const MaskRaster* mask) {
  if (pred.ids.meta() != label.ids.meta())
    throw std::invalid_argument("match_and_iou: grids must match");
  if (mask && mask->meta() != pred.ids.meta())
    throw std::invalid_argument("match_and_iou: mask grid mismatch");

  // pixel sets over masked-in pixels
  std::map<int, std::vector<std::size_t>> label_px, pred_px;
  for (std::size_t i = 0; i < pred.ids.size(); ++i) {
    if (mask && mask->at(i) == 0) continue;
    if (label.ids.is_valid(i) && label.ids.at(i) > 0) label_px[label.ids.at(i)].push_back(i);
    if (pred.ids.is_valid(i) && pred.ids.at(i) > 0) pred_px[pred.ids.at(i)].push_back(i);
  }
  if (label_px.empty()) throw std::invalid_argument("match_and_iou: label map has no segments");

  // visit label segments by decreasing area (ties: lower id)
  std::vector<int> order;
  order.reserve(label_px.size());
  for (const auto& [id, px] : label_px) order.push_back(id);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    std::size_t sa = label_px[a].size(), sb = label_px[b].size();
    if (sa != sb) return sa > sb;
    return a < b;
  });

  IouResult result;
  std::map<int, bool> pred_taken;
  std::int64_t total_label_px = 0;
  double weighted = 0.0;
  for (int lid : order) {
    const auto& lp = label_px[lid];
    total_label_px += static_cast<std::int64_t>(lp.size());
    // intersection counts against every unmatched predicted segment
    std::map<int, std::int64_t> inter;
    for (std::size_t i : lp) {
      if (!pred.ids.is_valid(i)) continue;
      int pid = pred.ids.at(i);
      if (pid <= 0 || pred_taken[pid]) continue;
      ++inter[pid];
    }
    int best_pid = 0;
    std::int64_t best_count = 0;
    for (const auto& [pid, cnt] : inter) {
      if (cnt > best_count) {  // ties keep the lower id (map order)
        best_count = cnt;
        best_pid = pid;
      }
    }
    if (best_pid == 0) {
      ++result.unmatched_labels;
      continue;
    }
    pred_taken[best_pid] = true;
    SegmentMatch match;
    match.label_id = lid;
    match.pred_id = best_pid;
    match.intersection = best_count;
    match.label_area_px = static_cast<std::int64_t>(lp.size());
    match.union_count = static_cast<std::int64_t>(lp.size()) +
                        static_cast<std::int64_t>(pred_px[best_pid].size()) - best_count;
    match.iou = static_cast<double>(match.intersection) / static_cast<double>(match.union_count);
    weighted += match.iou * static_cast<double>(lp.size());
    result.matches.push_back(match);
  }
  for (const auto& [pid, px] : pred_px)
    if (!pred_taken[pid]) ++result.unmatched_preds;
  result.area_weighted_iou = total_label_px > 0 ? weighted / static_cast<double>(total_label_px) : 0.0;
  return result;
}

AngleErrors segment_angle_errors(const std::vector<SegmentStats>& pred_stats,
                                 const std::vector<SegmentStats>& label_stats,
                                 const std::vector<SegmentMatch>& matches) {
  if (matches.empty()) throw std::invalid_argument("segment_angle_errors: no matches");
  std::map<int, const SegmentStats*> pred_by_id, label_by_id;
  for (const auto& s : pred_stats) pred_by_id[s.id] = &s;
  for (const auto& s : label_stats) label_by_id[s.id] = &s;

  AngleErrors out;
  double pitch_weight = 0.0, pitch_acc = 0.0;
  double az_weight = 0.0, az_acc = 0.0;
  for (const SegmentMatch& m : matches) {
    auto pit = pred_by_id.find(m.pred_id);
    auto lit = label_by_id.find(m.label_id);
    if (pit == pred_by_id.end() || lit == label_by_id.end())
      throw std::invalid_argument("segment_angle_errors: match references unknown segment id");
    const SegmentStats& p = *pit->second;
    const SegmentStats& l = *lit->second;
    double w = l.area_m2;
    pitch_acc += w * std::fabs(p.pitch_deg - l.pitch_deg);
    pitch_weight += w;
    ++out.pitch_pairs;
    if (p.azimuth_deg && l.azimuth_deg) {
      az_acc += w * circular_distance_deg(*p.azimuth_deg, *l.azimuth_deg);
      az_weight += w;
      ++out.azimuth_pairs;
    }
  }
  if (pitch_weight > 0.0) out.pitch_error_deg = pitch_acc / pitch_weight;
  if (az_weight > 0.0) out.azimuth_error_deg = az_acc / az_weight;
  return out;
}

MapeResult energy_mape(const std::map<int, double>& pred, const std::map<int, double>& label) {
  MapeResult out;
  double acc = 0.0;
  int used = 0;
  for (const auto& [id, lv] : label) {
    auto it = pred.find(id);
    if (it == pred.end()) continue;
    ++out.common;
    if (!(lv > 0.0)) {
      ++out.skipped;
      continue;
    }
    acc += std::fabs(it->second - lv) / lv;
    ++used;
  }
  if (used == 0)
    throw std::invalid_argument("energy_mape: no common building with positive label energy");
  out.mape = acc / used;
  return out;
}

void write_metrics_report(const std::string& path, const MetricsReport& r) {
  nlohmann::json j{{"mae_all_m", r.mae_all_m},
                   {"mae_buildings_m", r.mae_buildings_m},
                   {"area_weighted_iou", r.area_weighted_iou},
                   {"matched_segments", r.matched_segments},
                   {"unmatched_labels", r.unmatched_labels},
                   {"unmatched_preds", r.unmatched_preds},
                   {"pitch_error_deg", r.pitch_error_deg},
                   {"azimuth_error_deg", r.azimuth_error_deg},
                   {"azimuth_pairs", r.azimuth_pairs},
                   {"mape_uncapped", r.mape_uncapped},
                   {"mape_capped", r.mape_capped},
                   {"cap_kilowatts", r.cap_kilowatts},
                   {"energy_buildings", r.energy_buildings},
                   {"energy_skipped", r.energy_skipped},
                   {"masked_pixels", r.masked_pixels}};
  nlohmann::json matches = nlohmann::json::array();
  for (const SegmentMatch& m : r.matches) {
    matches.push_back({{"label_id", m.label_id},
                       {"pred_id", m.pred_id},
                       {"intersection", m.intersection},
                       {"union", m.union_count},
                       {"iou", m.iou},
                       {"label_area_px", m.label_area_px}});
  }
  j["matches"] = std::move(matches);
  auto energies = [](const std::map<int, double>& e) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [bid, kwh] : e) obj[std::to_string(bid)] = kwh;
    return obj;
  };
  j["pred_energy_kwh"] = energies(r.pred_energy_kwh);
  j["label_energy_kwh"] = energies(r.label_energy_kwh);
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
}

}  // namespace solarpipe
