#include "solarpipe/stitch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace solarpipe {

namespace {

// edge-distance feathering weight for position i of `extent` pixels
double ramp_weight(int i, int extent, int margin) {
  double from_low = static_cast<double>(i + 1) / (margin + 1);
  double from_high = static_cast<double>(extent - i) / (margin + 1);
  return std::min({from_low, from_high, 1.0});
}

template <typename T>
void check_tiles(const std::vector<TilePlacement<T>>& tiles, const GridMeta& mosaic_meta) {
  mosaic_meta.validate();
  if (tiles.empty()) throw std::invalid_argument("stitch: no tiles");
  for (const auto& t : tiles) {
    if (t.margin < 0) throw std::invalid_argument("stitch: negative margin");
    if (t.offset_row < 0 || t.offset_col < 0 ||
        t.offset_row + t.tile.height() > mosaic_meta.height ||
        t.offset_col + t.tile.width() > mosaic_meta.width)
      throw std::invalid_argument("stitch: tile extends outside the mosaic");
  }
}

// canonical accumulation order, independent of the order tiles are supplied
template <typename T>
std::vector<std::size_t> canonical_order(const std::vector<TilePlacement<T>>& tiles) {
  std::vector<std::size_t> order(tiles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ta = tiles[a];
    const auto& tb = tiles[b];
    if (ta.offset_row != tb.offset_row) return ta.offset_row < tb.offset_row;
    if (ta.offset_col != tb.offset_col) return ta.offset_col < tb.offset_col;
    if (ta.tile.height() != tb.tile.height()) return ta.tile.height() < tb.tile.height();
    if (ta.tile.width() != tb.tile.width()) return ta.tile.width() < tb.tile.width();
    return ta.margin < tb.margin;
  });
  return order;
}

[[noreturn]] void uncovered(int row, int col) {
  throw std::invalid_argument("stitch: mosaic pixel (" + std::to_string(row) + ", " +
                              std::to_string(col) + ") not covered by any tile");
}

// Accumulates weighted contributions per channel; Fn(value) extracts a
// channel as double.
template <typename T, typename Fn>
double blend_channel(const std::vector<TilePlacement<T>>& tiles,
                     const std::vector<std::size_t>& order, int row, int col, Fn channel) {
  double num = 0.0, den = 0.0;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t k : order) {
    const auto& t = tiles[k];
    int tr = row - t.offset_row, tc = col - t.offset_col;
    if (tr < 0 || tr >= t.tile.height() || tc < 0 || tc >= t.tile.width()) continue;
    if (!t.tile.is_valid(tr, tc)) continue;
    double w = ramp_weight(tr, t.tile.height(), t.margin) *
               ramp_weight(tc, t.tile.width(), t.margin);
    double v = channel(t.tile(tr, tc));
    num += w * v;
    den += w;
    if (!any) {
      lo = hi = v;
      any = true;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!any) uncovered(row, col);
  // the blend is a convex combination; clamping enforces that exactly, which
  // also makes agreeing tiles reproduce their value bit-for-bit
  return std::clamp(num / den, lo, hi);
}

}  // namespace

HeightRaster stitch(const std::vector<TilePlacement<double>>& tiles,
                    const GridMeta& mosaic_meta) {
  check_tiles(tiles, mosaic_meta);
  auto order = canonical_order(tiles);
  HeightRaster out(mosaic_meta);
  for (int row = 0; row < mosaic_meta.height; ++row)
    for (int col = 0; col < mosaic_meta.width; ++col)
      out(row, col) = blend_channel(tiles, order, row, col, [](double v) { return v; });
  return out;
}

LabelRaster stitch_labels(const std::vector<TilePlacement<std::int32_t>>& tiles,
                          const GridMeta& mosaic_meta) {
  check_tiles(tiles, mosaic_meta);
  auto order = canonical_order(tiles);
  LabelRaster out(mosaic_meta);
  for (int row = 0; row < mosaic_meta.height; ++row) {
    for (int col = 0; col < mosaic_meta.width; ++col) {
      double best_w = -1.0;
      std::int32_t best_v = 0;
      bool any = false;
      for (std::size_t k : order) {
        const auto& t = tiles[k];
        int tr = row - t.offset_row, tc = col - t.offset_col;
        if (tr < 0 || tr >= t.tile.height() || tc < 0 || tc >= t.tile.width()) continue;
        if (!t.tile.is_valid(tr, tc)) continue;
        double w = ramp_weight(tr, t.tile.height(), t.margin) *
                   ramp_weight(tc, t.tile.width(), t.margin);
        if (w > best_w) {  // ties keep the earliest tile in canonical order
          best_w = w;
          best_v = t.tile(tr, tc);
          any = true;
        }
      }
      if (!any) uncovered(row, col);
      out(row, col) = best_v;
    }
  }
  return out;
}

ColorRaster stitch_color(const std::vector<TilePlacement<Rgb8>>& tiles,
                         const GridMeta& mosaic_meta) {
  check_tiles(tiles, mosaic_meta);
  auto order = canonical_order(tiles);
  ColorRaster out(mosaic_meta);
  auto quantize = [](double v) {
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
  };
  for (int row = 0; row < mosaic_meta.height; ++row) {
    for (int col = 0; col < mosaic_meta.width; ++col) {
      double r = blend_channel(tiles, order, row, col, [](Rgb8 v) { return double(v.r); });
      double g = blend_channel(tiles, order, row, col, [](Rgb8 v) { return double(v.g); });
      double b = blend_channel(tiles, order, row, col, [](Rgb8 v) { return double(v.b); });
      out(row, col) = {quantize(r), quantize(g), quantize(b)};
    }
  }
  return out;
}

}  // namespace solarpipe
