#pragma once

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "solarpipe/geom.hpp"

namespace solarpipe {

// Georeferencing of a regular grid.  origin_x / origin_y give the map
// coordinates of the CENTER of pixel (row 0, col 0); rows advance southward
// (decreasing y), columns advance eastward (increasing x).
struct GridMeta {
  int width = 0;
  int height = 0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double spatial_resolution = 0.25;  // meters per pixel

  double x(int col) const { return origin_x + col * spatial_resolution; }
  double y(int row) const { return origin_y - row * spatial_resolution; }

  // continuous (fractional) pixel coordinates of a map point
  double col_of(double map_x) const { return (map_x - origin_x) / spatial_resolution; }
  double row_of(double map_y) const { return (origin_y - map_y) / spatial_resolution; }

  void validate() const {
    if (width < 1 || height < 1)
      throw std::invalid_argument("GridMeta: width and height must be >= 1");
    if (!(spatial_resolution > 0.0))
      throw std::invalid_argument("GridMeta: spatial_resolution must be > 0");
  }

  bool operator==(const GridMeta& o) const = default;
};

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb8&) const = default;
};

// Dense row-major grid of T with a per-pixel validity flag (nodata mask).
template <typename T>
class Raster {
 public:
  Raster() = default;

  explicit Raster(GridMeta meta, T fill = T{}, bool valid = true) : meta_(meta) {
    meta_.validate();
    std::size_t n = static_cast<std::size_t>(meta_.width) * meta_.height;
    values_.assign(n, fill);
    valid_.assign(n, valid ? 1 : 0);
  }

  const GridMeta& meta() const { return meta_; }
  int width() const { return meta_.width; }
  int height() const { return meta_.height; }
  std::size_t size() const { return values_.size(); }

  bool in_bounds(int row, int col) const {
    return row >= 0 && row < meta_.height && col >= 0 && col < meta_.width;
  }

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * meta_.width + col;
  }

  T& operator()(int row, int col) { return values_[index(row, col)]; }
  const T& operator()(int row, int col) const { return values_[index(row, col)]; }

  T& at(std::size_t i) { return values_[i]; }
  const T& at(std::size_t i) const { return values_[i]; }

  bool is_valid(int row, int col) const { return valid_[index(row, col)] != 0; }
  bool is_valid(std::size_t i) const { return valid_[i] != 0; }
  void set_valid(int row, int col, bool v) { valid_[index(row, col)] = v ? 1 : 0; }
  void set_valid(std::size_t i, bool v) { valid_[i] = v ? 1 : 0; }

  bool all_valid() const {
    for (auto v : valid_)
      if (!v) return false;
    return true;
  }

  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }
  std::vector<std::uint8_t>& validity() { return valid_; }
  const std::vector<std::uint8_t>& validity() const { return valid_; }

  bool operator==(const Raster& o) const {
    return meta_ == o.meta_ && values_ == o.values_ && valid_ == o.valid_;
  }

 private:
  GridMeta meta_;
  std::vector<T> values_;
  std::vector<std::uint8_t> valid_;
};

using HeightRaster = Raster<double>;
using FluxRaster = Raster<double>;
using LabelRaster = Raster<std::int32_t>;
using MaskRaster = Raster<std::uint8_t>;
using GrayRaster = Raster<std::uint8_t>;
using ColorRaster = Raster<Rgb8>;

// Per-pixel unit surface normals (x = east, y = north, z = up, z >= 0).
using NormalField = Raster<Vec3>;

// Integer instance ids over a grid; 0 = background, ids >= 1 are instances.
enum class InstanceKind { buildings, roof_segments };

struct InstanceMap {
  LabelRaster ids;
  InstanceKind kind = InstanceKind::buildings;
};

}  // namespace solarpipe
