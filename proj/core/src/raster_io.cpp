#include "solarpipe/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>

namespace solarpipe {

namespace {

constexpr double kNoData = -9999.0;

struct AscHeader {
  int ncols = 0;
  int nrows = 0;
  double xllcenter = 0.0;
  double yllcenter = 0.0;
  double cellsize = 0.0;
  double nodata = kNoData;
  bool has_nodata = false;
  bool x_is_corner = false;
  bool y_is_corner = false;
};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

AscHeader read_asc_header(std::istream& in, const std::string& path) {
  AscHeader h;
  bool seen_cols = false, seen_rows = false, seen_x = false, seen_y = false, seen_cell = false;
  // header lines are keyword/value pairs; the grid body starts at the first
  // token that is not a known keyword
  while (true) {
    std::streampos mark = in.tellg();
    std::string key;
    if (!(in >> key)) fail(path, "truncated header");
    std::string lower;
    for (char c : key) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    double value = 0.0;
    if (lower == "ncols" || lower == "nrows" || lower == "xllcenter" || lower == "yllcenter" ||
        lower == "xllcorner" || lower == "yllcorner" || lower == "cellsize" ||
        lower == "nodata_value") {
      if (!(in >> value)) fail(path, "bad header value for " + key);
      if (lower == "ncols") { h.ncols = static_cast<int>(value); seen_cols = true; }
      else if (lower == "nrows") { h.nrows = static_cast<int>(value); seen_rows = true; }
      else if (lower == "xllcenter") { h.xllcenter = value; h.x_is_corner = false; seen_x = true; }
      else if (lower == "yllcenter") { h.yllcenter = value; h.y_is_corner = false; seen_y = true; }
      else if (lower == "xllcorner") { h.xllcenter = value; h.x_is_corner = true; seen_x = true; }
      else if (lower == "yllcorner") { h.yllcenter = value; h.y_is_corner = true; seen_y = true; }
      else if (lower == "cellsize") { h.cellsize = value; seen_cell = true; }
      else { h.nodata = value; h.has_nodata = true; }
    } else {
      in.clear();
      in.seekg(mark);
      break;
    }
  }
  if (!(seen_cols && seen_rows && seen_x && seen_y && seen_cell))
    fail(path, "incomplete header (need ncols, nrows, xll*, yll*, cellsize)");
  if (h.ncols < 1 || h.nrows < 1) fail(path, "non-positive grid dimensions");
  if (!(h.cellsize > 0.0)) fail(path, "non-positive cellsize");
  // corner registration shifts by half a cell to the cell center
  if (h.x_is_corner) h.xllcenter += 0.5 * h.cellsize;
  if (h.y_is_corner) h.yllcenter += 0.5 * h.cellsize;
  return h;
}

GridMeta meta_from_header(const AscHeader& h) {
  GridMeta m;
  m.width = h.ncols;
  m.height = h.nrows;
  m.spatial_resolution = h.cellsize;
  m.origin_x = h.xllcenter;
  m.origin_y = h.yllcenter + (h.nrows - 1) * h.cellsize;
  return m;
}

void write_asc_header(std::FILE* f, const GridMeta& m) {
  std::fprintf(f, "ncols %d\n", m.width);
  std::fprintf(f, "nrows %d\n", m.height);
  std::fprintf(f, "xllcenter %.17g\n", m.origin_x);
  std::fprintf(f, "yllcenter %.17g\n", m.origin_y - (m.height - 1) * m.spatial_resolution);
  std::fprintf(f, "cellsize %.17g\n", m.spatial_resolution);
  std::fprintf(f, "NODATA_value %g\n", kNoData);
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_write(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(path, std::string("cannot open for writing: ") + std::strerror(errno));
  return f;
}

}  // namespace

HeightRaster read_height_asc(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  AscHeader h = read_asc_header(in, path);
  GridMeta m = meta_from_header(h);
  HeightRaster r(m);
  std::size_t n = r.size();
  for (std::size_t i = 0; i < n; ++i) {
    double v;
    if (!(in >> v)) fail(path, "truncated grid body");
    if (h.has_nodata && v == h.nodata) {
      r.at(i) = 0.0;
      r.set_valid(i, false);
    } else {
      r.at(i) = v;
    }
  }
  return r;
}

void write_height_asc(const std::string& path, const HeightRaster& r) {
  FilePtr f = open_for_write(path);
  write_asc_header(f.get(), r.meta());
  char buf[40];
  for (int row = 0; row < r.height(); ++row) {
    for (int col = 0; col < r.width(); ++col) {
      if (col) std::fputc(' ', f.get());
      if (r.is_valid(row, col)) {
        std::snprintf(buf, sizeof buf, "%.17g", r(row, col));
        std::fputs(buf, f.get());
      } else {
        std::fputs("-9999", f.get());
      }
    }
    std::fputc('\n', f.get());
  }
  if (std::ferror(f.get())) fail(path, "write error");
}

LabelRaster read_label_asc(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  AscHeader h = read_asc_header(in, path);
  GridMeta m = meta_from_header(h);
  LabelRaster r(m);
  std::size_t n = r.size();
  for (std::size_t i = 0; i < n; ++i) {
    double v;
    if (!(in >> v)) fail(path, "truncated grid body");
    if (h.has_nodata && v == h.nodata) {
      r.at(i) = 0;
      r.set_valid(i, false);
    } else {
      double rounded = std::nearbyint(v);
      if (rounded != v) fail(path, "non-integer value in integer grid");
      r.at(i) = static_cast<std::int32_t>(rounded);
    }
  }
  return r;
}

void write_label_asc(const std::string& path, const LabelRaster& r) {
  FilePtr f = open_for_write(path);
  write_asc_header(f.get(), r.meta());
  for (int row = 0; row < r.height(); ++row) {
    for (int col = 0; col < r.width(); ++col) {
      if (col) std::fputc(' ', f.get());
      if (r.is_valid(row, col))
        std::fprintf(f.get(), "%d", r(row, col));
      else
        std::fputs("-9999", f.get());
    }
    std::fputc('\n', f.get());
  }
  if (std::ferror(f.get())) fail(path, "write error");
}

MaskRaster read_mask_asc(const std::string& path) {
  LabelRaster labels = read_label_asc(path);
  MaskRaster m(labels.meta());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.at(i) = labels.is_valid(i) && labels.at(i) != 0 ? 1 : 0;
    m.set_valid(i, labels.is_valid(i));
  }
  return m;
}

void write_mask_asc(const std::string& path, const MaskRaster& r) {
  LabelRaster labels(r.meta());
  for (std::size_t i = 0; i < r.size(); ++i) {
    labels.at(i) = r.at(i) ? 1 : 0;
    labels.set_valid(i, r.is_valid(i));
  }
  write_label_asc(path, labels);
}

// --- PNG --------------------------------------------------------------------

namespace {

std::string sidecar_path(const std::string& png_path) { return png_path + ".json"; }

void write_sidecar(const std::string& png_path, const GridMeta& m) {
  nlohmann::json j{{"width", m.width},
                   {"height", m.height},
                   {"origin_x", m.origin_x},
                   {"origin_y", m.origin_y},
                   {"spatial_resolution", m.spatial_resolution}};
  std::ofstream out(sidecar_path(png_path));
  if (!out) fail(sidecar_path(png_path), "cannot open for writing");
  out << j.dump(2) << "\n";
}

bool read_sidecar(const std::string& png_path, GridMeta& m) {
  std::ifstream in(sidecar_path(png_path));
  if (!in) return false;
  nlohmann::json j;
  in >> j;
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.origin_x = j.at("origin_x").get<double>();
  m.origin_y = j.at("origin_y").get<double>();
  m.spatial_resolution = j.at("spatial_resolution").get<double>();
  return true;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (file) std::fclose(file);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (file) std::fclose(file);
  }
};

// reads any PNG as 8-bit RGBA rows
void read_png_rgba(const std::string& path, int& width, int& height,
                   std::vector<std::uint8_t>& rgba) {
  PngReader ctx;
  ctx.file = std::fopen(path.c_str(), "rb");
  if (!ctx.file) fail(path, "cannot open");
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) fail(path, "png_create_read_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) fail(path, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(ctx.png))) fail(path, "libpng error while reading");
  png_init_io(ctx.png, ctx.file);
  png_read_info(ctx.png, ctx.info);
  png_set_expand(ctx.png);
  png_set_strip_16(ctx.png);
  png_set_gray_to_rgb(ctx.png);
  png_set_add_alpha(ctx.png, 0xFF, PNG_FILLER_AFTER);
  png_read_update_info(ctx.png, ctx.info);
  width = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  height = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  rgba.assign(static_cast<std::size_t>(width) * height * 4, 0);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r)
    rows[static_cast<std::size_t>(r)] = rgba.data() + static_cast<std::size_t>(r) * width * 4;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);
}

void write_png(const std::string& path, int width, int height, int color_type,
               const std::vector<std::uint8_t>& pixels) {
  int channels = color_type == PNG_COLOR_TYPE_RGBA ? 4
               : color_type == PNG_COLOR_TYPE_RGB  ? 3
                                                   : 1;
  PngWriter ctx;
  ctx.file = std::fopen(path.c_str(), "wb");
  if (!ctx.file) fail(path, "cannot open for writing");
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) fail(path, "png_create_write_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) fail(path, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(ctx.png))) fail(path, "libpng error while writing");
  png_init_io(ctx.png, ctx.file);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int r = 0; r < height; ++r)
    rows[static_cast<std::size_t>(r)] =
        const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * width * channels);
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

}  // namespace

ColorRaster read_color_png(const std::string& path) {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgba;
  read_png_rgba(path, width, height, rgba);
  GridMeta m;
  m.width = width;
  m.height = height;
  read_sidecar(path, m);
  if (m.width != width || m.height != height)
    fail(path, "sidecar dimensions do not match the PNG");
  ColorRaster r(m);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.at(i) = {rgba[i * 4], rgba[i * 4 + 1], rgba[i * 4 + 2]};
    r.set_valid(i, rgba[i * 4 + 3] != 0);
  }
  return r;
}

void write_color_png(const std::string& path, const ColorRaster& r) {
  bool holes = !r.all_valid();
  std::vector<std::uint8_t> pixels;
  if (holes) {
    pixels.resize(r.size() * 4);
    for (std::size_t i = 0; i < r.size(); ++i) {
      pixels[i * 4] = r.at(i).r;
      pixels[i * 4 + 1] = r.at(i).g;
      pixels[i * 4 + 2] = r.at(i).b;
      pixels[i * 4 + 3] = r.is_valid(i) ? 0xFF : 0x00;
    }
  } else {
    pixels.resize(r.size() * 3);
    for (std::size_t i = 0; i < r.size(); ++i) {
      pixels[i * 3] = r.at(i).r;
      pixels[i * 3 + 1] = r.at(i).g;
      pixels[i * 3 + 2] = r.at(i).b;
    }
  }
  write_png(path, r.width(), r.height(), holes ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB,
            pixels);
  write_sidecar(path, r.meta());
}

GrayRaster read_gray_png(const std::string& path) {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgba;
  read_png_rgba(path, width, height, rgba);
  GridMeta m;
  m.width = width;
  m.height = height;
  read_sidecar(path, m);
  if (m.width != width || m.height != height)
    fail(path, "sidecar dimensions do not match the PNG");
  GrayRaster r(m);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.at(i) = rgba[i * 4];
    r.set_valid(i, rgba[i * 4 + 3] != 0);
  }
  return r;
}

void write_gray_png(const std::string& path, const GrayRaster& r) {
  // invalid pixels are written as 0; gray PNGs are visualization artifacts,
  // not data carriers
  std::vector<std::uint8_t> pixels(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) pixels[i] = r.is_valid(i) ? r.at(i) : 0;
  write_png(path, r.width(), r.height(), PNG_COLOR_TYPE_GRAY, pixels);
  write_sidecar(path, r.meta());
}

ColorRaster false_color(const HeightRaster& r) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.is_valid(i)) continue;
    double v = r.at(i);
    if (!any) {
      lo = hi = v;
      any = true;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  ColorRaster out(r.meta());
  double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.is_valid(i)) {
      out.at(i) = {0, 0, 0};
      out.set_valid(i, false);
      continue;
    }
    double t = (r.at(i) - lo) / span;
    // dark blue -> cyan -> yellow ramp
    double red = std::clamp(2.0 * t - 1.0, 0.0, 1.0);
    double green = std::clamp(1.6 * t, 0.0, 1.0);
    double blue = std::clamp(1.0 - 1.4 * t, 0.15, 1.0) * (t < 0.75 ? 1.0 : 4.0 * (1.0 - t));
    out.at(i) = {static_cast<std::uint8_t>(std::lround(255.0 * red)),
                 static_cast<std::uint8_t>(std::lround(255.0 * green)),
                 static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(blue, 0.0, 1.0)))};
  }
  return out;
}

}  // namespace solarpipe
