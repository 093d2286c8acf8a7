#include "mar/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace mar {

static_assert(std::endian::native == std::endian::little, "raw float I/O assumes a little-endian host");

namespace {

fs::path stem_of(const fs::path& base) {
  const auto ext = base.extension();
  if (ext == ".raw" || ext == ".hdr") {
    fs::path p = base;
    p.replace_extension();
    return p;
  }
  return base;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field(const fs::path& base, std::span<const double> values, std::size_t width, std::size_t height,
                 std::string_view unit, const std::string& extra) {
  const fs::path stem = stem_of(base);
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  {
    std::ofstream hdr(header_path(stem));
    if (!hdr) throw IoError("cannot write " + header_path(stem).string());
    hdr << "width=" << width << "\nheight=" << height << "\nunit=" << unit << "\n" << extra;
  }
  std::vector<float> buf(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) buf[i] = static_cast<float>(values[i]);
  std::ofstream raw(raw_path(stem), std::ios::binary);
  if (!raw) throw IoError("cannot write " + raw_path(stem).string());
  raw.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!raw) throw IoError("short write to " + raw_path(stem).string());
}

}  // namespace

fs::path raw_path(const fs::path& base) {
  fs::path p = stem_of(base);
  p += ".raw";
  return p;
}

fs::path header_path(const fs::path& base) {
  fs::path p = stem_of(base);
  p += ".hdr";
  return p;
}

RawHeader read_header(const fs::path& base) {
  const fs::path path = header_path(base);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  RawHeader h;
  bool have_w = false, have_h = false, have_u = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(path.string() + ": malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    try {
      if (key == "width") {
        h.width = std::stoul(val);
        have_w = true;
      } else if (key == "height") {
        h.height = std::stoul(val);
        have_h = true;
      } else if (key == "unit") {
        h.unit = val;
        have_u = true;
      } else if (key == "pixel_size") {
        h.pixel_size = std::stod(val);
      } else if (key == "bin_spacing") {
        h.bin_spacing = std::stod(val);
      }
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ": bad value for '" + key + "'");
    }
  }
  if (!have_w || !have_h || !have_u) throw IoError(path.string() + ": header needs width, height and unit");
  return h;
}

std::vector<float> read_raw_floats(const fs::path& base, std::size_t count) {
  const fs::path path = raw_path(base);
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != count * sizeof(float))
    throw IoError(path.string() + ": expected " + std::to_string(count * sizeof(float)) + " bytes, found " +
                  std::to_string(bytes));
  in.seekg(0);
  std::vector<float> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw IoError("short read from " + path.string());
  return buf;
}

void write_image(const fs::path& base, const Image& img) {
  write_field(base, img.values(), img.width(), img.height(), to_string(img.unit()),
              "pixel_size=" + format_double(img.grid().pixel_size) + "\n");
}

void write_sinogram(const fs::path& base, const Sinogram& sino) {
  write_field(base, sino.values(), sino.n_views(), sino.n_bins(), to_string(sino.kind()),
              "bin_spacing=" + format_double(sino.grid().bin_spacing) + "\n");
}

Image read_image(const fs::path& base) {
  if (base.extension() == ".png") return read_png_mask(base);
  const RawHeader h = read_header(base);
  const auto buf = read_raw_floats(base, h.width * h.height);
  std::vector<double> values(buf.begin(), buf.end());
  Image img(ImageGrid(h.height, h.width, h.pixel_size), parse_image_unit(h.unit), std::move(values));
  img.validate(std::numeric_limits<double>::infinity());
  return img;
}

Sinogram read_sinogram(const fs::path& base) {
  const RawHeader h = read_header(base);
  const auto buf = read_raw_floats(base, h.width * h.height);
  std::vector<double> values(buf.begin(), buf.end());
  Sinogram s(SinogramGrid(h.height, h.width, h.bin_spacing), parse_sinogram_kind(h.unit), std::move(values));
  s.validate();
  return s;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png_preview(const fs::path& path, const Image& img, double lo, double hi) {
  if (!(hi > lo)) throw ValidationError("PNG display window must satisfy lo < hi");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  std::vector<std::uint8_t> row(img.width() * 2);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      const double t = std::clamp((img(r, c) - lo) / (hi - lo), 0.0, 1.0);
      const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      row[2 * c] = static_cast<std::uint8_t>(v >> 8);  // PNG is big-endian
      row[2 * c + 1] = static_cast<std::uint8_t>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png_mask(const fs::path& path, double pixel_size) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng failed reading " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  const std::size_t bytes_per_px = rowbytes / width;
  std::vector<std::uint8_t> row(rowbytes);
  Image out(ImageGrid(height, width, pixel_size), ImageUnit::Binary);
  for (std::size_t r = 0; r < height; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t c = 0; c < width; ++c) {
      bool nonzero = false;
      for (std::size_t k = 0; k < bytes_per_px; ++k) nonzero |= row[c * bytes_per_px + k] != 0;
      out(r, c) = nonzero ? 1.0 : 0.0;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mar
