// File formats: raw little-endian float32 fields with a text sidecar, and PNG.
//
// A field `name` is stored as `name.raw` (row-major float32, little endian) and
// `name.hdr`, a text file of `key=value` lines:
//
//   width=<columns>
//   height=<rows>
//   unit=<HU|Attenuation|Binary|Weight|Raw|Normalized|Trace>
//
// Images use unit names from ImageUnit, sinograms from SinogramKind (rows = detector
// bins, columns = views). Sinograms additionally record `bin_spacing`.
#pragma once

#include <filesystem>
#include <string>

#include "mar/core.hpp"

namespace mar {

namespace fs = std::filesystem;

struct RawHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  std::string unit;
  double pixel_size = 1.0;
  double bin_spacing = 1.0;
};

/// Paths of the two files making up a field. Accepts `dir/name`, `dir/name.raw` or `dir/name.hdr`.
fs::path raw_path(const fs::path& base);
fs::path header_path(const fs::path& base);

RawHeader read_header(const fs::path& base);
std::vector<float> read_raw_floats(const fs::path& base, std::size_t count);

void write_image(const fs::path& base, const Image& img);
void write_sinogram(const fs::path& base, const Sinogram& sino);

/// Reads an image. PNG files are accepted as 8-bit masks (nonzero = 1, unit Binary).
Image read_image(const fs::path& base);
Sinogram read_sinogram(const fs::path& base);

/// 16-bit grayscale preview with the display window [lo, hi] in the image's own units.
void write_png_preview(const fs::path& path, const Image& img, double lo = -175.0, double hi = 275.0);

/// Reads an 8- or 16-bit grayscale PNG as a binary mask (nonzero = metal).
Image read_png_mask(const fs::path& path, double pixel_size = 1.0);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace mar
