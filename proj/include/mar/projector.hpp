// Parallel-beam Radon transform, its exact adjoint, and filtered back-projection.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "mar/core.hpp"

namespace mar {

/// A single parallel-beam ray: the line {p : <p, normal> = offset}, traversed along `dir`.
struct Ray {
  double nx, ny;    // unit normal (cos theta, sin theta)
  double dx, dy;    // unit direction (-sin theta, cos theta)
  double offset;    // signed detector coordinate u
};

/// Binds an image grid to a sinogram grid. The image is centred on the rotation axis;
/// pixel (r, c) has centre x = (c - (W-1)/2) * d, y = ((H-1)/2 - r) * d.
/// Bin b sits at u = (b - (N_b-1)/2) * spacing + detector_offset.
class ProjectionGeometry {
 public:
  ProjectionGeometry(ImageGrid image, SinogramGrid sino, double detector_offset = 0.0);

  /// Detector spacing chosen so `n_bins` bins cover the image diagonal with a 2% margin.
  static ProjectionGeometry covering(ImageGrid image, std::size_t n_bins, std::size_t n_views);

  const ImageGrid& image_grid() const noexcept { return image_; }
  const SinogramGrid& sino_grid() const noexcept { return sino_; }
  double detector_offset() const noexcept { return offset_; }

  double bin_position(std::size_t bin) const noexcept;
  Ray ray(std::size_t bin, std::size_t view) const noexcept;

  double x_min() const noexcept { return -0.5 * static_cast<double>(image_.width) * image_.pixel_size; }
  double y_max() const noexcept { return 0.5 * static_cast<double>(image_.height) * image_.pixel_size; }

  /// Same geometry with every length (pixel size, bin spacing, offset) multiplied by `factor`.
  ProjectionGeometry scaled(double factor) const;

  friend bool operator==(const ProjectionGeometry&, const ProjectionGeometry&) = default;

 private:
  ImageGrid image_;
  SinogramGrid sino_;
  double offset_ = 0.0;
};

/// Line integrals along every ray, using exact ray/pixel intersection lengths.
Sinogram forward_project(const Image& img, const ProjectionGeometry& geom);

/// Literal transpose of forward_project.
Image back_project(const Sinogram& sino, const ProjectionGeometry& geom);

/// Calls `visit(pixel_index, length)` for every pixel crossed by ray (bin, view).
/// Exposed so tests and tools can assemble the system matrix row by row.
template <class Visitor>
void trace_ray(const ProjectionGeometry& geom, std::size_t bin, std::size_t view, Visitor&& visit);

struct RampFilter {
  enum class Window { RamLak, SheppLogan, Hann };
  Window window = Window::Hann;
  double cutoff = 1.0;  // fraction of Nyquist, in (0, 1]

  void validate() const;
};

std::string_view to_string(RampFilter::Window w);
RampFilter::Window parse_filter_window(std::string_view s);

/// Ramp-filters every view along the bin axis (zero-padded FFT to the next power of two >= 2 N_b).
Sinogram ramp_filter(const Sinogram& sino, const ProjectionGeometry& geom, const RampFilter& filter);

/// Filtered back-projection. Filtering as in ramp_filter, followed by pixel-driven
/// linear-interpolation back-projection scaled by pi / N_p.
Image fbp(const Sinogram& sino, const ProjectionGeometry& geom, const RampFilter& filter = {});

/// Power-iteration estimate of the spectral norm of the forward projector.
/// Non-decreasing in `iters` for a fixed seed.
double operator_norm(const ProjectionGeometry& geom, int iters = 30, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------

namespace detail {
inline constexpr double kAxisSnap = 1e-12;
}

template <class Visitor>
void trace_ray(const ProjectionGeometry& geom, std::size_t bin, std::size_t view, Visitor&& visit) {
  const Ray ray = geom.ray(bin, view);
  const auto& g = geom.image_grid();
  const double d = g.pixel_size;
  const double x0 = geom.x_min();
  const double x1 = -x0;
  const double y1 = geom.y_max();
  const double y0 = -y1;
  const auto W = static_cast<long>(g.width);
  const auto H = static_cast<long>(g.height);

  // Foot of the ray on the normal; points are ox + t*dx, oy + t*dy.
  const double ox = ray.offset * ray.nx;
  const double oy = ray.offset * ray.ny;

  double t_lo = -1e300, t_hi = 1e300;
  // Slab clipping. Axis-parallel rays use half-open pixel columns [x_k, x_{k+1}).
  if (ray.dx == 0.0) {
    if (ox < x0 || ox >= x1) return;
  } else {
    double ta = (x0 - ox) / ray.dx, tb = (x1 - ox) / ray.dx;
    if (ta > tb) std::swap(ta, tb);
    t_lo = std::max(t_lo, ta);
    t_hi = std::min(t_hi, tb);
  }
  if (ray.dy == 0.0) {
    if (oy <= y0 || oy > y1) return;
  } else {
    double ta = (y0 - oy) / ray.dy, tb = (y1 - oy) / ray.dy;
    if (ta > tb) std::swap(ta, tb);
    t_lo = std::max(t_lo, ta);
    t_hi = std::min(t_hi, tb);
  }
  if (!(t_hi > t_lo)) return;

  // Index-based crossing parameters keep the traversal free of accumulated drift.
  auto x_line = [&](long k) { return (x0 + static_cast<double>(k) * d - ox) / ray.dx; };
  auto y_line = [&](long k) { return (y1 - static_cast<double>(k) * d - oy) / ray.dy; };

  long kx = 0, step_x = 0, ky = 0, step_y = 0;
  double tx = 1e300, ty = 1e300;
  if (ray.dx != 0.0) {
    const double fx = (ox + t_lo * ray.dx - x0) / d;
    if (ray.dx > 0) {
      kx = static_cast<long>(std::floor(fx)) + 1;
      step_x = 1;
    } else {
      kx = static_cast<long>(std::ceil(fx)) - 1;
      step_x = -1;
    }
    tx = x_line(kx);
  }
  if (ray.dy != 0.0) {
    // Horizontal grid lines are indexed from the top edge downwards.
    const double fy = (y1 - (oy + t_lo * ray.dy)) / d;
    if (ray.dy < 0) {
      ky = static_cast<long>(std::floor(fy)) + 1;
      step_y = 1;
    } else {
      ky = static_cast<long>(std::ceil(fy)) - 1;
      step_y = -1;
    }
    ty = y_line(ky);
  }

  double t = t_lo;
  while (t < t_hi) {
    const double t_next = std::min({tx, ty, t_hi});
    if (t_next > t) {
      const double tm = 0.5 * (t + t_next);
      long c = static_cast<long>(std::floor((ox + tm * ray.dx - x0) / d));
      long r = static_cast<long>(std::floor((y1 - (oy + tm * ray.dy)) / d));
      c = std::clamp(c, 0L, W - 1);
      r = std::clamp(r, 0L, H - 1);
      visit(static_cast<std::size_t>(r * W + c), t_next - t);
    }
    if (tx <= t_next) {
      kx += step_x;
      tx = x_line(kx);
    }
    if (ty <= t_next) {
      ky += step_y;
      ty = y_line(ky);
    }
    t = t_next;
  }
}

}  // namespace mar
