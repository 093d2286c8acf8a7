#include "mar/projector.hpp"

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <numbers>
#include <random>

namespace mar {

namespace {

// Views are split into this many fixed chunks for the transpose so that the
// reduction order does not depend on the number of threads.
constexpr std::size_t kBackProjectChunks = 16;

double snap(double v) { return std::abs(v) < detail::kAxisSnap ? 0.0 : v; }

}  // namespace

ProjectionGeometry::ProjectionGeometry(ImageGrid image, SinogramGrid sino, double detector_offset)
    : image_(image), sino_(sino), offset_(detector_offset) {
  if (!std::isfinite(detector_offset)) throw ValidationError("detector_offset must be finite");
  const double diag = image.pixel_size * std::hypot(static_cast<double>(image.height), static_cast<double>(image.width));
  const double span = static_cast<double>(sino.n_bins) * sino.bin_spacing;
  // Relative slack so that spans computed as exactly the diagonal are accepted.
  if (span < diag * (1.0 - 1e-12))
    throw ValidationError("detector span " + std::to_string(span) + " does not cover the image diagonal " +
                          std::to_string(diag));
}

ProjectionGeometry ProjectionGeometry::covering(ImageGrid image, std::size_t n_bins, std::size_t n_views) {
  if (n_bins < 1) throw ValidationError("n_bins must be >= 1");
  const double diag = image.pixel_size * std::hypot(static_cast<double>(image.height), static_cast<double>(image.width));
  const double spacing = 1.02 * diag / static_cast<double>(n_bins);
  return ProjectionGeometry(image, SinogramGrid(n_bins, n_views, spacing));
}

double ProjectionGeometry::bin_position(std::size_t bin) const noexcept {
  return (static_cast<double>(bin) - 0.5 * static_cast<double>(sino_.n_bins - 1)) * sino_.bin_spacing + offset_;
}

Ray ProjectionGeometry::ray(std::size_t bin, std::size_t view) const noexcept {
  const double theta = sino_.view_angle(view);
  const double c = snap(std::cos(theta));
  const double s = snap(std::sin(theta));
  return Ray{c, s, -s, c, bin_position(bin)};
}

ProjectionGeometry ProjectionGeometry::scaled(double factor) const {
  if (!(factor > 0.0)) throw ValidationError("scale factor must be positive");
  return ProjectionGeometry(ImageGrid(image_.height, image_.width, image_.pixel_size * factor),
                            SinogramGrid(sino_.n_bins, sino_.n_views, sino_.bin_spacing * factor), offset_ * factor);
}

Sinogram forward_project(const Image& img, const ProjectionGeometry& geom) {
  if (!(img.grid() == geom.image_grid())) throw ShapeError("forward_project: image grid does not match geometry");
  const auto& sg = geom.sino_grid();
  Sinogram out(sg, SinogramKind::Raw);
  const auto nb = static_cast<long>(sg.n_bins);
  const auto nv = static_cast<long>(sg.n_views);
  const auto src = img.values();
  auto dst = out.values();
#pragma omp parallel for schedule(static)
  for (long v = 0; v < nv; ++v) {
    for (long b = 0; b < nb; ++b) {
      double acc = 0.0;
      trace_ray(geom, static_cast<std::size_t>(b), static_cast<std::size_t>(v),
                [&](std::size_t pix, double len) { acc += len * src[pix]; });
      dst[static_cast<std::size_t>(b * nv + v)] = acc;
    }
  }
  return out;
}

Image back_project(const Sinogram& sino, const ProjectionGeometry& geom) {
  if (!(sino.grid() == geom.sino_grid())) throw ShapeError("back_project: sinogram grid does not match geometry");
  const auto& sg = geom.sino_grid();
  const auto& ig = geom.image_grid();
  const std::size_t nv = sg.n_views;
  const std::size_t chunks = std::min(kBackProjectChunks, nv);
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(ig.size(), 0.0));
  const auto src = sino.values();
#pragma omp parallel for schedule(static)
  for (long ch = 0; ch < static_cast<long>(chunks); ++ch) {
    auto& acc = partial[static_cast<std::size_t>(ch)];
    const std::size_t v_begin = nv * static_cast<std::size_t>(ch) / chunks;
    const std::size_t v_end = nv * (static_cast<std::size_t>(ch) + 1) / chunks;
    for (std::size_t v = v_begin; v < v_end; ++v) {
      for (std::size_t b = 0; b < sg.n_bins; ++b) {
        const double val = src[b * nv + v];
        if (val == 0.0) continue;
        trace_ray(geom, b, v, [&](std::size_t pix, double len) { acc[pix] += len * val; });
      }
    }
  }
  Image out(ig, ImageUnit::Attenuation);
  auto dst = out.values();
  for (const auto& p : partial)
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += p[i];
  return out;
}

void RampFilter::validate() const {
  if (!(cutoff > 0.0 && cutoff <= 1.0)) throw ValidationError("ramp filter cutoff must lie in (0, 1]");
}

std::string_view to_string(RampFilter::Window w) {
  switch (w) {
    case RampFilter::Window::RamLak: return "ramlak";
    case RampFilter::Window::SheppLogan: return "shepp-logan";
    case RampFilter::Window::Hann: return "hann";
  }
  return "?";
}

RampFilter::Window parse_filter_window(std::string_view s) {
  if (s == "ramlak" || s == "ram-lak") return RampFilter::Window::RamLak;
  if (s == "shepp-logan" || s == "shepplogan") return RampFilter::Window::SheppLogan;
  if (s == "hann") return RampFilter::Window::Hann;
  throw ValidationError("unknown ramp filter window '" + std::string(s) + "'");
}

namespace {

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Frequency response of the band-limited ramp (spatial-domain Ram-Lak kernel),
// multiplied by the apodisation window. Length pad/2 + 1.
std::vector<double> filter_response(std::size_t pad, double spacing, const RampFilter& filter) {
  std::vector<double> h(pad, 0.0);
  const double tau2 = spacing * spacing;
  h[0] = 1.0 / (4.0 * tau2);
  for (std::size_t n = 1; n <= pad / 2; n += 2) {
    const double v = -1.0 / (static_cast<double>(n * n) * std::numbers::pi * std::numbers::pi * tau2);
    h[n] = v;
    h[pad - n] = v;
  }
  const std::size_t nf = pad / 2 + 1;
  std::vector<std::complex<double>> spec(nf);
  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(pad), h.data(),
                                          reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  std::vector<double> resp(nf);
  for (std::size_t k = 0; k < nf; ++k) {
    const double nu = static_cast<double>(k) / static_cast<double>(pad / 2);  // fraction of Nyquist
    double w = 0.0;
    if (nu <= filter.cutoff) {
      const double x = nu / filter.cutoff;
      switch (filter.window) {
        case RampFilter::Window::RamLak: w = 1.0; break;
        case RampFilter::Window::SheppLogan: {
          const double a = 0.5 * std::numbers::pi * x;
          w = a == 0.0 ? 1.0 : std::sin(a) / a;
          break;
        }
        case RampFilter::Window::Hann: w = 0.5 * (1.0 + std::cos(std::numbers::pi * x)); break;
      }
    }
    resp[k] = spec[k].real() * w;
  }
  return resp;
}

// Filtered projections laid out view-major: out[v * n_bins + b].
std::vector<double> filtered_views(const Sinogram& sino, const ProjectionGeometry& geom, const RampFilter& filter) {
  filter.validate();
  const auto& sg = geom.sino_grid();
  if (sg.n_bins < 4) throw ValidationError("ramp filter needs at least 4 detector bins");
  const std::size_t nb = sg.n_bins;
  const std::size_t nv = sg.n_views;
  const std::size_t pad = next_pow2(2 * nb);
  const std::size_t nf = pad / 2 + 1;
  const auto resp = filter_response(pad, sg.bin_spacing, filter);

  double* buf = fftw_alloc_real(pad);
  fftw_complex* freq = fftw_alloc_complex(nf);
  fftw_plan fwd, inv;
  {
    std::lock_guard lock(fftw_plan_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(pad), buf, freq, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(pad), freq, buf, FFTW_ESTIMATE);
  }

  std::vector<double> out(nb * nv);
  const double scale = sg.bin_spacing / static_cast<double>(pad);
  const auto src = sino.values();
  // Sequential over views: one plan/buffer pair, identical arithmetic regardless of threads.
  for (std::size_t v = 0; v < nv; ++v) {
    for (std::size_t b = 0; b < nb; ++b) buf[b] = src[b * nv + v];
    std::fill(buf + nb, buf + pad, 0.0);
    fftw_execute(fwd);
    for (std::size_t k = 0; k < nf; ++k) {
      freq[k][0] *= resp[k];
      freq[k][1] *= resp[k];
    }
    fftw_execute(inv);
    for (std::size_t b = 0; b < nb; ++b) out[v * nb + b] = buf[b] * scale;
  }

  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  fftw_free(buf);
  fftw_free(freq);
  return out;
}

}  // namespace

Sinogram ramp_filter(const Sinogram& sino, const ProjectionGeometry& geom, const RampFilter& filter) {
  if (!(sino.grid() == geom.sino_grid())) throw ShapeError("ramp_filter: sinogram grid does not match geometry");
  const auto q = filtered_views(sino, geom, filter);
  const std::size_t nb = sino.n_bins(), nv = sino.n_views();
  Sinogram out(sino.grid(), SinogramKind::Raw);
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t b = 0; b < nb; ++b) out(b, v) = q[v * nb + b];
  return out;
}

Image fbp(const Sinogram& sino, const ProjectionGeometry& geom, const RampFilter& filter) {
  if (!(sino.grid() == geom.sino_grid())) throw ShapeError("fbp: sinogram grid does not match geometry");
  const auto q = filtered_views(sino, geom, filter);
  const auto& sg = geom.sino_grid();
  const auto& ig = geom.image_grid();
  const std::size_t nb = sg.n_bins, nv = sg.n_views;

  std::vector<double> cs(nv), sn(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    const Ray r = geom.ray(0, v);
    cs[v] = r.nx;
    sn[v] = r.ny;
  }
  const double centre = 0.5 * static_cast<double>(nb - 1);
  const double inv_spacing = 1.0 / sg.bin_spacing;
  const double offset = geom.detector_offset();
  const double scale = std::numbers::pi / static_cast<double>(nv);
  const double d = ig.pixel_size;

  Image out(ig, ImageUnit::Attenuation);
  auto dst = out.values();
  const auto H = static_cast<long>(ig.height);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < H; ++r) {
    const double y = (0.5 * static_cast<double>(ig.height - 1) - static_cast<double>(r)) * d;
    for (std::size_t c = 0; c < ig.width; ++c) {
      const double x = (static_cast<double>(c) - 0.5 * static_cast<double>(ig.width - 1)) * d;
      double acc = 0.0;
      for (std::size_t v = 0; v < nv; ++v) {
        const double pos = (x * cs[v] + y * sn[v] - offset) * inv_spacing + centre;
        const double fl = std::floor(pos);
        const long i0 = static_cast<long>(fl);
        const double w = pos - fl;
        const double* qv = &q[v * nb];
        if (i0 >= 0 && i0 < static_cast<long>(nb)) acc += (1.0 - w) * qv[i0];
        if (i0 + 1 >= 0 && i0 + 1 < static_cast<long>(nb)) acc += w * qv[i0 + 1];
      }
      dst[static_cast<std::size_t>(r) * ig.width + c] = acc * scale;
    }
  }
  return out;
}

double operator_norm(const ProjectionGeometry& geom, int iters, std::uint64_t seed) {
  if (iters < 1) throw ValidationError("operator_norm needs at least one iteration");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Image x(geom.image_grid(), ImageUnit::Attenuation);
  for (double& v : x.values()) v = unif(rng);
  {
    const double n = norm2(x.values());
    for (double& v : x.values()) v /= n;
  }
  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    const Sinogram px = forward_project(x, geom);
    estimate = norm2(px.values());
    if (it + 1 == iters || estimate == 0.0) break;
    x = back_project(px, geom);
    const double n = norm2(x.values());
    for (double& v : x.values()) v /= n;
  }
  return estimate;
}

}  // namespace mar
