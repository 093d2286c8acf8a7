#include "mar/simulate.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "mar/io.hpp"

namespace mar {

namespace {

struct Ellipse {
  double value, a, b, x0, y0, phi_deg;
};

// Original Shepp-Logan intensities (additive).
constexpr std::array<Ellipse, 10> kSheppLogan{{
    {2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
    {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
    {-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
    {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
    {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
    {0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
}};

// Normalised coordinates of sub-sample (sr, sc) inside pixel (r, c).
template <class F>
double sample_pixel(const ImageGrid& grid, std::size_t r, std::size_t c, int ss, F&& f) {
  const double half = 0.5 * static_cast<double>(std::max(grid.height, grid.width));
  double acc = 0.0;
  for (int i = 0; i < ss; ++i) {
    for (int j = 0; j < ss; ++j) {
      const double pc = static_cast<double>(c) + (j + 0.5) / ss - 0.5;
      const double pr = static_cast<double>(r) + (i + 0.5) / ss - 0.5;
      const double x = (pc - 0.5 * static_cast<double>(grid.width - 1)) / half;
      const double y = (0.5 * static_cast<double>(grid.height - 1) - pr) / half;
      acc += f(x, y);
    }
  }
  return acc / static_cast<double>(ss * ss);
}

double shepp_logan_value(double x, double y) {
  double v = 0.0;
  for (const auto& e : kSheppLogan) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double dx = x - e.x0, dy = y - e.y0;
    const double u = dx * std::cos(phi) + dy * std::sin(phi);
    const double w = -dx * std::sin(phi) + dy * std::cos(phi);
    if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) v += e.value;
  }
  return v;
}

}  // namespace

std::vector<Disc> bundled_disc_phantom() {
  return {{0.0, 0.0, 0.85, 0.0},
          {-0.35, 0.2, 0.15, 900.0},
          {0.35, 0.2, 0.12, 600.0},
          {0.0, -0.4, 0.18, -700.0},
          {0.1, 0.45, 0.08, 300.0}};
}

Image make_phantom(const PhantomParams& params, const ImageGrid& grid) {
  if (params.supersample < 1) throw ValidationError("phantom supersample must be >= 1");
  switch (params.kind) {
    case PhantomKind::SheppLogan: {
      Image out(grid, ImageUnit::HU);
      for (std::size_t r = 0; r < grid.height; ++r)
        for (std::size_t c = 0; c < grid.width; ++c) {
          const double v = sample_pixel(grid, r, c, params.supersample, shepp_logan_value);
          out(r, c) = 1000.0 * (v - 1.0);
        }
      return out;
    }
    case PhantomKind::Discs: {
      Image out(grid, ImageUnit::HU, params.background_hu);
      for (std::size_t r = 0; r < grid.height; ++r)
        for (std::size_t c = 0; c < grid.width; ++c) {
          out(r, c) = sample_pixel(grid, r, c, params.supersample, [&](double x, double y) {
            double v = params.background_hu;
            for (const auto& d : params.discs)
              if ((x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy) <= d.radius * d.radius) v = d.value;
            return v;
          });
        }
      return out;
    }
    case PhantomKind::FromFile: {
      Image img = read_image(params.path);
      if (!(img.grid().height == grid.height && img.grid().width == grid.width))
        throw ShapeError("phantom file " + params.path.string() + " does not match the configured grid");
      if (img.unit() != ImageUnit::HU) throw ValidationError("phantom file must be in HU");
      return Image(grid, ImageUnit::HU, std::vector<double>(img.values().begin(), img.values().end()));
    }
  }
  throw ValidationError("unknown phantom kind");
}

Image disc_mask(const ImageGrid& grid, const std::vector<Disc>& discs) {
  Image out(grid, ImageUnit::Binary);
  for (std::size_t r = 0; r < grid.height; ++r)
    for (std::size_t c = 0; c < grid.width; ++c) {
      const double inside = sample_pixel(grid, r, c, 1, [&](double x, double y) {
        for (const auto& d : discs)
          if ((x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy) <= d.radius * d.radius) return 1.0;
        return 0.0;
      });
      out(r, c) = inside;
    }
  return out;
}

SpectrumConfig SpectrumConfig::monochromatic() {
  SpectrumConfig s;
  s.energies_kev = {70.0};
  s.weights = {1.0};
  s.water_curve = {1.0};
  s.bone_curve = {1.0};
  s.metal_curve = {1.0};
  return s;
}

SpectrumConfig SpectrumConfig::polychromatic(double photon_count) {
  SpectrumConfig s;
  s.energies_kev = {40.0, 55.0, 70.0, 85.0, 100.0};
  s.weights = {0.10, 0.25, 0.30, 0.22, 0.13};
  s.water_curve = {1.30, 1.10, 1.00, 0.95, 0.91};
  s.bone_curve = {2.10, 1.40, 1.00, 0.80, 0.70};
  s.metal_curve = {3.40, 1.80, 1.00, 0.68, 0.52};
  s.photon_count = photon_count;
  return s;
}

void SpectrumConfig::validate() const {
  const std::size_t n = weights.size();
  if (n < 1) throw ValidationError("spectrum needs at least one energy bin");
  if (energies_kev.size() != n || water_curve.size() != n || bone_curve.size() != n || metal_curve.size() != n)
    throw ValidationError("spectrum energies, weights and material curves must have equal length");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("spectrum weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("spectrum weights must sum to 1");
  for (const auto* curve : {&water_curve, &bone_curve, &metal_curve})
    for (double c : *curve)
      if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("material curves must be finite and >= 0");
  if (!(photon_count >= 0.0) || !std::isfinite(photon_count))
    throw ValidationError("photon_count must be finite and >= 0");
}

std::size_t MetalSpec::pixel_count() const {
  std::size_t n = 0;
  for (double v : mask.values()) n += v != 0.0;
  return n;
}

Sinogram compute_metal_trace(const MetalSpec& metal, const ProjectionGeometry& geom, double threshold) {
  if (!(metal.mask.grid() == geom.image_grid())) throw ShapeError("metal mask grid does not match geometry");
  if (metal.mask.unit() != ImageUnit::Binary) throw ValidationError("metal mask must be a binary image");
  const Sinogram pm = forward_project(metal.mask.with_unit(ImageUnit::Attenuation), geom);
  Sinogram tr(pm.grid(), SinogramKind::Trace);
  for (std::size_t i = 0; i < pm.size(); ++i) tr[i] = pm[i] > threshold ? 1.0 : 0.0;
  return tr;
}

double tissue_factor(const SpectrumConfig& spectrum, std::size_t e, double hu) {
  const double t = std::clamp((hu - 100.0) / 900.0, 0.0, 1.0);
  return spectrum.water_curve[e] + t * (spectrum.bone_curve[e] - spectrum.water_curve[e]);
}

SimulationResult simulate_artifacts(const Image& clean_hu, const MetalSpec& metal, const SpectrumConfig& spectrum,
                                    const ProjectionGeometry& geom, const SimulationOptions& opts) {
  spectrum.validate();
  if (clean_hu.unit() != ImageUnit::HU) throw ValidationError("simulate_artifacts expects an HU image");
  if (!(clean_hu.grid() == geom.image_grid())) throw ShapeError("clean image grid does not match geometry");
  if (!(metal.mask.grid() == geom.image_grid())) throw ShapeError("metal mask grid does not match geometry");
  metal.mask.validate();

  SimulationResult out;
  out.x_gt = clean_hu;
  out.y_gt = forward_project(hu_to_mu(clean_hu, opts.mu_water), geom);

  const double mu_metal = hu_to_mu(metal.metal_hu, opts.mu_water);
  const std::size_t n_energy = spectrum.weights.size();
  std::vector<Sinogram> per_energy;
  per_energy.reserve(n_energy);
  for (std::size_t e = 0; e < n_energy; ++e) {
    Image mu_e(clean_hu.grid(), ImageUnit::Attenuation);
    for (std::size_t i = 0; i < mu_e.size(); ++i) {
      if (metal.mask[i] != 0.0)
        mu_e[i] = mu_metal * spectrum.metal_curve[e];
      else
        mu_e[i] = hu_to_mu(clean_hu[i], opts.mu_water) * tissue_factor(spectrum, e, clean_hu[i]);
    }
    per_energy.push_back(forward_project(mu_e, geom));
  }

  const auto& sg = geom.sino_grid();
  Sinogram y(sg, SinogramKind::Raw);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (n_energy == 1 && spectrum.weights[0] == 1.0) {
      y[i] = per_energy[0][i];
      continue;
    }
    double transmitted = 0.0;
    for (std::size_t e = 0; e < n_energy; ++e) transmitted += spectrum.weights[e] * std::exp(-per_energy[e][i]);
    y[i] = -std::log(transmitted);
  }

  if (spectrum.photon_count > 0.0) {
    const double i0 = spectrum.photon_count;
    const auto nb = sg.n_bins;
    const auto nv = static_cast<long>(sg.n_views);
    // One RNG stream per view, derived from the seed, so the draw is thread-count independent.
#pragma omp parallel for schedule(static)
    for (long v = 0; v < nv; ++v) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed & 0xffffffffu),
                        static_cast<std::uint32_t>(opts.seed >> 32), static_cast<std::uint32_t>(v), 0x4d41u};
      std::mt19937_64 rng(seq);
      for (std::size_t b = 0; b < nb; ++b) {
        const double expected = i0 * std::exp(-y(b, static_cast<std::size_t>(v)));
        double counts = 0.0;
        if (expected > 0.0) {
          std::poisson_distribution<long long> dist(expected);
          counts = static_cast<double>(dist(rng));
        }
        counts = std::max(1.0, counts);
        y(b, static_cast<std::size_t>(v)) = -std::log(counts / i0);
      }
    }
  }

  out.y = std::move(y);
  out.x_ma = mu_to_hu(fbp(out.y, geom, opts.filter), opts.mu_water);
  return out;
}

}  // namespace mar
