// Phantoms, metal insertion and polychromatic metal-artifact simulation.
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mar/core.hpp"
#include "mar/projector.hpp"

namespace mar {

enum class PhantomKind { SheppLogan, Discs, FromFile };

/// Disc in normalised coordinates: the image spans [-1, 1] along its larger side.
struct Disc {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double value = 0.0;  // HU for phantoms; ignored for masks
};

struct PhantomParams {
  PhantomKind kind = PhantomKind::SheppLogan;
  std::vector<Disc> discs;        // Discs: painted in order over the background
  double background_hu = -1000.0;
  std::filesystem::path path;     // FromFile
  int supersample = 1;            // sub-pixel samples per axis when rasterising shapes
};

/// Deterministic phantom in HU. Shepp-Logan uses the original ten-ellipse intensities
/// mapped by HU = 1000 * (v - 1), so the background is air and the skull is +1000 HU.
/// Water body with bone inserts and a low-density pocket (HU values). Used when the disc list is empty.
std::vector<Disc> bundled_disc_phantom();

Image make_phantom(const PhantomParams& params, const ImageGrid& grid);

/// Binary mask covering every pixel whose centre lies inside one of the discs.
Image disc_mask(const ImageGrid& grid, const std::vector<Disc>& discs);

struct SpectrumConfig {
  std::vector<double> energies_kev;
  std::vector<double> weights;
  // Per-energy attenuation factors relative to the reference (effective) energy.
  std::vector<double> water_curve;
  std::vector<double> bone_curve;
  std::vector<double> metal_curve;
  double photon_count = 0.0;  // expected incident photons per ray; 0 disables noise

  /// Single reference-energy bin with unit factors: the simulator becomes linear.
  static SpectrumConfig monochromatic();
  /// Five-bin spectrum with beam-hardening material curves.
  static SpectrumConfig polychromatic(double photon_count = 0.0);

  void validate() const;
};

struct MetalSpec {
  Image mask;                // Binary
  double metal_hu = 3000.0;

  std::size_t pixel_count() const;
};

/// Tr[b, v] = 1 iff the projected mask exceeds `threshold` on that ray.
Sinogram compute_metal_trace(const MetalSpec& metal, const ProjectionGeometry& geom, double threshold = 0.0);

struct SimulationResult {
  Sinogram y;      // metal-corrupted, polychromatic, optionally noisy
  Sinogram y_gt;   // monochromatic projection of the clean image
  Image x_ma;      // FBP of y, HU
  Image x_gt;      // clean image, HU
};

struct SimulationOptions {
  double mu_water = kDefaultMuWater;
  std::uint64_t seed = 0;
  RampFilter filter{};
};

SimulationResult simulate_artifacts(const Image& clean_hu, const MetalSpec& metal, const SpectrumConfig& spectrum,
                                    const ProjectionGeometry& geom, const SimulationOptions& opts = {});

/// Material factor of a non-metal pixel for energy bin `e` (water below 100 HU, bone above 1000 HU,
/// linear blend in between).
double tissue_factor(const SpectrumConfig& spectrum, std::size_t e, double hu);

}  // namespace mar
