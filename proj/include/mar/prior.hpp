// Prior image and sinogram normalisation coefficient.
//
// The prior is built in two steps: a coarse tissue-classified image (Gaussian
// smoothing, 1-D k-means thresholds, air/soft-tissue reassignment) followed by a
// pixel-wise multiplicative refinement with a weight map in attenuation space.
#pragma once

#include <cstdint>
#include <optional>

#include "mar/core.hpp"
#include "mar/projector.hpp"

namespace mar {

struct PriorConfig {
  double sigma = 1.5;              // Gaussian std in pixels; 0 disables smoothing
  int kmeans_restarts = 20;
  int kmeans_max_iters = 100;
  std::uint64_t seed = 0;
  double fallback_air_hu = -500.0;
  double fallback_bone_hu = 300.0;
  double air_hu = -1000.0;
  double soft_tissue_hu = 0.0;
  double weight_max = kDefaultWeightMax;
  double mu_water = kDefaultMuWater;
};

struct KMeansResult {
  std::vector<double> centroids;  // ascending
  std::vector<double> thresholds; // midpoints between adjacent centroids
  double sse = 0.0;
  bool degenerate = false;        // fewer distinct values than clusters
};

/// Seeded Lloyd k-means on scalar samples with restarts. Samples below a threshold
/// belong to the lower cluster; a sample equal to a threshold belongs to the upper one.
KMeansResult kmeans_1d(std::span<const double> samples, int k, int restarts, int max_iters, std::uint64_t seed);

/// Separable Gaussian filter with edge replication; sigma == 0 returns the input unchanged.
Image gaussian_smooth(const Image& img, double sigma);

struct CoarsePrior {
  Image image;      // HU
  double t_air = 0.0;
  double t_bone = 0.0;
  bool used_fallback = false;
};

/// Air (< t_air) -> air_hu, soft tissue ([t_air, t_bone)) -> soft_tissue_hu, bone keeps its smoothed value.
CoarsePrior coarse_prior(const Image& x_li_hu, const PriorConfig& cfg = {}, int k = 3);

/// mu(out) = weights * mu(coarse). Pixels with weight exactly 1 are copied bit-for-bit.
Image refine_prior(const Image& coarse_hu, const Image& weights, const PriorConfig& cfg = {});

/// Full prior: coarse classification, optional refinement, metal pixels set to soft tissue.
Image prior_image(const Image& x_li_hu, const Image* metal_mask, const Image* weights, const PriorConfig& cfg = {});

/// Forward projection of the prior in attenuation units.
Sinogram normalization_coefficient(const Image& x_tilde_hu, const ProjectionGeometry& geom,
                                   double mu_water = kDefaultMuWater);

}  // namespace mar
