#include "mar/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mar {

namespace {

struct Prefix {
  std::vector<double> s1, s2;  // s[i] = sum of the first i samples

  explicit Prefix(const std::vector<double>& sorted) : s1(sorted.size() + 1, 0.0), s2(sorted.size() + 1, 0.0) {
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      s1[i + 1] = s1[i] + sorted[i];
      s2[i + 1] = s2[i] + sorted[i] * sorted[i];
    }
  }
  double sum(std::size_t a, std::size_t b) const { return s1[b] - s1[a]; }
  double sse(std::size_t a, std::size_t b) const {
    if (b <= a) return 0.0;
    const double n = static_cast<double>(b - a);
    const double s = sum(a, b);
    return std::max(0.0, (s2[b] - s2[a]) - s * s / n);
  }
};

// Segment boundaries for ascending centroids: cluster j owns [bounds[j], bounds[j+1]).
std::vector<std::size_t> assign(const std::vector<double>& sorted, const std::vector<double>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> bounds(k + 1);
  bounds[0] = 0;
  bounds[k] = sorted.size();
  for (std::size_t j = 1; j < k; ++j) {
    const double t = 0.5 * (centroids[j - 1] + centroids[j]);
    bounds[j] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
  }
  return bounds;
}

bool lexicographically_lower(const std::vector<double>& a, const std::vector<double>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

KMeansResult kmeans_1d(std::span<const double> samples, int k, int restarts, int max_iters, std::uint64_t seed) {
  if (k < 1) throw ValidationError("k-means needs k >= 1");
  if (restarts < 1 || max_iters < 1) throw ValidationError("k-means needs restarts >= 1 and max_iters >= 1");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct = sorted;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  KMeansResult best;
  if (distinct.size() < static_cast<std::size_t>(k)) {
    best.degenerate = true;
    best.centroids = distinct;
    return best;
  }

  const Prefix prefix(sorted);
  std::mt19937_64 rng(seed);
  const auto uk = static_cast<std::size_t>(k);
  bool have_best = false;

  for (int rs = 0; rs < restarts; ++rs) {
    // k distinct initial centroids drawn from the distinct sample values.
    std::vector<std::size_t> picks;
    while (picks.size() < uk) {
      std::uniform_int_distribution<std::size_t> pick(0, distinct.size() - 1);
      const std::size_t i = pick(rng);
      if (std::find(picks.begin(), picks.end(), i) == picks.end()) picks.push_back(i);
    }
    std::vector<double> centroids;
    for (std::size_t i : picks) centroids.push_back(distinct[i]);
    std::sort(centroids.begin(), centroids.end());

    std::vector<std::size_t> bounds = assign(sorted, centroids);
    for (int it = 0; it < max_iters; ++it) {
      for (std::size_t j = 0; j < uk; ++j) {
        const std::size_t a = bounds[j], b = bounds[j + 1];
        if (b > a) centroids[j] = prefix.sum(a, b) / static_cast<double>(b - a);
      }
      std::sort(centroids.begin(), centroids.end());
      auto next = assign(sorted, centroids);
      if (next == bounds) break;
      bounds = std::move(next);
    }

    double sse = 0.0;
    for (std::size_t j = 0; j < uk; ++j) sse += prefix.sse(bounds[j], bounds[j + 1]);
    std::vector<double> thresholds;
    for (std::size_t j = 1; j < uk; ++j) thresholds.push_back(0.5 * (centroids[j - 1] + centroids[j]));

    const double tol = 1e-12 * std::max(1.0, have_best ? best.sse : sse);
    const bool better = !have_best || sse < best.sse - tol ||
                        (std::abs(sse - best.sse) <= tol && lexicographically_lower(thresholds, best.thresholds));
    if (better) {
      best.centroids = centroids;
      best.thresholds = thresholds;
      best.sse = sse;
      have_best = true;
    }
  }
  return best;
}

Image gaussian_smooth(const Image& img, double sigma) {
  if (!(sigma >= 0.0)) throw ValidationError("Gaussian sigma must be >= 0");
  if (sigma == 0.0) return img;
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;

  const auto H = static_cast<long>(img.height());
  const auto W = static_cast<long>(img.width());
  Image tmp(img.grid(), img.unit());
  Image out(img.grid(), img.unit());
  for (long r = 0; r < H; ++r)
    for (long c = 0; c < W; ++c) {
      double acc = 0.0;
      for (long i = -radius; i <= radius; ++i) {
        const long cc = std::clamp(c + i, 0L, W - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] * img(static_cast<std::size_t>(r), static_cast<std::size_t>(cc));
      }
      tmp(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  for (long r = 0; r < H; ++r)
    for (long c = 0; c < W; ++c) {
      double acc = 0.0;
      for (long i = -radius; i <= radius; ++i) {
        const long rr = std::clamp(r + i, 0L, H - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] * tmp(static_cast<std::size_t>(rr), static_cast<std::size_t>(c));
      }
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  return out;
}

CoarsePrior coarse_prior(const Image& x_li_hu, const PriorConfig& cfg, int k) {
  if (x_li_hu.unit() != ImageUnit::HU) throw ValidationError("coarse_prior expects an HU image");
  if (k != 3) throw ValidationError("coarse_prior classifies air, soft tissue and bone: k must be 3");
  x_li_hu.validate();
  const Image smooth = gaussian_smooth(x_li_hu, cfg.sigma);
  const KMeansResult km = kmeans_1d(smooth.values(), k, cfg.kmeans_restarts, cfg.kmeans_max_iters, cfg.seed);

  CoarsePrior out;
  if (km.degenerate) {
    warn("coarse_prior: fewer than 3 distinct intensities, using fixed thresholds");
    out.t_air = cfg.fallback_air_hu;
    out.t_bone = cfg.fallback_bone_hu;
    out.used_fallback = true;
  } else {
    out.t_air = km.thresholds[0];
    out.t_bone = km.thresholds[1];
  }
  out.image = Image(smooth.grid(), ImageUnit::HU);
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    const double v = smooth[i];
    if (v < out.t_air)
      out.image[i] = cfg.air_hu;
    else if (v < out.t_bone)
      out.image[i] = cfg.soft_tissue_hu;
    else
      out.image[i] = v;
  }
  return out;
}

Image refine_prior(const Image& coarse_hu, const Image& weights, const PriorConfig& cfg) {
  if (coarse_hu.unit() != ImageUnit::HU) throw ValidationError("refine_prior expects an HU prior");
  if (weights.unit() != ImageUnit::Weight) throw ValidationError("refine_prior expects a Weight image");
  require_same_grid(coarse_hu, weights, "refine_prior");
  weights.validate(cfg.weight_max);
  Image out = coarse_hu;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double w = weights[i];
    if (w == 1.0) continue;
    out[i] = mu_to_hu(w * hu_to_mu(coarse_hu[i], cfg.mu_water), cfg.mu_water);
  }
  return out;
}

Image prior_image(const Image& x_li_hu, const Image* metal_mask, const Image* weights, const PriorConfig& cfg) {
  Image prior = coarse_prior(x_li_hu, cfg).image;
  if (weights) prior = refine_prior(prior, *weights, cfg);
  if (metal_mask) {
    require_same_grid(prior, *metal_mask, "prior_image");
    for (std::size_t i = 0; i < prior.size(); ++i)
      if ((*metal_mask)[i] != 0.0) prior[i] = cfg.soft_tissue_hu;
  }
  return prior;
}

Sinogram normalization_coefficient(const Image& x_tilde_hu, const ProjectionGeometry& geom, double mu_water) {
  if (x_tilde_hu.unit() != ImageUnit::HU) throw ValidationError("normalization_coefficient expects an HU prior");
  return forward_project(hu_to_mu(x_tilde_hu, mu_water), geom);
}

}  // namespace mar
