// Image-quality metrics and grouped reporting.
#pragma once

#include <string>
#include <vector>

#include "mar/core.hpp"

namespace mar {

inline constexpr double kPsnrCap = 99.0;
inline constexpr double kHuPeak = 4096.0;
inline constexpr double kHuShift = 1024.0;

/// 10 log10(peak^2 / MSE) over pixels where `exclude` is 0. Identical inputs give kPsnrCap.
double psnr(const Image& a, const Image& b, double peak, const Image* exclude = nullptr);

struct SsimParams {
  std::size_t window = 11;  // odd, >= 3
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean SSIM with a Gaussian window over all pixels (edge windows are truncated and renormalised).
double ssim(const Image& a, const Image& b, const SsimParams& params);

/// HU images clipped to [-1024, 3072] and shifted by +1024 so that the peak is 4096.
Image hu_display_range(const Image& hu);

struct Quality {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// PSNR/SSIM of an HU reconstruction against ground truth on the shifted range with peak 4096.
/// Metal pixels are excluded from PSNR and zeroed in both images for SSIM.
Quality evaluate_hu(const Image& recon_hu, const Image& gt_hu, const Image* metal_mask = nullptr);

struct CaseMetric {
  std::size_t metal_size_px = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct GroupRow {
  std::vector<std::size_t> sizes;  // distinct metal sizes in this group, descending
  std::size_t count = 0;           // number of results averaged
  double psnr = 0.0;
  double ssim = 0.0;
};

struct GroupTable {
  std::vector<GroupRow> groups;  // large -> small
  GroupRow overall;
};

/// Sorts the distinct metal sizes in descending order and partitions them into consecutive
/// groups of the given counts (which must add up to the number of distinct sizes).
GroupTable group_report(const std::vector<CaseMetric>& results, const std::vector<std::size_t>& group_counts);

/// Pairwise partition of `n_sizes` distinct sizes (the last group takes the odd one out).
std::vector<std::size_t> pairwise_groups(std::size_t n_sizes);

}  // namespace mar
