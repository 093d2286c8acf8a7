#include "mar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace mar {

double psnr(const Image& a, const Image& b, double peak, const Image* exclude) {
  require_same_grid(a, b, "psnr");
  if (exclude) require_same_grid(a, *exclude, "psnr mask");
  if (!(peak > 0.0)) throw ValidationError("psnr peak must be > 0");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (exclude && (*exclude)[i] != 0.0) continue;
    const double d = a[i] - b[i];
    acc += d * d;
    ++n;
  }
  if (n == 0) throw ValidationError("psnr: every pixel is excluded");
  const double mse = acc / static_cast<double>(n);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

namespace {

// Truncated, renormalised separable Gaussian filter.
std::vector<double> gaussian_filter(std::span<const double> f, std::size_t rows, std::size_t cols,
                                    std::size_t window, double sigma) {
  const auto radius = static_cast<long>(window / 2);
  std::vector<double> k(window);
  for (long i = -radius; i <= radius; ++i)
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
  const auto R = static_cast<long>(rows), C = static_cast<long>(cols);
  std::vector<double> tmp(f.size()), out(f.size());
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) {
      double acc = 0.0, wsum = 0.0;
      for (long i = -radius; i <= radius; ++i) {
        const long cc = c + i;
        if (cc < 0 || cc >= C) continue;
        const double w = k[static_cast<std::size_t>(i + radius)];
        acc += w * f[static_cast<std::size_t>(r * C + cc)];
        wsum += w;
      }
      tmp[static_cast<std::size_t>(r * C + c)] = acc / wsum;
    }
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) {
      double acc = 0.0, wsum = 0.0;
      for (long i = -radius; i <= radius; ++i) {
        const long rr = r + i;
        if (rr < 0 || rr >= R) continue;
        const double w = k[static_cast<std::size_t>(i + radius)];
        acc += w * tmp[static_cast<std::size_t>(rr * C + c)];
        wsum += w;
      }
      out[static_cast<std::size_t>(r * C + c)] = acc / wsum;
    }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimParams& p) {
  require_same_grid(a, b, "ssim");
  if (p.window < 3 || p.window % 2 == 0) throw ValidationError("ssim window must be odd and >= 3");
  if (!(p.peak > 0.0) || !(p.sigma > 0.0)) throw ValidationError("ssim peak and sigma must be > 0");
  if (a.values().size() == b.values().size() &&
      std::equal(a.values().begin(), a.values().end(), b.values().begin()))
    return 1.0;
  const std::size_t rows = a.height(), cols = a.width(), n = a.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = gaussian_filter(a.values(), rows, cols, p.window, p.sigma);
  const auto mu_b = gaussian_filter(b.values(), rows, cols, p.window, p.sigma);
  const auto e_aa = gaussian_filter(aa, rows, cols, p.window, p.sigma);
  const auto e_bb = gaussian_filter(bb, rows, cols, p.window, p.sigma);
  const auto e_ab = gaussian_filter(ab, rows, cols, p.window, p.sigma);
  const double c1 = (p.k1 * p.peak) * (p.k1 * p.peak);
  const double c2 = (p.k2 * p.peak) * (p.k2 * p.peak);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(n);
}

Image hu_display_range(const Image& hu) {
  if (hu.unit() != ImageUnit::HU) throw ValidationError("hu_display_range expects an HU image");
  Image out = hu;
  for (double& v : out.values()) v = std::clamp(v + kHuShift, 0.0, kHuPeak);
  return out;
}

Quality evaluate_hu(const Image& recon_hu, const Image& gt_hu, const Image* metal_mask) {
  require_same_grid(recon_hu, gt_hu, "evaluate_hu");
  Image a = hu_display_range(recon_hu);
  Image b = hu_display_range(gt_hu);
  Quality q;
  q.psnr = psnr(a, b, kHuPeak, metal_mask);
  if (metal_mask) {
    require_same_grid(a, *metal_mask, "evaluate_hu mask");
    for (std::size_t i = 0; i < a.size(); ++i)
      if ((*metal_mask)[i] != 0.0) a[i] = b[i] = 0.0;
  }
  SsimParams sp;
  sp.peak = kHuPeak;
  q.ssim = ssim(a, b, sp);
  return q;
}

std::vector<std::size_t> pairwise_groups(std::size_t n_sizes) {
  std::vector<std::size_t> out(n_sizes / 2, 2);
  if (n_sizes % 2) out.push_back(1);
  return out;
}

GroupTable group_report(const std::vector<CaseMetric>& results, const std::vector<std::size_t>& group_counts) {
  if (results.empty()) throw ValidationError("group_report: no results");
  std::vector<std::size_t> sizes;
  for (const auto& r : results) sizes.push_back(r.metal_size_px);
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  const std::size_t total = std::accumulate(group_counts.begin(), group_counts.end(), std::size_t{0});
  if (total != sizes.size())
    throw ValidationError("group_report: group counts cover " + std::to_string(total) + " sizes but there are " +
                          std::to_string(sizes.size()) + " distinct sizes");

  GroupTable table;
  std::size_t pos = 0;
  for (std::size_t g = 0; g < group_counts.size(); ++g) {
    if (group_counts[g] == 0) throw ValidationError("group_report: group " + std::to_string(g) + " is empty");
    GroupRow row;
    row.sizes.assign(sizes.begin() + static_cast<long>(pos), sizes.begin() + static_cast<long>(pos + group_counts[g]));
    pos += group_counts[g];
    for (const auto& r : results) {
      if (std::find(row.sizes.begin(), row.sizes.end(), r.metal_size_px) == row.sizes.end()) continue;
      row.psnr += r.psnr;
      row.ssim += r.ssim;
      ++row.count;
    }
    row.psnr /= static_cast<double>(row.count);
    row.ssim /= static_cast<double>(row.count);
    table.groups.push_back(std::move(row));
  }
  table.overall.sizes = sizes;
  for (const auto& r : results) {
    table.overall.psnr += r.psnr;
    table.overall.ssim += r.ssim;
  }
  table.overall.count = results.size();
  table.overall.psnr /= static_cast<double>(results.size());
  table.overall.ssim /= static_cast<double>(results.size());
  return table;
}

}  // namespace mar
