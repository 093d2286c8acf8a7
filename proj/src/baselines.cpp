#include "mar/baselines.hpp"

#include <algorithm>

namespace mar {

Sinogram interpolate_trace(const Sinogram& y, const Sinogram& trace) {
  require_same_grid(y, trace, "interpolate_trace");
  if (trace.kind() != SinogramKind::Trace) throw ValidationError("interpolate_trace expects a Trace sinogram");
  Sinogram out = y;
  const std::size_t nb = y.n_bins(), nv = y.n_views();
  for (std::size_t v = 0; v < nv; ++v) {
    std::size_t b = 0;
    bool any_valid = false;
    for (std::size_t i = 0; i < nb; ++i) any_valid |= trace(i, v) == 0.0;
    if (!any_valid) {
      double mean = 0.0;
      for (std::size_t i = 0; i < nb; ++i) mean += y(i, v);
      mean /= static_cast<double>(nb);
      warn("interpolate_trace: view " + std::to_string(v) + " is fully traced, filling with its mean");
      for (std::size_t i = 0; i < nb; ++i) out(i, v) = mean;
      continue;
    }
    while (b < nb) {
      if (trace(b, v) == 0.0) {
        ++b;
        continue;
      }
      const std::size_t start = b;
      while (b < nb && trace(b, v) != 0.0) ++b;
      const std::size_t end = b;  // one past the run
      const bool has_left = start > 0;
      const bool has_right = end < nb;
      if (has_left && has_right) {
        const double left = y(start - 1, v), right = y(end, v);
        const double span = static_cast<double>(end - start + 1);
        for (std::size_t i = start; i < end; ++i) {
          const double t = static_cast<double>(i - start + 1) / span;
          out(i, v) = left + t * (right - left);
        }
      } else {
        const double fill = has_left ? y(start - 1, v) : y(end, v);
        for (std::size_t i = start; i < end; ++i) out(i, v) = fill;
      }
    }
  }
  return out;
}

Sinogram dilate_trace(const Sinogram& trace, std::size_t bins) {
  if (bins == 0) return trace;
  Sinogram out = trace;
  const std::size_t nb = trace.n_bins(), nv = trace.n_views();
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t b = 0; b < nb; ++b) {
      if (trace(b, v) == 0.0) continue;
      const std::size_t lo = b >= bins ? b - bins : 0;
      const std::size_t hi = std::min(nb - 1, b + bins);
      for (std::size_t i = lo; i <= hi; ++i) out(i, v) = 1.0;
    }
  return out;
}

LiResult li_correct(const Sinogram& y, const Sinogram& trace, const ProjectionGeometry& geom, const RampFilter& filter,
                    double mu_water) {
  if (!(y.grid() == geom.sino_grid())) throw ShapeError("li_correct: sinogram grid does not match geometry");
  LiResult r;
  r.y_li = interpolate_trace(y, trace);
  r.x_li = mu_to_hu(fbp(r.y_li, geom, filter), mu_water);
  return r;
}

Sinogram nmar_fill(const Sinogram& y, const Sinogram& trace, const Sinogram& y_tilde) {
  require_same_grid(y, y_tilde, "nmar_fill");
  const Sinogram normalized = pointwise(y, y_tilde, PointwiseOp::SafeDiv).with_kind(SinogramKind::Normalized);
  const Sinogram filled = interpolate_trace(normalized, trace);
  Sinogram out = y;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (trace[i] != 0.0) out[i] = y_tilde[i] * filled[i];
  return out;
}

NmarResult nmar_correct(const Sinogram& y, const Sinogram& trace, const Image& x_li_hu, const ProjectionGeometry& geom,
                        const PriorConfig& prior_cfg, const Image* metal_mask, const Image* weights,
                        const RampFilter& filter) {
  NmarResult r;
  r.prior = prior_image(x_li_hu, metal_mask, weights, prior_cfg);
  r.y_tilde = normalization_coefficient(r.prior, geom, prior_cfg.mu_water);
  r.y_nmar = nmar_fill(y, trace, r.y_tilde);
  r.x_nmar = mu_to_hu(fbp(r.y_nmar, geom, filter), prior_cfg.mu_water);
  return r;
}

}  // namespace mar
