// Classical sinogram-inpainting MAR: linear interpolation (LI) and normalised MAR (NMAR).
#pragma once

#include "mar/core.hpp"
#include "mar/prior.hpp"
#include "mar/projector.hpp"

namespace mar {

/// Replaces trace bins of every view by linear interpolation along the bin axis between the
/// nearest untraced neighbours. Trace runs touching either end of the detector take the value
/// of the nearest untraced bin. A fully traced view is filled with its mean (with a warning).
/// Untraced values are copied bit-for-bit.
Sinogram interpolate_trace(const Sinogram& y, const Sinogram& trace);

/// Grows the trace by `bins` detector bins on each side within every view.
Sinogram dilate_trace(const Sinogram& trace, std::size_t bins);

struct LiResult {
  Sinogram y_li;
  Image x_li;  // HU
};

LiResult li_correct(const Sinogram& y, const Sinogram& trace, const ProjectionGeometry& geom,
                    const RampFilter& filter = {}, double mu_water = kDefaultMuWater);

struct NmarResult {
  Sinogram y_nmar;
  Image x_nmar;       // HU
  Image prior;        // HU, the prior image used
  Sinogram y_tilde;   // its projection
};

/// NMAR with the prior built from `x_li` (and metal pixels set to soft tissue when a mask is given).
NmarResult nmar_correct(const Sinogram& y, const Sinogram& trace, const Image& x_li_hu, const ProjectionGeometry& geom,
                        const PriorConfig& prior_cfg = {}, const Image* metal_mask = nullptr,
                        const Image* weights = nullptr, const RampFilter& filter = {});

/// NMAR given an explicit normalisation coefficient.
Sinogram nmar_fill(const Sinogram& y, const Sinogram& trace, const Sinogram& y_tilde);

}  // namespace mar
