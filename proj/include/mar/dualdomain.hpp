// Joint image/sinogram reconstruction by alternating proximal-gradient stages.
//
// The model couples an image X and a normalised sinogram S~ through the
// normalisation coefficient Y~ (projection of a prior image):
//
//   min  ||P X - Y~ * S~||^2 + alpha ||(1 - Tr) * (Y~ * S~ - Y)||^2 + g1(S~) + g2(X)
//
// Each stage performs one proximal-gradient step in S~ followed by one in X. The
// regularisers enter only through the chosen proximal operators.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mar/core.hpp"
#include "mar/projector.hpp"
#include "mar/prox.hpp"

namespace mar {

struct SolverConfig {
  std::size_t n_stages = 10;
  double eta1 = 1.0;
  double eta2 = 1.0;
  double alpha = 0.5;
  ProxOperator prox_s = ProxOperator::identity(ProxOperator::Domain::Sinogram);
  ProxOperator prox_x = ProxOperator::identity(ProxOperator::Domain::Image);
  bool auto_stepsize = true;
  double step_safety = 0.9;   // auto stepsizes are step_safety / L
  int norm_iters = 30;        // power iterations for the X-step Lipschitz constant
  std::uint64_t norm_seed = 0;
  double mu_water = kDefaultMuWater;
  double divergence_factor = 10.0;

  void validate() const;
};

/// Starting point of the iteration, taken from linear-interpolation MAR.
struct Initialization {
  Sinogram y_li;
  Image x_li;  // HU
};

struct Stage {
  Sinogram s_tilde;        // normalised sinogram (the sinogram itself in the degraded variant)
  Sinogram s;              // Y~ * S~
  Image x;                 // attenuation
  double objective = 0.0;
  double trace_residual = 0.0;
};

struct StageTrace {
  std::vector<Stage> stages;  // stages[0] is the initialisation
  double eta1 = 0.0;
  double eta2 = 0.0;

  const Stage& final_stage() const { return stages.back(); }
  /// Final image in HU.
  Image final_image_hu(double mu_water = kDefaultMuWater) const;
};

/// Data-fit part of the joint objective (regulariser values excluded).
double objective(const Image& x, const Sinogram& s_tilde, const Sinogram& y, const Sinogram& y_tilde,
                 const Sinogram& trace, double alpha, const ProjectionGeometry& geom);

/// ||(1 - Tr) * (Y~ * S~ - Y)||_F.
double trace_residual(const Sinogram& s_tilde, const Sinogram& y, const Sinogram& y_tilde, const Sinogram& trace);

/// One S~ update given P X_{n-1}. Pointwise except for the proximal operator.
/// The sinogram-domain prox only acts where Y~ > kSafeDivEps; elsewhere S~ is set to 0.
Sinogram s_tilde_step(const Sinogram& s_prev, const Sinogram& px_prev, const Sinogram& y, const Sinogram& y_tilde,
                      const Sinogram& trace, double eta1, double alpha, const ProxOperator& prox_s);

/// Same, projecting x_prev internally.
Sinogram s_tilde_step(const Sinogram& s_prev, const Image& x_prev, const Sinogram& y, const Sinogram& y_tilde,
                      const Sinogram& trace, double eta1, double alpha, const ProxOperator& prox_s,
                      const ProjectionGeometry& geom);

/// One X update: prox_x(X - eta2 * P^T (P X - Y~ * S~)).
Image x_step(const Image& x_prev, const Sinogram& s_tilde_new, const Sinogram& y_tilde, double eta2,
             const ProxOperator& prox_x, const ProjectionGeometry& geom);

struct Stepsizes {
  double eta1;
  double eta2;
};

/// eta1 = safety / (2 max(Y~^2 (1 + alpha))), eta2 = safety / ||P||^2, or the manual values.
Stepsizes resolve_stepsizes(const SolverConfig& cfg, const Sinogram& y_tilde, const ProjectionGeometry& geom);

/// Runs the normalised model from the LI initialisation.
StageTrace run(const Sinogram& y, const Sinogram& trace, const Sinogram& y_tilde, const Initialization& init,
               const SolverConfig& cfg, const ProjectionGeometry& geom);

/// Runs the model without normalisation: the sinogram S itself is the variable.
StageTrace run_degraded(const Sinogram& y, const Sinogram& trace, const Initialization& init, const SolverConfig& cfg,
                        const ProjectionGeometry& geom);

struct LossWeights {
  std::vector<double> betas;  // length N+1; empty selects 0.1 for n < N and 1 for n = N
  double gamma = 0.1;
};

/// Stage-weighted supervision loss: masked image error at every stage plus gamma-weighted
/// sinogram error for stages n >= 1. `x_gt` may be HU or attenuation.
double training_objective(const StageTrace& trace, const Image& x_gt, const Sinogram& y_gt, const Image& metal_mask,
                          const LossWeights& weights = {}, double mu_water = kDefaultMuWater);

}  // namespace mar
