#include "mar/dualdomain.hpp"

#include <algorithm>
#include <cmath>

namespace mar {

void SolverConfig::validate() const {
  if (!auto_stepsize && !(eta1 > 0.0 && eta2 > 0.0)) throw ValidationError("stepsizes eta1 and eta2 must be > 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be finite and >= 0");
  if (!(step_safety > 0.0)) throw ValidationError("step_safety must be > 0");
  if (norm_iters < 1) throw ValidationError("norm_iters must be >= 1");
  if (prox_s.domain != ProxOperator::Domain::Sinogram) throw ValidationError("prox_s must act on the sinogram domain");
  if (prox_x.domain != ProxOperator::Domain::Image) throw ValidationError("prox_x must act on the image domain");
  prox_s.validate();
  prox_x.validate();
}

Image StageTrace::final_image_hu(double mu_water) const { return mu_to_hu(final_stage().x, mu_water); }

namespace {

double objective_from_px(const Sinogram& px, const Sinogram& s_tilde, const Sinogram& y, const Sinogram& y_tilde,
                         const Sinogram& trace, double alpha) {
  double fit = 0.0, data = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double s = y_tilde[i] * s_tilde[i];
    const double a = px[i] - s;
    fit += a * a;
    if (trace[i] == 0.0) {
      const double b = s - y[i];
      data += b * b;
    }
  }
  return fit + alpha * data;
}

std::vector<std::uint8_t> support_of(const Sinogram& y_tilde) {
  std::vector<std::uint8_t> sup(y_tilde.size());
  for (std::size_t i = 0; i < sup.size(); ++i) sup[i] = y_tilde[i] > kSafeDivEps ? 1 : 0;
  return sup;
}

Image x_step_from_px(const Image& x_prev, const Sinogram& px_prev, const Sinogram& target, double eta2,
                     const ProxOperator& prox_x, const ProjectionGeometry& geom) {
  Sinogram residual = px_prev;
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= target[i];
  const Image grad = back_project(residual, geom);
  Image x_hat = x_prev;
  for (std::size_t i = 0; i < x_hat.size(); ++i) x_hat[i] -= eta2 * grad[i];
  return prox_apply(prox_x, x_hat);
}

void check_grids(const Sinogram& y, const Sinogram& trace, const Initialization& init, const ProjectionGeometry& geom) {
  if (!(y.grid() == geom.sino_grid())) throw ShapeError("solver: sinogram grid does not match geometry");
  require_same_grid(y, trace, "solver trace");
  require_same_grid(y, init.y_li, "solver LI sinogram");
  if (!(init.x_li.grid() == geom.image_grid())) throw ShapeError("solver: LI image grid does not match geometry");
  if (init.x_li.unit() != ImageUnit::HU) throw ValidationError("solver: LI image must be in HU");
}

void check_stage(std::size_t n, const Stage& st, double prev_objective, double floor, double factor) {
  auto finite = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(st.s_tilde.values())) throw DivergenceError(n, "non-finite sinogram");
  if (!finite(st.x.values())) throw DivergenceError(n, "non-finite image");
  if (!std::isfinite(st.objective)) throw DivergenceError(n, "non-finite objective");
  if (n > 0 && st.objective > floor && st.objective > factor * prev_objective)
    throw DivergenceError(n, "objective grew from " + std::to_string(prev_objective) + " to " +
                                 std::to_string(st.objective));
}

}  // namespace

double objective(const Image& x, const Sinogram& s_tilde, const Sinogram& y, const Sinogram& y_tilde,
                 const Sinogram& trace, double alpha, const ProjectionGeometry& geom) {
  require_same_grid(s_tilde, y, "objective");
  require_same_grid(s_tilde, y_tilde, "objective");
  require_same_grid(s_tilde, trace, "objective");
  return objective_from_px(forward_project(x, geom), s_tilde, y, y_tilde, trace, alpha);
}

double trace_residual(const Sinogram& s_tilde, const Sinogram& y, const Sinogram& y_tilde, const Sinogram& trace) {
  require_same_grid(s_tilde, y, "trace_residual");
  require_same_grid(s_tilde, y_tilde, "trace_residual");
  require_same_grid(s_tilde, trace, "trace_residual");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (trace[i] != 0.0) continue;
    const double r = y_tilde[i] * s_tilde[i] - y[i];
    acc += r * r;
  }
  return std::sqrt(acc);
}

Sinogram s_tilde_step(const Sinogram& s_prev, const Sinogram& px_prev, const Sinogram& y, const Sinogram& y_tilde,
                      const Sinogram& trace, double eta1, double alpha, const ProxOperator& prox_s) {
  require_same_grid(s_prev, px_prev, "s_tilde_step");
  require_same_grid(s_prev, y, "s_tilde_step");
  require_same_grid(s_prev, y_tilde, "s_tilde_step");
  require_same_grid(s_prev, trace, "s_tilde_step");
  Sinogram s_hat(s_prev.grid(), SinogramKind::Normalized);
  for (std::size_t i = 0; i < s_hat.size(); ++i) {
    const double yt = y_tilde[i];
    const double s = yt * s_prev[i];
    const double grad = yt * (s - px_prev[i]) + alpha * (1.0 - trace[i]) * yt * (s - y[i]);
    s_hat[i] = s_prev[i] - eta1 * grad;
  }
  const auto support = support_of(y_tilde);
  Sinogram out = prox_apply(prox_s, s_hat, support);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!support[i]) out[i] = 0.0;
  return out;
}

Sinogram s_tilde_step(const Sinogram& s_prev, const Image& x_prev, const Sinogram& y, const Sinogram& y_tilde,
                      const Sinogram& trace, double eta1, double alpha, const ProxOperator& prox_s,
                      const ProjectionGeometry& geom) {
  return s_tilde_step(s_prev, forward_project(x_prev, geom), y, y_tilde, trace, eta1, alpha, prox_s);
}

Image x_step(const Image& x_prev, const Sinogram& s_tilde_new, const Sinogram& y_tilde, double eta2,
             const ProxOperator& prox_x, const ProjectionGeometry& geom) {
  require_same_grid(s_tilde_new, y_tilde, "x_step");
  const Sinogram target = pointwise(y_tilde, s_tilde_new, PointwiseOp::Mul);
  return x_step_from_px(x_prev, forward_project(x_prev, geom), target, eta2, prox_x, geom);
}

Stepsizes resolve_stepsizes(const SolverConfig& cfg, const Sinogram& y_tilde, const ProjectionGeometry& geom) {
  if (!cfg.auto_stepsize) return {cfg.eta1, cfg.eta2};
  double max_sq = 0.0;
  for (double v : y_tilde.values()) max_sq = std::max(max_sq, v * v);
  const double ls = 2.0 * max_sq * (1.0 + cfg.alpha);
  if (!(ls > 0.0)) throw ValidationError("normalisation coefficient is zero everywhere");
  const double norm = operator_norm(geom, cfg.norm_iters, cfg.norm_seed);
  return {cfg.step_safety / ls, cfg.step_safety / (norm * norm)};
}

StageTrace run(const Sinogram& y, const Sinogram& trace, const Sinogram& y_tilde, const Initialization& init,
               const SolverConfig& cfg, const ProjectionGeometry& geom) {
  cfg.validate();
  check_grids(y, trace, init, geom);
  require_same_grid(y, y_tilde, "solver normalisation coefficient");
  const auto support = support_of(y_tilde);
  if (std::none_of(support.begin(), support.end(), [](std::uint8_t s) { return s != 0; }))
    throw ValidationError("normalisation coefficient has empty support");

  StageTrace out;
  const Stepsizes steps = resolve_stepsizes(cfg, y_tilde, geom);
  out.eta1 = steps.eta1;
  out.eta2 = steps.eta2;
  const double floor = 1e-12 * (squared_norm(y.values()) + 1.0);

  Stage st;
  st.s_tilde = pointwise(init.y_li, y_tilde, PointwiseOp::SafeDiv).with_kind(SinogramKind::Normalized);
  st.s = pointwise(y_tilde, st.s_tilde, PointwiseOp::Mul);
  st.x = hu_to_mu(init.x_li, cfg.mu_water);
  Sinogram px = forward_project(st.x, geom);
  st.objective = objective_from_px(px, st.s_tilde, y, y_tilde, trace, cfg.alpha);
  st.trace_residual = trace_residual(st.s_tilde, y, y_tilde, trace);
  check_stage(0, st, 0.0, floor, cfg.divergence_factor);
  out.stages.push_back(std::move(st));

  for (std::size_t n = 1; n <= cfg.n_stages; ++n) {
    const Stage& prev = out.stages.back();
    Stage next;
    next.s_tilde = s_tilde_step(prev.s_tilde, px, y, y_tilde, trace, steps.eta1, cfg.alpha, cfg.prox_s);
    next.s = pointwise(y_tilde, next.s_tilde, PointwiseOp::Mul);
    next.x = x_step_from_px(prev.x, px, next.s, steps.eta2, cfg.prox_x, geom);
    px = forward_project(next.x, geom);
    next.objective = objective_from_px(px, next.s_tilde, y, y_tilde, trace, cfg.alpha);
    next.trace_residual = trace_residual(next.s_tilde, y, y_tilde, trace);
    check_stage(n, next, prev.objective, floor, cfg.divergence_factor);
    out.stages.push_back(std::move(next));
  }
  return out;
}

StageTrace run_degraded(const Sinogram& y, const Sinogram& trace, const Initialization& init, const SolverConfig& cfg,
                        const ProjectionGeometry& geom) {
  cfg.validate();
  check_grids(y, trace, init, geom);

  StageTrace out;
  if (cfg.auto_stepsize) {
    const double norm = operator_norm(geom, cfg.norm_iters, cfg.norm_seed);
    out.eta1 = cfg.step_safety / (2.0 * (1.0 + cfg.alpha));
    out.eta2 = cfg.step_safety / (norm * norm);
  } else {
    out.eta1 = cfg.eta1;
    out.eta2 = cfg.eta2;
  }
  const double floor = 1e-12 * (squared_norm(y.values()) + 1.0);

  auto fit = [&](const Sinogram& px, const Sinogram& s) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      a += (px[i] - s[i]) * (px[i] - s[i]);
      if (trace[i] == 0.0) b += (s[i] - y[i]) * (s[i] - y[i]);
    }
    return a + cfg.alpha * b;
  };
  auto residual = [&](const Sinogram& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (trace[i] == 0.0) acc += (s[i] - y[i]) * (s[i] - y[i]);
    return std::sqrt(acc);
  };

  Stage st;
  st.s_tilde = init.y_li;
  st.s = st.s_tilde;
  st.x = hu_to_mu(init.x_li, cfg.mu_water);
  Sinogram px = forward_project(st.x, geom);
  st.objective = fit(px, st.s);
  st.trace_residual = residual(st.s);
  check_stage(0, st, 0.0, floor, cfg.divergence_factor);
  out.stages.push_back(std::move(st));

  for (std::size_t n = 1; n <= cfg.n_stages; ++n) {
    const Stage& prev = out.stages.back();
    Sinogram s_hat(y.grid(), SinogramKind::Raw);
    for (std::size_t i = 0; i < s_hat.size(); ++i) {
      const double s = prev.s_tilde[i];
      s_hat[i] = s - out.eta1 * ((s - px[i]) + cfg.alpha * (1.0 - trace[i]) * (s - y[i]));
    }
    Stage next;
    next.s_tilde = prox_apply(cfg.prox_s, s_hat);
    next.s = next.s_tilde;
    next.x = x_step_from_px(prev.x, px, next.s, out.eta2, cfg.prox_x, geom);
    px = forward_project(next.x, geom);
    next.objective = fit(px, next.s);
    next.trace_residual = residual(next.s);
    check_stage(n, next, prev.objective, floor, cfg.divergence_factor);
    out.stages.push_back(std::move(next));
  }
  return out;
}

double training_objective(const StageTrace& trace, const Image& x_gt, const Sinogram& y_gt, const Image& metal_mask,
                          const LossWeights& weights, double mu_water) {
  if (trace.stages.empty()) throw ValidationError("training_objective: empty stage trace");
  const std::size_t n_stages = trace.stages.size() - 1;
  std::vector<double> betas = weights.betas;
  if (betas.empty()) {
    betas.assign(n_stages + 1, 0.1);
    betas.back() = 1.0;
  }
  if (betas.size() != n_stages + 1)
    throw ShapeError("training_objective: expected " + std::to_string(n_stages + 1) + " betas, got " +
                     std::to_string(betas.size()));
  const Image gt = x_gt.unit() == ImageUnit::HU ? hu_to_mu(x_gt, mu_water) : x_gt;
  require_same_grid(gt, trace.stages[0].x, "training_objective image");
  require_same_grid(gt, metal_mask, "training_objective mask");
  require_same_grid(y_gt, trace.stages[0].s, "training_objective sinogram");

  double image_term = 0.0, sino_term = 0.0;
  for (std::size_t n = 0; n <= n_stages; ++n) {
    const Stage& st = trace.stages[n];
    double e = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const double d = (st.x[i] - gt[i]) * (1.0 - metal_mask[i]);
      e += d * d;
    }
    image_term += betas[n] * e;
    if (n >= 1) {
      double s = 0.0;
      for (std::size_t i = 0; i < y_gt.size(); ++i) {
        const double d = st.s[i] - y_gt[i];
        s += d * d;
      }
      sino_term += betas[n] * s;
    }
  }
  return image_term + weights.gamma * sino_term;
}

}  // namespace mar
