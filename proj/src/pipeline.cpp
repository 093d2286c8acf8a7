#include "mar/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mar/io.hpp"

namespace mar {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::LI: return "li";
    case Method::NMAR: return "nmar";
    case Method::Dual: return "dual";
    case Method::DualDegraded: return "dual-degraded";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "li") return Method::LI;
  if (s == "nmar") return Method::NMAR;
  if (s == "dual") return Method::Dual;
  if (s == "dual-degraded") return Method::DualDegraded;
  throw ValidationError("unknown method '" + std::string(s) + "' (li, nmar, dual, dual-degraded)");
}

SimulatedCase simulate_case(const Config& cfg) {
  cfg.validate();
  const ProjectionGeometry geom = cfg.geometry.build();
  PhantomParams pp = cfg.phantom_params();
  Image clean = make_phantom(pp, geom.image_grid());
  MetalSpec metal{cfg.metal_mask_image(), cfg.metal_hu};
  SimulationOptions opts;
  opts.mu_water = cfg.mu_water;
  opts.seed = cfg.seed;
  opts.filter = cfg.filter;
  SimulatedCase out{simulate_artifacts(clean, metal, cfg.spectrum(), geom, opts), metal.mask,
                    compute_metal_trace(metal, geom, cfg.trace_threshold)};
  return out;
}

namespace {

Image load_weights(const Config& cfg, const ImageGrid& grid) {
  Image w = read_image(cfg.prior_weights).with_unit(ImageUnit::Weight);
  if (!(w.grid().height == grid.height && w.grid().width == grid.width))
    throw ConfigError("prior.weights", "weight map " + cfg.prior_weights + " does not match the image grid");
  Image out(grid, ImageUnit::Weight);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w[i];
  out.validate(cfg.prior.weight_max);
  return out;
}

Sinogram load_y_tilde(const Config& cfg, const SinogramGrid& grid) {
  Sinogram s = read_sinogram(cfg.prior_ytilde);
  if (!(s.grid().n_bins == grid.n_bins && s.grid().n_views == grid.n_views))
    throw ConfigError("prior.ytilde", "sinogram " + cfg.prior_ytilde + " does not match the geometry");
  Sinogram out(grid, SinogramKind::Raw);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s[i];
  return out;
}

}  // namespace

Correction correct_case(Method method, const Sinogram& y, const Sinogram& trace, const Image& mask, const Config& cfg) {
  cfg.validate();
  const ProjectionGeometry geom = cfg.geometry.build();
  require_same_grid(y, trace, "correct");
  if (!(y.grid().n_bins == geom.sino_grid().n_bins && y.grid().n_views == geom.sino_grid().n_views))
    throw ShapeError("input sinogram does not match the configured geometry");
  const Sinogram tr = dilate_trace(trace, cfg.trace_dilation);

  const LiResult li = li_correct(y, tr, geom, cfg.filter, cfg.mu_water);
  if (method == Method::LI) return {li.y_li, li.x_li, std::nullopt, std::nullopt};

  PriorConfig pc = cfg.prior;
  pc.mu_water = cfg.mu_water;
  std::optional<Image> weights;
  if (!cfg.prior_weights.empty()) weights = load_weights(cfg, geom.image_grid());

  SolverConfig sc = cfg.solver;
  sc.mu_water = cfg.mu_water;
  const Initialization init{li.y_li, li.x_li};

  if (method == Method::DualDegraded) {
    StageTrace st = run_degraded(y, tr, init, sc, geom);
    Correction c{st.final_stage().s, st.final_image_hu(cfg.mu_water), std::nullopt, std::nullopt};
    c.stages = std::move(st);
    return c;
  }

  Sinogram y_tilde;
  Correction c;
  if (!cfg.prior_ytilde.empty()) {
    y_tilde = load_y_tilde(cfg, geom.sino_grid());
  } else {
    const NmarResult nm = nmar_correct(y, tr, li.x_li, geom, pc, &mask, weights ? &*weights : nullptr, cfg.filter);
    if (method == Method::NMAR) return {nm.y_nmar, nm.x_nmar, std::nullopt, nm.y_tilde};
    y_tilde = nm.y_tilde;
  }
  if (method == Method::NMAR) {
    const Sinogram y_nmar = nmar_fill(y, tr, y_tilde);
    return {y_nmar, mu_to_hu(fbp(y_nmar, geom, cfg.filter), cfg.mu_water), std::nullopt, y_tilde};
  }
  StageTrace st = run(y, tr, y_tilde, init, sc, geom);
  c.sino = st.final_stage().s;
  c.image_hu = st.final_image_hu(cfg.mu_water);
  c.stages = std::move(st);
  c.y_tilde = std::move(y_tilde);
  return c;
}

namespace {

// Smallest radius (in normalised units) whose discs cover at least `target` pixels in total.
double radius_for(const ImageGrid& grid, std::vector<Disc> discs, std::size_t target) {
  const double px = 2.0 / static_cast<double>(std::max(grid.height, grid.width));
  for (int step = 1; step < 100000; ++step) {
    const double r = 0.01 * step * px;
    for (auto& d : discs) d.radius = r;
    const Image m = disc_mask(grid, discs);
    std::size_t n = 0;
    for (double v : m.values()) n += v != 0.0;
    if (n >= target) return r;
  }
  throw ValidationError("cannot place metal of " + std::to_string(target) + " pixels");
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string disc_text(const std::vector<Disc>& discs) {
  std::string out;
  for (const auto& d : discs) {
    if (!out.empty()) out += "; ";
    out += shortest(d.cx) + "," + shortest(d.cy) + "," + shortest(d.radius);
  }
  return out;
}

}  // namespace

std::vector<SuiteCase> bundled_suite(const Config& base) {
  const ImageGrid grid = base.geometry.image_grid();
  // Target metal areas in pixels, large to small.
  const std::size_t targets[10] = {196, 84, 80, 44, 24, 14, 11, 8, 5, 3};
  std::vector<SuiteCase> out;
  for (int k = 0; k < 10; ++k) {
    std::vector<Disc> discs;
    if (k % 2 == 0 && k < 6) {
      discs = {{-0.25, -0.2, 0.0, 1.0}, {0.25, -0.2, 0.0, 1.0}};
    } else {
      discs = {{0.1 * (k % 3) - 0.1, 0.25 - 0.05 * k, 0.0, 1.0}};
    }
    const double r = radius_for(grid, discs, targets[k]);
    for (auto& d : discs) d.radius = r;
    char id[16];
    std::snprintf(id, sizeof id, "case_%02d", k);
    out.push_back({id, disc_text(discs), 100u + static_cast<std::uint64_t>(k)});
  }
  return out;
}

Config suite_case_config(const Config& base, const SuiteCase& c) {
  Config cfg = base;
  cfg.metal_discs = c.metal_discs;
  cfg.metal_mask.clear();
  cfg.case_id = c.case_id;
  cfg.seed = c.seed;
  return cfg;
}

}  // namespace mar
