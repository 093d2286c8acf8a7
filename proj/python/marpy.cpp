// Python bindings: numpy arrays in and out, images as (height, width), sinograms as (bins, views).
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "mar/baselines.hpp"
#include "mar/config.hpp"
#include "mar/dualdomain.hpp"
#include "mar/metrics.hpp"
#include "mar/pipeline.hpp"
#include "mar/prior.hpp"
#include "mar/simulate.hpp"

namespace py = pybind11;
using namespace mar;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::pair<std::size_t, std::size_t> shape2(const Array& a, const char* what) {
  if (a.ndim() != 2) throw ShapeError(std::string(what) + ": expected a 2-D array");
  return {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))};
}

std::vector<double> copy_values(const Array& a) { return {a.data(), a.data() + a.size()}; }

Image to_image(const Array& a, const ImageGrid& grid, ImageUnit unit, const char* what) {
  const auto [h, w] = shape2(a, what);
  if (h != grid.height || w != grid.width)
    throw ShapeError(std::string(what) + ": shape does not match the geometry image grid");
  return Image(grid, unit, copy_values(a));
}

Sinogram to_sino(const Array& a, const SinogramGrid& grid, SinogramKind kind, const char* what) {
  const auto [b, v] = shape2(a, what);
  if (b != grid.n_bins || v != grid.n_views)
    throw ShapeError(std::string(what) + ": shape does not match the geometry sinogram grid");
  return Sinogram(grid, kind, copy_values(a));
}

Array from_values(std::span<const double> v, std::size_t rows, std::size_t cols) {
  Array out({rows, cols});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array from_image(const Image& img) { return from_values(img.values(), img.grid().height, img.grid().width); }
Array from_sino(const Sinogram& s) { return from_values(s.values(), s.n_bins(), s.n_views()); }

ProjectionGeometry make_geometry(std::size_t h, std::size_t w, double pixel, std::size_t bins, std::size_t views,
                                 double spacing, double offset) {
  const ImageGrid ig(h, w, pixel);
  if (spacing <= 0.0) {
    if (offset != 0.0) throw ValidationError("offset needs an explicit bin_spacing");
    return ProjectionGeometry::covering(ig, bins, views);
  }
  return ProjectionGeometry(ig, SinogramGrid(bins, views, spacing), offset);
}

RampFilter make_filter(const std::string& window, double cutoff) {
  RampFilter f;
  f.window = parse_filter_window(window);
  f.cutoff = cutoff;
  f.validate();
  return f;
}

std::vector<Disc> to_discs(const std::vector<std::vector<double>>& list, bool with_value) {
  std::vector<Disc> out;
  for (const auto& d : list) {
    if (d.size() != (with_value ? 4u : 3u))
      throw ValidationError(with_value ? "discs are (cx, cy, r, hu)" : "discs are (cx, cy, r)");
    out.push_back({d[0], d[1], d[2], with_value ? d[3] : 0.0});
  }
  return out;
}

py::dict stage_trace_dict(const StageTrace& t, double mu_water) {
  py::list objective, residual, images;
  for (const auto& st : t.stages) {
    objective.append(st.objective);
    residual.append(st.trace_residual);
  }
  py::dict d;
  d["objective"] = objective;
  d["trace_residual"] = residual;
  d["eta1"] = t.eta1;
  d["eta2"] = t.eta2;
  d["s_tilde"] = from_sino(t.final_stage().s_tilde);
  d["sinogram"] = from_sino(t.final_stage().s);
  d["image"] = from_image(t.final_image_hu(mu_water));
  return d;
}

}  // namespace

PYBIND11_MODULE(marpy, m) {
  m.doc() = "Metal artifact reduction on parallel-beam CT: projector, simulator, LI/NMAR and the dual-domain solver.";

  // Translators are tried newest first: the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  py::class_<ProjectionGeometry>(m, "Geometry")
      .def(py::init(&make_geometry), py::arg("height"), py::arg("width"), py::arg("pixel_size"), py::arg("n_bins"),
           py::arg("n_views"), py::arg("bin_spacing") = 0.0, py::arg("offset") = 0.0,
           "bin_spacing <= 0 picks the spacing that covers the image diagonal.")
      .def_property_readonly("image_shape",
                             [](const ProjectionGeometry& g) {
                               return py::make_tuple(g.image_grid().height, g.image_grid().width);
                             })
      .def_property_readonly("sino_shape",
                             [](const ProjectionGeometry& g) {
                               return py::make_tuple(g.sino_grid().n_bins, g.sino_grid().n_views);
                             })
      .def_property_readonly("pixel_size", [](const ProjectionGeometry& g) { return g.image_grid().pixel_size; })
      .def_property_readonly("bin_spacing", [](const ProjectionGeometry& g) { return g.sino_grid().bin_spacing; })
      .def("forward",
           [](const ProjectionGeometry& g, const Array& x) {
             return from_sino(forward_project(to_image(x, g.image_grid(), ImageUnit::Attenuation, "image"), g));
           },
           py::arg("mu"), "Line integrals of an attenuation image (1/cm).")
      .def("back",
           [](const ProjectionGeometry& g, const Array& s) {
             return from_image(back_project(to_sino(s, g.sino_grid(), SinogramKind::Raw, "sinogram"), g));
           },
           py::arg("sinogram"))
      .def("fbp",
           [](const ProjectionGeometry& g, const Array& s, const std::string& window, double cutoff) {
             return from_image(
                 fbp(to_sino(s, g.sino_grid(), SinogramKind::Raw, "sinogram"), g, make_filter(window, cutoff)));
           },
           py::arg("sinogram"), py::arg("window") = "ramlak", py::arg("cutoff") = 1.0)
      .def("operator_norm", [](const ProjectionGeometry& g, int iters, std::uint64_t seed) {
             return operator_norm(g, iters, seed);
           },
           py::arg("iters") = 30, py::arg("seed") = 0);

  m.def("hu_to_mu", [](const Array& hu, double mu_water) {
    const auto [h, w] = shape2(hu, "hu");
    return from_image(hu_to_mu(Image(ImageGrid(h, w), ImageUnit::HU, copy_values(hu)), mu_water));
  }, py::arg("hu"), py::arg("mu_water") = kDefaultMuWater);
  m.def("mu_to_hu", [](const Array& mu, double mu_water) {
    const auto [h, w] = shape2(mu, "mu");
    return from_image(mu_to_hu(Image(ImageGrid(h, w), ImageUnit::Attenuation, copy_values(mu)), mu_water));
  }, py::arg("mu"), py::arg("mu_water") = kDefaultMuWater);

  m.def("shepp_logan", [](std::size_t h, std::size_t w, int supersample) {
    PhantomParams p;
    p.supersample = supersample;
    return from_image(make_phantom(p, ImageGrid(h, w)));
  }, py::arg("height"), py::arg("width"), py::arg("supersample") = 1, "Shepp-Logan phantom in HU.");
  m.def("disc_phantom", [](std::size_t h, std::size_t w, std::optional<std::vector<std::vector<double>>> discs,
                           double background, int supersample) {
    PhantomParams p;
    p.kind = PhantomKind::Discs;
    p.discs = discs ? to_discs(*discs, true) : bundled_disc_phantom();
    p.background_hu = background;
    p.supersample = supersample;
    return from_image(make_phantom(p, ImageGrid(h, w)));
  }, py::arg("height"), py::arg("width"), py::arg("discs") = py::none(), py::arg("background_hu") = -1000.0,
     py::arg("supersample") = 1, "Discs (cx, cy, r, hu) in normalised coordinates; None gives the bundled phantom.");
  m.def("disc_mask", [](std::size_t h, std::size_t w, const std::vector<std::vector<double>>& discs) {
    return from_image(disc_mask(ImageGrid(h, w), to_discs(discs, false)));
  }, py::arg("height"), py::arg("width"), py::arg("discs"));

  m.def("metal_trace", [](const ProjectionGeometry& g, const Array& mask, double threshold) {
    return from_sino(compute_metal_trace({to_image(mask, g.image_grid(), ImageUnit::Binary, "mask"), 0.0}, g, threshold));
  }, py::arg("geometry"), py::arg("mask"), py::arg("threshold") = 0.0);

  m.def("simulate", [](const ProjectionGeometry& g, const Array& clean_hu, const Array& mask, double metal_hu,
                       const std::string& spectrum, double photon_count, std::uint64_t seed, const std::string& window) {
    SpectrumConfig spec;
    if (spectrum == "poly") spec = SpectrumConfig::polychromatic(photon_count);
    else if (spectrum == "mono") {
      spec = SpectrumConfig::monochromatic();
      spec.photon_count = photon_count;
    } else throw ValidationError("spectrum must be 'poly' or 'mono'");
    SimulationOptions o;
    o.seed = seed;
    o.filter = make_filter(window, 1.0);
    const auto r = simulate_artifacts(to_image(clean_hu, g.image_grid(), ImageUnit::HU, "clean"),
                                      {to_image(mask, g.image_grid(), ImageUnit::Binary, "mask"), metal_hu}, spec, g, o);
    py::dict d;
    d["y"] = from_sino(r.y);
    d["y_gt"] = from_sino(r.y_gt);
    d["x_ma"] = from_image(r.x_ma);
    d["x_gt"] = from_image(r.x_gt);
    return d;
  }, py::arg("geometry"), py::arg("clean_hu"), py::arg("mask"), py::arg("metal_hu") = 8000.0,
     py::arg("spectrum") = "poly", py::arg("photon_count") = 0.0, py::arg("seed") = 0, py::arg("window") = "ramlak");

  m.def("li", [](const ProjectionGeometry& g, const Array& y, const Array& trace, const std::string& window) {
    const auto r = li_correct(to_sino(y, g.sino_grid(), SinogramKind::Raw, "y"),
                              to_sino(trace, g.sino_grid(), SinogramKind::Trace, "trace"), g, make_filter(window, 1.0));
    return py::make_tuple(from_sino(r.y_li), from_image(r.x_li));
  }, py::arg("geometry"), py::arg("y"), py::arg("trace"), py::arg("window") = "ramlak",
     "Returns (sinogram, image in HU).");

  m.def("nmar", [](const ProjectionGeometry& g, const Array& y, const Array& trace, const Array& x_li,
                   std::optional<Array> mask, const std::string& window) {
    std::optional<Image> m_img;
    if (mask) m_img = to_image(*mask, g.image_grid(), ImageUnit::Binary, "mask");
    const auto r = nmar_correct(to_sino(y, g.sino_grid(), SinogramKind::Raw, "y"),
                                to_sino(trace, g.sino_grid(), SinogramKind::Trace, "trace"),
                                to_image(x_li, g.image_grid(), ImageUnit::HU, "x_li"), g, {},
                                m_img ? &*m_img : nullptr, nullptr, make_filter(window, 1.0));
    py::dict d;
    d["sinogram"] = from_sino(r.y_nmar);
    d["image"] = from_image(r.x_nmar);
    d["prior"] = from_image(r.prior);
    d["y_tilde"] = from_sino(r.y_tilde);
    return d;
  }, py::arg("geometry"), py::arg("y"), py::arg("trace"), py::arg("x_li"), py::arg("mask") = py::none(),
     py::arg("window") = "ramlak");

  m.def("run", [](const ProjectionGeometry& g, const Array& y, const Array& trace, std::optional<Array> y_tilde,
                  const Array& y_li, const Array& x_li, std::size_t n_stages, double alpha, const std::string& prox_s,
                  const std::string& prox_x) {
    SolverConfig cfg;
    cfg.n_stages = n_stages;
    cfg.alpha = alpha;
    cfg.prox_s = ProxOperator::parse(prox_s, ProxOperator::Domain::Sinogram);
    cfg.prox_x = ProxOperator::parse(prox_x, ProxOperator::Domain::Image);
    const Sinogram ys = to_sino(y, g.sino_grid(), SinogramKind::Raw, "y");
    const Sinogram tr = to_sino(trace, g.sino_grid(), SinogramKind::Trace, "trace");
    const Initialization init{to_sino(y_li, g.sino_grid(), SinogramKind::Raw, "y_li"),
                              to_image(x_li, g.image_grid(), ImageUnit::HU, "x_li")};
    std::optional<Sinogram> yt;
    if (y_tilde) yt = to_sino(*y_tilde, g.sino_grid(), SinogramKind::Raw, "y_tilde");
    StageTrace t;
    {
      py::gil_scoped_release release;
      t = yt ? run(ys, tr, *yt, init, cfg, g) : run_degraded(ys, tr, init, cfg, g);
    }
    return stage_trace_dict(t, cfg.mu_water);
  }, py::arg("geometry"), py::arg("y"), py::arg("trace"), py::arg("y_tilde"), py::arg("y_li"), py::arg("x_li"),
     py::arg("n_stages") = 10, py::arg("alpha") = 0.5, py::arg("prox_s") = "identity",
     py::arg("prox_x") = "tv:0.0005",
     "Dual-domain solver from the LI start; y_tilde=None runs the variant without normalisation.");

  m.def("psnr", [](const Array& a, const Array& b, double peak, std::optional<Array> exclude) {
    const auto [h, w] = shape2(a, "a");
    const ImageGrid g(h, w);
    std::optional<Image> ex;
    if (exclude) ex = to_image(*exclude, g, ImageUnit::Binary, "exclude");
    return psnr(Image(g, ImageUnit::HU, copy_values(a)), to_image(b, g, ImageUnit::HU, "b"), peak, ex ? &*ex : nullptr);
  }, py::arg("a"), py::arg("b"), py::arg("peak"), py::arg("exclude") = py::none());
  m.def("ssim", [](const Array& a, const Array& b, double peak, std::size_t window, double sigma) {
    const auto [h, w] = shape2(a, "a");
    const ImageGrid g(h, w);
    SsimParams p;
    p.peak = peak;
    p.window = window;
    p.sigma = sigma;
    return ssim(Image(g, ImageUnit::HU, copy_values(a)), to_image(b, g, ImageUnit::HU, "b"), p);
  }, py::arg("a"), py::arg("b"), py::arg("peak"), py::arg("window") = 11, py::arg("sigma") = 1.5);
  m.def("evaluate_hu", [](const Array& recon, const Array& gt, std::optional<Array> mask) {
    const auto [h, w] = shape2(gt, "gt");
    const ImageGrid g(h, w);
    std::optional<Image> mk;
    if (mask) mk = to_image(*mask, g, ImageUnit::Binary, "mask");
    const auto q = evaluate_hu(to_image(recon, g, ImageUnit::HU, "recon"), Image(g, ImageUnit::HU, copy_values(gt)),
                               mk ? &*mk : nullptr);
    return py::make_tuple(q.psnr, q.ssim);
  }, py::arg("recon_hu"), py::arg("gt_hu"), py::arg("mask") = py::none(), "Returns (psnr_db, ssim).");

  m.def("default_config", []() { return dump_config(Config{}); }, "Every configuration key with its default, as INI text.");
  m.def("simulate_config", [](const std::string& ini) {
    const Config cfg = parse_config(ini);
    const SimulatedCase c = simulate_case(cfg);
    py::dict d;
    d["y"] = from_sino(c.sim.y);
    d["y_gt"] = from_sino(c.sim.y_gt);
    d["x_ma"] = from_image(c.sim.x_ma);
    d["x_gt"] = from_image(c.sim.x_gt);
    d["mask"] = from_image(c.mask);
    d["trace"] = from_sino(c.trace);
    return d;
  }, py::arg("ini") = "", "Simulates the case described by INI configuration text.");
  m.def("correct_config", [](const std::string& method, const Array& y, const Array& trace, const Array& mask,
                             const std::string& ini) {
    const Config cfg = parse_config(ini);
    const ProjectionGeometry g = cfg.geometry.build();
    const Correction c = correct_case(parse_method(method), to_sino(y, g.sino_grid(), SinogramKind::Raw, "y"),
                                      to_sino(trace, g.sino_grid(), SinogramKind::Trace, "trace"),
                                      to_image(mask, g.image_grid(), ImageUnit::Binary, "mask"), cfg);
    py::dict d;
    d["sinogram"] = from_sino(c.sino);
    d["image"] = from_image(c.image_hu);
    if (c.stages) d["stages"] = stage_trace_dict(*c.stages, cfg.mu_water);
    return d;
  }, py::arg("method"), py::arg("y"), py::arg("trace"), py::arg("mask"), py::arg("ini") = "",
     "Runs li, nmar, dual or dual-degraded with the configuration in `ini`.");
}
