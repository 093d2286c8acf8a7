#include "mar/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "mar/io.hpp"

namespace mar {

namespace pt = boost::property_tree;

ImageGrid GeometryConfig::image_grid() const { return ImageGrid(height, width, pixel_size); }

ProjectionGeometry GeometryConfig::build() const {
  const ImageGrid ig = image_grid();
  if (bin_spacing == 0.0) {
    ProjectionGeometry g = ProjectionGeometry::covering(ig, n_bins, n_views);
    if (offset == 0.0) return g;
    return ProjectionGeometry(ig, g.sino_grid(), offset);
  }
  return ProjectionGeometry(ig, SinogramGrid(n_bins, n_views, bin_spacing), offset);
}

Config::Config() {
  filter.window = RampFilter::Window::RamLak;
  solver.prox_x = ProxOperator::tv(ProxOperator::Domain::Image, 0.0005);
  solver.prox_s = ProxOperator::identity(ProxOperator::Domain::Sinogram);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty()) return d;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(key, "expected a number, got '" + v + "'");
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const unsigned long long d = std::stoull(v, &used);
      if (trim(v.substr(used)).empty()) return d;
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

struct Field {
  std::function<void(Config&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const Config&)> get;
};

template <class T>
Field real_field(T Config::*member) {
  return {[member](Config& c, const std::string& k, const std::string& v) { c.*member = to_real(k, v); },
          [member](const Config& c) { return fmt(c.*member); }};
}

template <class Get>
Field real_at(Get get) {
  return {[get](Config& c, const std::string& k, const std::string& v) { get(c) = to_real(k, v); },
          [get](const Config& c) { return fmt(get(const_cast<Config&>(c))); }};
}

template <class Get>
Field uint_at(Get get) {
  return {[get](Config& c, const std::string& k, const std::string& v) {
            using T = std::remove_reference_t<decltype(get(c))>;
            get(c) = static_cast<T>(to_uint(k, v));
          },
          [get](const Config& c) { return std::to_string(get(const_cast<Config&>(c))); }};
}

template <class Get>
Field string_at(Get get) {
  return {[get](Config& c, const std::string&, const std::string& v) { get(c) = v; },
          [get](const Config& c) { return get(const_cast<Config&>(c)); }};
}

Field prox_field(ProxOperator SolverConfig::*member, ProxOperator::Domain d) {
  return {[member, d](Config& c, const std::string& k, const std::string& v) {
            try {
              c.solver.*member = ProxOperator::parse(v, d);
            } catch (const ValidationError& e) {
              throw ConfigError(k, e.what());
            }
          },
          [member](const Config& c) { return (c.solver.*member).to_spec(); }};
}

// Ordered so that dump_config groups keys by section.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("geometry.height", uint_at([](Config& c) -> auto& { return c.geometry.height; }));
    t.emplace_back("geometry.width", uint_at([](Config& c) -> auto& { return c.geometry.width; }));
    t.emplace_back("geometry.pixel_size", real_at([](Config& c) -> auto& { return c.geometry.pixel_size; }));
    t.emplace_back("geometry.n_bins", uint_at([](Config& c) -> auto& { return c.geometry.n_bins; }));
    t.emplace_back("geometry.n_views", uint_at([](Config& c) -> auto& { return c.geometry.n_views; }));
    t.emplace_back("geometry.bin_spacing", real_at([](Config& c) -> auto& { return c.geometry.bin_spacing; }));
    t.emplace_back("geometry.offset", real_at([](Config& c) -> auto& { return c.geometry.offset; }));

    t.emplace_back("phantom.kind", string_at([](Config& c) -> auto& { return c.phantom_kind; }));
    t.emplace_back("phantom.path", string_at([](Config& c) -> auto& { return c.phantom_path; }));
    t.emplace_back("phantom.discs", string_at([](Config& c) -> auto& { return c.phantom_discs; }));
    t.emplace_back("phantom.background_hu", real_field(&Config::phantom_background_hu));
    t.emplace_back("phantom.supersample", uint_at([](Config& c) -> auto& { return c.phantom_supersample; }));

    t.emplace_back("metal.mask", string_at([](Config& c) -> auto& { return c.metal_mask; }));
    t.emplace_back("metal.discs", string_at([](Config& c) -> auto& { return c.metal_discs; }));
    t.emplace_back("metal.hu", real_field(&Config::metal_hu));
    t.emplace_back("metal.trace_threshold", real_field(&Config::trace_threshold));

    t.emplace_back("spectrum.mode", string_at([](Config& c) -> auto& { return c.spectrum_mode; }));
    t.emplace_back("spectrum.photon_count", real_field(&Config::photon_count));

    t.emplace_back("run.seed", uint_at([](Config& c) -> auto& { return c.seed; }));
    t.emplace_back("run.case_id", string_at([](Config& c) -> auto& { return c.case_id; }));
    t.emplace_back("run.mu_water", real_field(&Config::mu_water));

    t.emplace_back("prior.sigma", real_at([](Config& c) -> auto& { return c.prior.sigma; }));
    t.emplace_back("prior.kmeans_restarts", uint_at([](Config& c) -> auto& { return c.prior.kmeans_restarts; }));
    t.emplace_back("prior.kmeans_iterations", uint_at([](Config& c) -> auto& { return c.prior.kmeans_max_iters; }));
    t.emplace_back("prior.seed", uint_at([](Config& c) -> auto& { return c.prior.seed; }));
    t.emplace_back("prior.fallback_air_hu", real_at([](Config& c) -> auto& { return c.prior.fallback_air_hu; }));
    t.emplace_back("prior.fallback_bone_hu", real_at([](Config& c) -> auto& { return c.prior.fallback_bone_hu; }));
    t.emplace_back("prior.weight_max", real_at([](Config& c) -> auto& { return c.prior.weight_max; }));
    t.emplace_back("prior.weights", string_at([](Config& c) -> auto& { return c.prior_weights; }));
    t.emplace_back("prior.ytilde", string_at([](Config& c) -> auto& { return c.prior_ytilde; }));

    t.emplace_back("solver.n_stages", uint_at([](Config& c) -> auto& { return c.solver.n_stages; }));
    t.emplace_back("solver.alpha", real_at([](Config& c) -> auto& { return c.solver.alpha; }));
    t.emplace_back("solver.auto_stepsize",
                   Field{[](Config& c, const std::string& k, const std::string& v) { c.solver.auto_stepsize = to_bool(k, v); },
                         [](const Config& c) { return std::string(c.solver.auto_stepsize ? "true" : "false"); }});
    t.emplace_back("solver.eta1", real_at([](Config& c) -> auto& { return c.solver.eta1; }));
    t.emplace_back("solver.eta2", real_at([](Config& c) -> auto& { return c.solver.eta2; }));
    t.emplace_back("solver.step_safety", real_at([](Config& c) -> auto& { return c.solver.step_safety; }));
    t.emplace_back("solver.norm_iters", uint_at([](Config& c) -> auto& { return c.solver.norm_iters; }));
    t.emplace_back("solver.norm_seed", uint_at([](Config& c) -> auto& { return c.solver.norm_seed; }));
    t.emplace_back("solver.divergence_factor", real_at([](Config& c) -> auto& { return c.solver.divergence_factor; }));
    t.emplace_back("solver.prox_s", prox_field(&SolverConfig::prox_s, ProxOperator::Domain::Sinogram));
    t.emplace_back("solver.prox_x", prox_field(&SolverConfig::prox_x, ProxOperator::Domain::Image));

    t.emplace_back("baseline.trace_dilation", uint_at([](Config& c) -> auto& { return c.trace_dilation; }));

    t.emplace_back("fbp.window",
                   Field{[](Config& c, const std::string& k, const std::string& v) {
                           try {
                             c.filter.window = parse_filter_window(v);
                           } catch (const ValidationError& e) {
                             throw ConfigError(k, e.what());
                           }
                         },
                         [](const Config& c) { return std::string(to_string(c.filter.window)); }});
    t.emplace_back("fbp.cutoff", real_at([](Config& c) -> auto& { return c.filter.cutoff; }));
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, field] : fields())
    if (name == key) return &field;
  return nullptr;
}

}  // namespace

std::vector<Disc> parse_discs(const std::string& text, bool with_value, const std::string& key) {
  std::vector<Disc> out;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::vector<double> nums;
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) nums.push_back(to_real(key, trim(tok)));
    const std::size_t want = with_value ? 4 : 3;
    if (nums.size() != want)
      throw ConfigError(key, "disc '" + item + "' needs " + std::to_string(want) + " comma-separated numbers");
    if (!(nums[2] > 0.0)) throw ConfigError(key, "disc radius must be > 0");
    out.push_back({nums[0], nums[1], nums[2], with_value ? nums[3] : 1.0});
  }
  return out;
}

PhantomParams Config::phantom_params() const {
  PhantomParams p;
  p.background_hu = phantom_background_hu;
  p.supersample = phantom_supersample;
  if (phantom_kind == "shepp-logan") {
    p.kind = PhantomKind::SheppLogan;
  } else if (phantom_kind == "discs") {
    p.kind = PhantomKind::Discs;
    p.discs = parse_discs(phantom_discs, true, "phantom.discs");
    if (p.discs.empty()) p.discs = bundled_disc_phantom();
  } else if (phantom_kind == "file") {
    p.kind = PhantomKind::FromFile;
    p.path = phantom_path;
  } else {
    throw ConfigError("phantom.kind", "unknown phantom '" + phantom_kind + "' (shepp-logan, discs, file)");
  }
  return p;
}

SpectrumConfig Config::spectrum() const {
  if (spectrum_mode == "poly") return SpectrumConfig::polychromatic(photon_count);
  if (spectrum_mode == "mono") {
    SpectrumConfig s = SpectrumConfig::monochromatic();
    s.photon_count = photon_count;
    return s;
  }
  throw ConfigError("spectrum.mode", "unknown spectrum '" + spectrum_mode + "' (poly, mono)");
}

Image Config::metal_mask_image() const {
  const ImageGrid grid = geometry.image_grid();
  Image mask = disc_mask(grid, parse_discs(metal_discs, false, "metal.discs"));
  if (!metal_mask.empty()) {
    Image file = read_image(metal_mask);
    if (!(file.grid().height == grid.height && file.grid().width == grid.width))
      throw ConfigError("metal.mask", "mask " + metal_mask + " is " + std::to_string(file.height()) + "x" +
                                          std::to_string(file.width()) + ", geometry is " + std::to_string(grid.height) +
                                          "x" + std::to_string(grid.width));
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (file[i] != 0.0) mask[i] = 1.0;
  }
  return mask;
}

void Config::validate() const {
  auto check = [](bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
  };
  check(geometry.height > 0 && geometry.width > 0, "geometry.height", "image size must be positive");
  check(geometry.pixel_size > 0.0, "geometry.pixel_size", "must be > 0");
  check(geometry.n_bins > 0 && geometry.n_views > 0, "geometry.n_bins", "sinogram size must be positive");
  check(geometry.bin_spacing >= 0.0, "geometry.bin_spacing", "must be >= 0");
  check(phantom_supersample >= 1, "phantom.supersample", "must be >= 1");
  check(photon_count >= 0.0, "spectrum.photon_count", "must be >= 0");
  check(mu_water > 0.0, "run.mu_water", "must be > 0");
  check(prior.sigma >= 0.0, "prior.sigma", "must be >= 0");
  check(prior.kmeans_restarts >= 1, "prior.kmeans_restarts", "must be >= 1");
  check(prior.kmeans_max_iters >= 1, "prior.kmeans_iterations", "must be >= 1");
  check(prior.weight_max > 0.0, "prior.weight_max", "must be > 0");
  check(solver.n_stages >= 1, "solver.n_stages", "must be >= 1");
  check(solver.alpha >= 0.0, "solver.alpha", "must be >= 0");
  check(solver.auto_stepsize || (solver.eta1 > 0.0 && solver.eta2 > 0.0), "solver.eta1",
        "manual stepsizes must be > 0");
  check(filter.cutoff > 0.0 && filter.cutoff <= 1.0, "fbp.cutoff", "must be in (0, 1]");
  phantom_params();
  spectrum();
  parse_discs(metal_discs, false, "metal.discs");
  try {
    geometry.build();
  } catch (const Error& e) {
    throw ConfigError("geometry.n_bins", e.what());
  }
}

Config parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const Field* f = find_field(full);
      if (!f) throw ConfigError(full, "unknown key");
      f->set(cfg, full, trim(value.data()));
    }
  }
  cfg.prior.mu_water = cfg.mu_water;
  cfg.solver.mu_water = cfg.mu_water;
  cfg.validate();
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError&) {
    throw IoError("cannot read config " + path.string());
  }
  return parse_config(text);
}

std::string dump_config(const Config& cfg) {
  std::ostringstream os;
  std::string current;
  for (const auto& [name, field] : fields()) {
    const auto dot = name.find('.');
    const std::string section = name.substr(0, dot);
    if (section != current) {
      if (!current.empty()) os << '\n';
      os << '[' << section << "]\n";
      current = section;
    }
    os << name.substr(dot + 1) << " = " << field.get(cfg) << '\n';
  }
  return os.str();
}

}  // namespace mar
