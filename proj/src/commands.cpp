#include "mar/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "mar/io.hpp"
#include "mar/metrics.hpp"
#include "mar/pipeline.hpp"

namespace mar {

namespace {

constexpr const char* kSuiteIndex = "suite.txt";

struct Failure {
  int code;
  std::string message;
};

// Maps library exceptions onto exit codes.
Failure classify(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const std::filesystem::filesystem_error*>(&e))
    return {kExitIo, e.what()};
  return {kExitCompute, e.what()};
}

std::string format_meta(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string s;
  for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t count_nonzero(const Image& m) {
  return static_cast<std::size_t>(std::count_if(m.values().begin(), m.values().end(), [](double v) { return v != 0.0; }));
}

// Runs body(i) for i in [0, n) on `jobs` threads; the first failure (lowest index) wins.
template <class F>
std::optional<Failure> for_cases(std::size_t n, int jobs, F&& body) {
  std::vector<std::optional<Failure>> failures(n);
  omp_set_max_active_levels(1);
#pragma omp parallel for num_threads(jobs) schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(i)] = classify(e);
    }
  }
  for (auto& f : failures)
    if (f) return f;
  return std::nullopt;
}

std::vector<std::string> read_suite_index(const std::filesystem::path& dir) {
  std::vector<std::string> ids;
  std::istringstream in(read_text(dir / kSuiteIndex));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ids.push_back(line);
  return ids;
}

bool is_suite(const std::filesystem::path& dir) { return std::filesystem::exists(dir / kSuiteIndex); }

void write_case(const std::filesystem::path& dir, const Config& cfg, const SimulatedCase& sc, bool previews) {
  std::filesystem::create_directories(dir);
  write_image(dir / "x_gt", sc.sim.x_gt);
  write_image(dir / "mask", sc.mask);
  write_sinogram(dir / "y", sc.sim.y);
  write_sinogram(dir / "y_gt", sc.sim.y_gt);
  write_image(dir / "x_ma", sc.sim.x_ma);
  write_sinogram(dir / "trace", sc.trace);
  write_text(dir / "config.ini", dump_config(cfg));
  write_text(dir / "meta.txt", format_meta({{"case_id", cfg.case_id},
                                            {"metal_size_px", std::to_string(count_nonzero(sc.mask))},
                                            {"seed", std::to_string(cfg.seed)}}));
  if (previews) {
    write_png_preview(dir / "x_gt.png", sc.sim.x_gt);
    write_png_preview(dir / "x_ma.png", sc.sim.x_ma);
    write_png_preview(dir / "mask.png", sc.mask, 0.0, 1.0);
  }
}

Config load_or_default(const std::filesystem::path& p) {
  if (p.empty()) return Config{};
  return load_config(p);
}

}  // namespace

std::map<std::string, std::string> read_meta(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.jobs < 1) throw ConfigError("--jobs", "must be >= 1");
    const Config base = load_or_default(opts.config);
    if (!opts.suite) {
      omp_set_num_threads(opts.jobs);
      const SimulatedCase sc = simulate_case(base);
      write_case(opts.out, base, sc, opts.previews);
      out << base.case_id << ": metal " << count_nonzero(sc.mask) << " px -> " << opts.out.string() << "\n";
      return kExitOk;
    }
    const auto cases = bundled_suite(base);
    std::vector<std::size_t> sizes(cases.size());
    const auto failure = for_cases(cases.size(), opts.jobs, [&](std::size_t i) {
      const Config cfg = suite_case_config(base, cases[i]);
      const SimulatedCase sc = simulate_case(cfg);
      sizes[i] = count_nonzero(sc.mask);
      write_case(opts.out / cases[i].case_id, cfg, sc, opts.previews);
    });
    if (failure) {
      err << "error: " << failure->message << "\n";
      return failure->code;
    }
    std::string index;
    for (const auto& c : cases) index += c.case_id + "\n";
    write_text(opts.out / kSuiteIndex, index);
    for (std::size_t i = 0; i < cases.size(); ++i)
      out << cases[i].case_id << ": metal " << sizes[i] << " px\n";
    return kExitOk;
  } catch (const std::exception& e) {
    const Failure f = classify(e);
    err << "error: " << f.message << "\n";
    return f.code;
  }
}

namespace {

struct CaseReport {
  std::string text;
};

CaseReport correct_one(Method method, const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                       const std::filesystem::path& config_path, bool previews) {
  Config cfg;
  if (!config_path.empty())
    cfg = load_config(config_path);
  else if (std::filesystem::exists(in_dir / "config.ini"))
    cfg = load_config(in_dir / "config.ini");

  const Sinogram y = read_sinogram(in_dir / "y");
  const Sinogram trace = read_sinogram(in_dir / "trace").with_kind(SinogramKind::Trace);
  const Image mask = read_image(in_dir / "mask").with_unit(ImageUnit::Binary);
  const auto meta = std::filesystem::exists(in_dir / "meta.txt") ? read_meta(in_dir / "meta.txt")
                                                                   : std::map<std::string, std::string>{};
  const std::string case_id = meta.count("case_id") ? meta.at("case_id") : cfg.case_id;
  std::optional<Image> gt;
  if (std::filesystem::exists(header_path(in_dir / "x_gt"))) gt = read_image(in_dir / "x_gt");

  const Correction c = correct_case(method, y, trace, mask, cfg);

  std::filesystem::create_directories(out_dir);
  write_sinogram(out_dir / "sino", c.sino);
  write_image(out_dir / "image", c.image_hu);
  if (previews) write_png_preview(out_dir / "image.png", c.image_hu);
  if (c.y_tilde) write_sinogram(out_dir / "y_tilde", *c.y_tilde);
  write_text(out_dir / "config.ini", dump_config(cfg));
  write_text(out_dir / "meta.txt",
             format_meta({{"method", std::string(to_string(method))},
                          {"case_id", case_id},
                          {"metal_size_px", std::to_string(count_nonzero(mask))}}));

  std::ostringstream report;
  report << case_id << " [" << to_string(method) << "]";
  if (c.stages) {
    const StageTrace& st = *c.stages;
    const auto stage_dir = out_dir / "stages";
    std::filesystem::create_directories(stage_dir);
    std::ostringstream csv;
    csv << "stage,objective,trace_residual,psnr\n";
    for (std::size_t n = 0; n < st.stages.size(); ++n) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "stage_%02zu", n);
      const Stage& s = st.stages[n];
      write_sinogram(stage_dir / (std::string(stem) + "_s_tilde"), s.s_tilde);
      write_sinogram(stage_dir / (std::string(stem) + "_s"), s.s);
      write_image(stage_dir / (std::string(stem) + "_x"), s.x);
      csv << n << ',' << real(s.objective) << ',' << real(s.trace_residual) << ',';
      if (gt) csv << real(evaluate_hu(mu_to_hu(s.x, cfg.mu_water), *gt, &mask).psnr);
      csv << '\n';
    }
    write_text(stage_dir / "stages.csv", csv.str());
    report << " eta1 " << real(st.eta1) << " eta2 " << real(st.eta2) << "\n";
    for (std::size_t n = 0; n < st.stages.size(); ++n)
      report << "  stage " << n << " objective " << real(st.stages[n].objective) << " trace_residual "
             << real(st.stages[n].trace_residual) << "\n";
    report << "  final objective " << real(st.final_stage().objective) << "\n";
  } else {
    report << " done\n";
  }
  return {report.str()};
}

}  // namespace

int cmd_correct(const CorrectOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.jobs < 1) throw ConfigError("--jobs", "must be >= 1");
    const Method method = [&] {
      try {
        return parse_method(opts.method);
      } catch (const ValidationError& e) {
        throw ConfigError("--method", e.what());
      }
    }();
    if (!std::filesystem::is_directory(opts.input)) throw IoError("input directory " + opts.input.string() + " not found");
    if (!is_suite(opts.input)) {
      omp_set_num_threads(opts.jobs);
      out << correct_one(method, opts.input, opts.out, opts.config, opts.previews).text;
      return kExitOk;
    }
    const auto ids = read_suite_index(opts.input);
    std::vector<CaseReport> reports(ids.size());
    const auto failure = for_cases(ids.size(), opts.jobs, [&](std::size_t i) {
      reports[i] = correct_one(method, opts.input / ids[i], opts.out / ids[i], opts.config, opts.previews);
    });
    for (const auto& r : reports) out << r.text;
    if (failure) {
      err << "error: " << failure->message << "\n";
      return failure->code;
    }
    std::string index;
    for (const auto& id : ids) index += id + "\n";
    write_text(opts.out / kSuiteIndex, index);
    return kExitOk;
  } catch (const std::exception& e) {
    const Failure f = classify(e);
    err << "error: " << f.message << "\n";
    return f.code;
  }
}

namespace {

struct Row {
  std::string case_id;
  std::size_t metal_size_px;
  std::string method;
  double psnr;
  double ssim;
};

}  // namespace

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.grouping != "pairwise" && opts.grouping != "none")
      throw ConfigError("--grouping", "expected pairwise or none, got '" + opts.grouping + "'");
    if (opts.results.empty() && !opts.include_input) throw ConfigError("--results", "no result directories given");

    const bool suite = is_suite(opts.gt);
    const std::vector<std::string> ids = suite ? read_suite_index(opts.gt) : std::vector<std::string>{""};
    auto case_dir = [&](const std::filesystem::path& root, const std::string& id) { return id.empty() ? root : root / id; };

    std::vector<std::string> missing;
    auto need = [&](const std::filesystem::path& p) {
      if (!std::filesystem::exists(p)) missing.push_back(p.string());
    };
    for (const auto& id : ids) {
      const auto g = case_dir(opts.gt, id);
      need(header_path(g / "x_gt"));
      need(raw_path(g / "x_gt"));
      need(header_path(g / "mask"));
      need(raw_path(g / "mask"));
      need(g / "meta.txt");
      if (opts.include_input) need(raw_path(g / "x_ma"));
      for (const auto& r : opts.results) {
        need(raw_path(case_dir(r, id) / "image"));
        need(header_path(case_dir(r, id) / "image"));
        need(case_dir(r, id) / "meta.txt");
      }
    }
    if (!missing.empty()) {
      err << "error: missing files:\n";
      for (const auto& m : missing) err << "  " << m << "\n";
      return kExitIo;
    }

    std::vector<Row> rows;
    std::vector<std::string> methods;
    if (opts.include_input) methods.push_back("input");
    for (const auto& id : ids) {
      const auto g = case_dir(opts.gt, id);
      const Image gt = read_image(g / "x_gt");
      const Image mask = read_image(g / "mask").with_unit(ImageUnit::Binary);
      const auto gmeta = read_meta(g / "meta.txt");
      const std::string cid = gmeta.count("case_id") ? gmeta.at("case_id") : id;
      const std::size_t size = count_nonzero(mask);
      auto score = [&](const Image& img, const std::string& method) {
        const Quality q = evaluate_hu(img.with_unit(ImageUnit::HU), gt, &mask);
        rows.push_back({cid, size, method, q.psnr, q.ssim});
      };
      if (opts.include_input) score(read_image(g / "x_ma"), "input");
      for (const auto& r : opts.results) {
        const auto meta = read_meta(case_dir(r, id) / "meta.txt");
        const std::string method = meta.count("method") ? meta.at("method") : r.filename().string();
        if (meta.count("case_id") && meta.at("case_id") != cid)
          throw IoError(case_dir(r, id).string() + " holds case " + meta.at("case_id") + ", expected " + cid);
        score(read_image(case_dir(r, id) / "image"), method);
        if (std::find(methods.begin(), methods.end(), method) == methods.end()) methods.push_back(method);
      }
    }
    std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
      if (a.metal_size_px != b.metal_size_px) return a.metal_size_px > b.metal_size_px;
      if (a.case_id != b.case_id) return a.case_id < b.case_id;
      return std::find(methods.begin(), methods.end(), a.method) < std::find(methods.begin(), methods.end(), b.method);
    });

    std::ostringstream csv;
    csv << "case_id,metal_size_px,method,psnr_db,ssim\n";
    for (const auto& r : rows)
      csv << r.case_id << ',' << r.metal_size_px << ',' << r.method << ',' << real(r.psnr) << ',' << real(r.ssim) << '\n';
    write_text(opts.out_csv, csv.str());

    std::ostringstream summary;
    summary << "method,group,metal_sizes_px,count,psnr_db,ssim\n";
    out << std::fixed;
    for (const auto& m : methods) {
      std::vector<CaseMetric> metrics;
      for (const auto& r : rows)
        if (r.method == m) metrics.push_back({r.metal_size_px, r.psnr, r.ssim});
      std::vector<std::size_t> sizes;
      for (const auto& cm : metrics) sizes.push_back(cm.metal_size_px);
      std::sort(sizes.begin(), sizes.end());
      const std::size_t distinct = static_cast<std::size_t>(std::unique(sizes.begin(), sizes.end()) - sizes.begin());
      const auto counts = opts.grouping == "pairwise" ? pairwise_groups(distinct) : std::vector<std::size_t>{distinct};
      const GroupTable t = group_report(metrics, counts);
      auto emit = [&](const std::string& label, const GroupRow& g) {
        std::string sz;
        for (std::size_t s : g.sizes) sz += (sz.empty() ? "" : " ") + std::to_string(s);
        summary << m << ',' << label << ',' << sz << ',' << g.count << ',' << real(g.psnr) << ',' << real(g.ssim)
                << '\n';
        out << std::setw(14) << std::left << m << std::setw(9) << label << std::right << std::setprecision(2)
            << std::setw(8) << g.psnr << " dB  " << std::setprecision(4) << g.ssim << "\n";
      };
      for (std::size_t g = 0; g < t.groups.size(); ++g) emit("group" + std::to_string(g + 1), t.groups[g]);
      emit("average", t.overall);
    }
    auto summary_path = opts.out_csv;
    summary_path.replace_extension(".summary.csv");
    write_text(summary_path, summary.str());
    return kExitOk;
  } catch (const std::exception& e) {
    const Failure f = classify(e);
    err << "error: " << f.message << "\n";
    return f.code;
  }
}

}  // namespace mar
