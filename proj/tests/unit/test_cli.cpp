#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "../oracles.hpp"
#include "mar/commands.hpp"
#include "mar/config.hpp"
#include "mar/io.hpp"

using namespace mar;
namespace fs = std::filesystem;

namespace {

constexpr const char* kSmall =
    "[geometry]\nheight = 32\nwidth = 32\npixel_size = 0.6\nn_bins = 47\nn_views = 40\n"
    "[run]\nseed = 3\n";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int simulate(const fs::path& cfg, const fs::path& out, std::string* err_text = nullptr) {
  std::ostringstream o, e;
  const int rc = cmd_simulate({cfg, out, false, false, 1}, o, e);
  if (err_text) *err_text = e.str();
  return rc;
}

int correct(const std::string& m, const fs::path& in, const fs::path& out, const fs::path& cfg = {}) {
  std::ostringstream o, e;
  return cmd_correct({m, in, cfg, out, false, 1}, o, e);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing") {
  SUBCASE("unknown keys name the key") {
    try {
      parse_config("[solver]\nalpah = 1\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "solver.alpah");
    }
    CHECK_THROWS_AS(parse_config("[nonsense]\nx = 1\n"), ConfigError);
  }
  SUBCASE("bad values name the key") {
    try {
      parse_config("[geometry]\nheight = -3\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "geometry.height");
    }
  }
  SUBCASE("dump and parse round-trip") {
    Config c = parse_config(
        "[solver]\nalpha = 0.3\nprox_x = tv:0.001:20\n[metal]\ndiscs = 0.1,0.2,0.05\n[fbp]\nwindow = hann\n");
    CHECK(c.solver.alpha == 0.3);
    CHECK(c.solver.prox_x.strength == 0.001);
    CHECK(c.filter.window == RampFilter::Window::Hann);
    const std::string d = dump_config(c);
    CHECK(dump_config(parse_config(d)) == d);
    CHECK(dump_config(Config{}) == dump_config(parse_config("")));
  }
  SUBCASE("disc lists") {
    const auto discs = parse_discs("0.1,0.2,0.3; -0.1,0,0.05", false, "metal.discs");
    REQUIRE(discs.size() == 2);
    CHECK(discs[1].cx == -0.1);
    CHECK_THROWS_AS(parse_discs("0.1,0.2", false, "metal.discs"), ConfigError);
  }
}

TEST_CASE("simulate and correct") {
  TempDir tmp("mar_unit_cli");
  write_text(tmp.path / "small.ini", kSmall);
  write_text(tmp.path / "metal.ini", std::string(kSmall) + "[metal]\ndiscs = 0.3,0.1,0.12\n[solver]\nn_stages = 10\n");

  SUBCASE("missing mask file") {
    write_text(tmp.path / "bad.ini", std::string(kSmall) + "[metal]\nmask = /no/such/mask.png\n");
    std::string err;
    CHECK(simulate(tmp.path / "bad.ini", tmp.path / "bad", &err) == kExitIo);
    CHECK(err.find("/no/such/mask.png") != std::string::npos);
  }
  SUBCASE("no metal") {
    REQUIRE(simulate(tmp.path / "small.ini", tmp.path / "sim") == kExitOk);
    for (const char* f : {"x_gt.raw", "x_ma.raw", "y.raw", "y_gt.raw", "mask.raw", "trace.raw", "meta.txt"})
      CHECK(fs::exists(tmp.path / "sim" / f));
    CHECK(read_meta(tmp.path / "sim" / "meta.txt").at("metal_size_px") == "0");

    REQUIRE(correct("li", tmp.path / "sim", tmp.path / "li") == kExitOk);
    CHECK(read_sinogram(tmp.path / "li" / "sino").values().size() == read_sinogram(tmp.path / "sim" / "y").size());
    CHECK(read_sinogram(tmp.path / "li" / "sino") == read_sinogram(tmp.path / "sim" / "y"));
  }
  SUBCASE("no metal, linear simulator: the input image is the clean reconstruction") {
    write_text(tmp.path / "mono.ini", std::string(kSmall) + "[spectrum]\nmode = mono\nphoton_count = 0\n");
    REQUIRE(simulate(tmp.path / "mono.ini", tmp.path / "sim") == kExitOk);
    const Config c = load_config(tmp.path / "mono.ini");
    const auto geom = c.geometry.build();
    const Image gt = read_image(tmp.path / "sim" / "x_gt");
    const Image ma = read_image(tmp.path / "sim" / "x_ma");
    const Image ref = mu_to_hu(fbp(forward_project(hu_to_mu(gt), geom), geom, c.filter));
    CHECK(oracle::max_abs_diff(ma.values(), ref.values()) <= 1e-3);
    const Sinogram y = read_sinogram(tmp.path / "sim" / "y"), y_gt = read_sinogram(tmp.path / "sim" / "y_gt");
    CHECK(oracle::max_abs_diff(y.values(), y_gt.values()) <= 1e-5);
  }
  SUBCASE("repeated runs are identical") {
    REQUIRE(simulate(tmp.path / "metal.ini", tmp.path / "a") == kExitOk);
    REQUIRE(simulate(tmp.path / "metal.ini", tmp.path / "b") == kExitOk);
    for (const char* f : {"y.raw", "x_ma.raw", "trace.raw", "meta.txt", "config.ini"})
      CHECK(read_text(tmp.path / "a" / f) == read_text(tmp.path / "b" / f));
  }
  SUBCASE("dual writes every stage; eval reports rows and a summary") {
    REQUIRE(simulate(tmp.path / "metal.ini", tmp.path / "sim") == kExitOk);
    REQUIRE(correct("dual", tmp.path / "sim", tmp.path / "dual") == kExitOk);
    std::size_t stages = 0;
    for (const auto& ent : fs::directory_iterator(tmp.path / "dual" / "stages"))
      stages += ent.path().extension() == ".hdr" && ent.path().filename().string().find("_x.") != std::string::npos;
    CHECK(stages == 11);

    REQUIRE(correct("nmar", tmp.path / "sim", tmp.path / "nmar") == kExitOk);
    std::ostringstream o, e;
    REQUIRE(cmd_eval({tmp.path / "sim", {tmp.path / "nmar", tmp.path / "dual"}, tmp.path / "r.csv", "pairwise", false},
                     o, e) == kExitOk);
    std::istringstream csv(read_text(tmp.path / "r.csv"));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(csv, line))
      if (!line.empty()) lines.push_back(line);
    CHECK(lines.size() == 3);
    CHECK(fs::exists(tmp.path / "r.summary.csv"));
  }
  SUBCASE("degraded run equals dual with a unit coefficient file") {
    REQUIRE(simulate(tmp.path / "metal.ini", tmp.path / "sim") == kExitOk);
    const Sinogram y = read_sinogram(tmp.path / "sim" / "y");
    write_sinogram(tmp.path / "ones", Sinogram(y.grid(), SinogramKind::Raw, 1.0));
    Config c = load_config(tmp.path / "sim" / "config.ini");
    c.prior_ytilde = (tmp.path / "ones").string();
    write_text(tmp.path / "ones.ini", dump_config(c));
    REQUIRE(correct("dual", tmp.path / "sim", tmp.path / "d1", tmp.path / "ones.ini") == kExitOk);
    REQUIRE(correct("dual-degraded", tmp.path / "sim", tmp.path / "d2") == kExitOk);
    const Image a = read_image(tmp.path / "d1" / "image");
    const Image b = read_image(tmp.path / "d2" / "image");
    // Stored as float32: compare at single precision.
    CHECK(oracle::max_abs_diff(a.values(), b.values()) <= 1e-3);
    const Sinogram sa = read_sinogram(tmp.path / "d1" / "sino"), sb = read_sinogram(tmp.path / "d2" / "sino");
    CHECK(oracle::max_abs_diff(sa.values(), sb.values()) <= 1e-5);
  }
  SUBCASE("ground truth scored against itself") {
    REQUIRE(simulate(tmp.path / "metal.ini", tmp.path / "sim") == kExitOk);
    fs::create_directories(tmp.path / "self");
    fs::copy_file(tmp.path / "sim" / "x_gt.raw", tmp.path / "self" / "image.raw");
    fs::copy_file(tmp.path / "sim" / "x_gt.hdr", tmp.path / "self" / "image.hdr");
    write_text(tmp.path / "self" / "meta.txt", "method = gt\n" + read_text(tmp.path / "sim" / "meta.txt"));
    std::ostringstream o, e;
    REQUIRE(cmd_eval({tmp.path / "sim", {tmp.path / "self"}, tmp.path / "s.csv", "none", false}, o, e) == kExitOk);
    const std::string csv = read_text(tmp.path / "s.csv");
    CHECK(csv.find(",99,1\n") != std::string::npos);
  }
  SUBCASE("missing result files are listed") {
    REQUIRE(simulate(tmp.path / "metal.ini", tmp.path / "sim") == kExitOk);
    fs::create_directories(tmp.path / "empty");
    std::ostringstream o, e;
    CHECK(cmd_eval({tmp.path / "sim", {tmp.path / "empty"}, tmp.path / "x.csv", "none", false}, o, e) == kExitIo);
    CHECK(e.str().find("image") != std::string::npos);
  }
  SUBCASE("unknown method") {
    REQUIRE(simulate(tmp.path / "small.ini", tmp.path / "sim") == kExitOk);
    CHECK(correct("median", tmp.path / "sim", tmp.path / "m") != kExitOk);
  }
}

}
