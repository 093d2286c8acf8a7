#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "mar/baselines.hpp"
#include "mar/prior.hpp"
#include "mar/simulate.hpp"

using namespace mar;

TEST_SUITE("baselines") {

TEST_CASE("no trace leaves the sinogram untouched") {
  const SinogramGrid g(11, 6, 1.0);
  const Sinogram y = oracle::random_sinogram(g, 9);
  CHECK(interpolate_trace(y, Sinogram(g, SinogramKind::Trace)) == y);
}

TEST_CASE("interior gap is filled linearly") {
  const SinogramGrid g(9, 1, 1.0);
  Sinogram y(g, SinogramKind::Raw, 99.0);
  y(2, 0) = 10.0;
  y(6, 0) = 20.0;
  Sinogram t(g, SinogramKind::Trace);
  for (std::size_t b = 3; b <= 5; ++b) t(b, 0) = 1.0;
  const Sinogram f = interpolate_trace(y, t);
  CHECK(f(3, 0) == 12.5);
  CHECK(f(4, 0) == 15.0);
  CHECK(f(5, 0) == 17.5);
  CHECK(f(2, 0) == 10.0);
  CHECK(f(6, 0) == 20.0);
}

TEST_CASE("edge runs take the nearest untraced value") {
  const SinogramGrid g(6, 1, 1.0);
  Sinogram y(g, SinogramKind::Raw, 3.0);
  y(1, 0) = 7.0;
  y(4, 0) = 5.0;
  Sinogram t(g, SinogramKind::Trace);
  t(0, 0) = 1.0;
  t(5, 0) = 1.0;
  const Sinogram f = interpolate_trace(y, t);
  CHECK(f(0, 0) == 7.0);
  CHECK(f(5, 0) == 5.0);
}

TEST_CASE("fully traced view uses its mean and warns") {
  const SinogramGrid g(4, 2, 1.0);
  Sinogram y(g, SinogramKind::Raw, std::vector<double>{1, 0, 2, 0, 3, 0, 6, 0});
  Sinogram t(g, SinogramKind::Trace);
  for (std::size_t b = 0; b < 4; ++b) t(b, 0) = 1.0;
  int warnings = 0;
  auto old = set_warning_sink([&](std::string_view) { ++warnings; });
  const Sinogram f = interpolate_trace(y, t);
  set_warning_sink(old);
  CHECK(warnings == 1);
  for (std::size_t b = 0; b < 4; ++b) CHECK(f(b, 0) == 3.0);
}

TEST_CASE("dilation") {
  const SinogramGrid g(7, 2, 1.0);
  Sinogram t(g, SinogramKind::Trace);
  t(3, 0) = 1.0;
  t(0, 1) = 1.0;
  const Sinogram d = dilate_trace(t, 1);
  for (std::size_t b = 0; b < 7; ++b) CHECK(d(b, 0) == (b >= 2 && b <= 4 ? 1.0 : 0.0));
  CHECK(d(0, 1) == 1.0);
  CHECK(d(1, 1) == 1.0);
  CHECK(d(2, 1) == 0.0);
  CHECK(dilate_trace(t, 0) == t);
}

namespace {

struct Scene {
  ImageGrid ig{48, 48, 0.5};
  ProjectionGeometry geom = ProjectionGeometry::covering(ig, 69, 60);
  Image clean;
  Image mask;
  Sinogram trace;
  Sinogram y;
  Sinogram y_gt;

  Scene() {
    clean = make_phantom(PhantomParams{PhantomKind::Discs, bundled_disc_phantom()}, ig);
    mask = disc_mask(ig, {{0.3, -0.1, 0.08, 0.0}});
    trace = compute_metal_trace({mask, 3000.0}, geom);
    SimulationOptions o;
    o.seed = 5;
    const auto r = simulate_artifacts(clean, {mask, 3000.0}, SpectrumConfig::polychromatic(1e5), geom, o);
    y = r.y;
    y_gt = r.y_gt;
  }
};

}  // namespace

TEST_CASE("data outside the trace is preserved") {
  const Scene s;
  const auto li = li_correct(s.y, s.trace, s.geom);
  const auto nm = nmar_correct(s.y, s.trace, li.x_li, s.geom, {}, &s.mask);
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    if (s.trace[i] != 0.0) continue;
    CHECK(li.y_li[i] == s.y[i]);
    if (nm.y_tilde[i] > kSafeDivEps) CHECK(std::abs(nm.y_nmar[i] - s.y[i]) <= 1e-9);
  }
}

TEST_CASE("NMAR without trace returns the input") {
  const Scene s;
  const Sinogram none(s.y.grid(), SinogramKind::Trace);
  const auto li = li_correct(s.y, none, s.geom);
  const auto nm = nmar_correct(s.y, none, li.x_li, s.geom);
  for (std::size_t i = 0; i < s.y.size(); ++i)
    if (nm.y_tilde[i] > kSafeDivEps) CHECK(std::abs(nm.y_nmar[i] - s.y[i]) <= 1e-9 * std::max(1.0, std::abs(s.y[i])));
}

TEST_CASE("NMAR with a constant coefficient is LI") {
  const Scene s;
  const Sinogram yt(s.y.grid(), SinogramKind::Raw, 2.75);
  const Sinogram a = nmar_fill(s.y, s.trace, yt);
  const Sinogram b = interpolate_trace(s.y, s.trace);
  CHECK(oracle::max_abs_diff(a.values(), b.values()) <= 1e-12 * oracle::max_abs(b.values()));
}

TEST_CASE("NMAR with the exact prior recovers the clean sinogram in the trace") {
  const Scene s;
  const Sinogram yt = normalization_coefficient(s.clean, s.geom);
  const Sinogram f = nmar_fill(s.y_gt, s.trace, yt);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (s.trace[i] != 0.0 && s.y_gt[i] > 1e-6) worst = std::max(worst, std::abs(f[i] - s.y_gt[i]) / s.y_gt[i]);
  CHECK(worst <= 0.01);
}

TEST_CASE("grid mismatches are rejected") {
  const SinogramGrid g(5, 4, 1.0);
  CHECK_THROWS_AS(interpolate_trace(Sinogram(g, SinogramKind::Raw), Sinogram(SinogramGrid(4, 5, 1.0), SinogramKind::Trace)),
                  ShapeError);
}

}
