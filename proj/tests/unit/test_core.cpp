#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mar/core.hpp"

using namespace mar;

TEST_SUITE("core") {

TEST_CASE("grids reject empty or non-positive shapes") {
  CHECK_THROWS_AS(ImageGrid(0, 4, 1.0), ValidationError);
  CHECK_THROWS_AS(ImageGrid(4, 0, 1.0), ValidationError);
  CHECK_THROWS_AS(ImageGrid(4, 4, 0.0), ValidationError);
  CHECK_THROWS_AS(SinogramGrid(0, 4, 1.0), ValidationError);
  CHECK_THROWS_AS(SinogramGrid(4, 0, 1.0), ValidationError);
}

TEST_CASE("view angles are uniform over a full turn") {
  const SinogramGrid g(5, 8, 1.0);
  const auto a = g.view_angles();
  REQUIRE(a.size() == 8);
  CHECK(a[0] == 0.0);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] - a[i - 1] == doctest::Approx(2.0 * M_PI / 8).epsilon(1e-14));
  CHECK(a.back() < 2.0 * M_PI);
}

TEST_CASE("hu/mu conversion") {
  CHECK(hu_to_mu(0.0) == doctest::Approx(0.192));
  CHECK(hu_to_mu(-1000.0) == 0.0);
  CHECK(hu_to_mu(1000.0, 0.192) == doctest::Approx(0.384).epsilon(1e-15));
  CHECK(hu_to_mu(-1500.0) == 0.0);  // clamped
  CHECK(mu_to_hu(0.192, 0.192) == doctest::Approx(0.0));
  CHECK(mu_to_hu(0.0) == -1000.0);

  const ImageGrid g(3, 4);
  Image hu(g, ImageUnit::HU);
  for (std::size_t i = 0; i < hu.size(); ++i) hu[i] = -1000.0 + 377.7 * static_cast<double>(i);
  const Image back = mu_to_hu(hu_to_mu(hu));
  CHECK(back.unit() == ImageUnit::HU);
  for (std::size_t i = 0; i < hu.size(); ++i)
    CHECK(std::abs(back[i] - hu[i]) <= 1e-12 * std::max(1.0, std::abs(hu[i])));
}

TEST_CASE("unit checks") {
  const ImageGrid g(2, 2);
  CHECK_THROWS_AS(hu_to_mu(Image(g, ImageUnit::Attenuation)), ValidationError);
  CHECK_THROWS_AS(mu_to_hu(Image(g, ImageUnit::HU)), ValidationError);
  Image bad(g, ImageUnit::HU);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(hu_to_mu(bad), ValidationError);
  CHECK_THROWS_AS(Image(g, ImageUnit::Binary, std::vector<double>{0, 1, 0.5, 1}).validate(), ValidationError);
  CHECK_THROWS_AS(Image(g, ImageUnit::Weight, std::vector<double>{0, 1, 2.5, 1}).validate(), ValidationError);
  CHECK_NOTHROW(Image(g, ImageUnit::Weight, std::vector<double>{0, 1, 2.0, 1}).validate());
  CHECK_THROWS_AS(Image(g, ImageUnit::Weight, std::vector<double>{0, 1, 2.0, 1}).validate(1.5), ValidationError);
  CHECK_THROWS_AS(Image(g, ImageUnit::HU, std::vector<double>{0, 1, 2}), ShapeError);
  CHECK_THROWS_AS(Sinogram(SinogramGrid(2, 2, 1.0), SinogramKind::Trace, std::vector<double>{0, 1, 2, 0}).validate(),
                  ValidationError);
}

TEST_CASE("pointwise operations") {
  const ImageGrid g(2, 3);
  const Image x(g, ImageUnit::Attenuation, std::vector<double>{1, -2, 3, 4.5, 0, 7});
  const Image ones(g, ImageUnit::Attenuation, 1.0);
  CHECK(pointwise(x, ones, PointwiseOp::Mul) == x);
  const Image z = pointwise(x, x, PointwiseOp::Sub);
  for (double v : z.values()) CHECK(v == 0.0);

  const SinogramGrid sg(2, 2, 1.0);
  const Sinogram y(sg, SinogramKind::Raw, std::vector<double>{1, 2, 3, 4});
  const Sinogram yt(sg, SinogramKind::Raw, std::vector<double>{2, 0, 1e-9, 4});
  const Sinogram q = pointwise(y, yt, PointwiseOp::SafeDiv);
  CHECK(q[0] == 0.5);
  CHECK(q[1] == 0.0);
  CHECK(q[2] == 0.0);
  CHECK(q[3] == 1.0);

  CHECK_THROWS_AS(pointwise(x, Image(ImageGrid(3, 2), ImageUnit::Attenuation), PointwiseOp::Add), ShapeError);
}

TEST_CASE("safe_div times divisor recovers the numerator") {
  const SinogramGrid sg(7, 5, 1.0);
  Sinogram a(sg, SinogramKind::Raw), b(sg, SinogramKind::Raw);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::sin(1.3 * static_cast<double>(i)) * 10.0;
    b[i] = (i % 4 == 0) ? 0.0 : std::cos(0.7 * static_cast<double>(i)) + 1.5;
  }
  const Sinogram back = pointwise(pointwise(a, b, PointwiseOp::SafeDiv), b, PointwiseOp::Mul);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(b[i]) >= kSafeDivEps) CHECK(std::abs(back[i] - a[i]) <= 1e-12 * std::max(1.0, std::abs(a[i])));
}

TEST_CASE("binary fields stay binary under multiplication") {
  const ImageGrid g(2, 2);
  const Image a(g, ImageUnit::Binary, std::vector<double>{0, 1, 1, 0});
  const Image b(g, ImageUnit::Binary, std::vector<double>{1, 1, 0, 0});
  const Image m = pointwise(a, b, PointwiseOp::Mul);
  CHECK(m.unit() == ImageUnit::Binary);
  CHECK(m[1] == 1.0);
  CHECK(pointwise(a, b, PointwiseOp::Add).unit() == ImageUnit::Attenuation);
}

TEST_CASE("warning sink receives messages") {
  std::vector<std::string> got;
  set_warning_sink([&](std::string_view m) { got.emplace_back(m); });
  warn("hello");
  set_warning_sink([](std::string_view) {});
  REQUIRE(got.size() == 1);
  CHECK(got[0] == "hello");
}

}
