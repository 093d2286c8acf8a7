#include <doctest.h>

#include "../oracles.hpp"
#include "mar/prox.hpp"

using namespace mar;
using D = ProxOperator::Domain;

TEST_SUITE("prox") {

TEST_CASE("identity and zero-strength soft threshold are exact") {
  const Image x = oracle::random_image(ImageGrid(13, 9), 4);
  CHECK(prox_apply(ProxOperator::identity(D::Image), x) == x);
  CHECK(prox_apply(ProxOperator::soft_threshold(D::Image, 0.0), x) == x);
  const Sinogram s = oracle::random_sinogram(SinogramGrid(7, 5, 1.0), 5);
  CHECK(prox_apply(ProxOperator::identity(D::Sinogram), s) == s);
}

TEST_CASE("soft threshold shrinks towards the median") {
  const Image x(ImageGrid(1, 5), ImageUnit::Attenuation, std::vector<double>{0, 1, 2, 3, 10});
  const Image y = prox_apply(ProxOperator::soft_threshold(D::Image, 1.5), x);
  const std::vector<double> want{1.5, 2, 2, 2, 8.5};
  for (std::size_t i = 0; i < 5; ++i) CHECK(y[i] == want[i]);
}

TEST_CASE("TV denoising does not increase total variation") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image x = oracle::random_image(ImageGrid(24, 17), seed);
    const double before = total_variation(x.values(), 24, 17);
    for (double lam : {0.01, 0.1, 1.0}) {
      const Image y = prox_apply(ProxOperator::tv(D::Image, lam), x);
      CHECK(total_variation(y.values(), 24, 17) <= before);
    }
  }
}

TEST_CASE("TV keeps constants and leaves unsupported entries alone") {
  const Image c(ImageGrid(6, 6), ImageUnit::Attenuation, 0.25);
  const Image y = prox_apply(ProxOperator::tv(D::Image, 0.5), c);
  CHECK(oracle::max_abs_diff(y.values(), c.values()) <= 1e-12);

  Sinogram s = oracle::random_sinogram(SinogramGrid(6, 5, 1.0), 8);
  std::vector<std::uint8_t> sup(s.size(), 1);
  sup[0] = 0;
  sup[7] = 0;
  s[7] = 1e6;
  const Sinogram out = prox_apply(ProxOperator::tv(D::Sinogram, 0.2), s, sup);
  CHECK(out[0] == s[0]);
  CHECK(out[7] == 1e6);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (sup[i]) CHECK(std::abs(out[i]) < 2.0);
}

TEST_CASE("box clamp") {
  const Image x(ImageGrid(1, 4), ImageUnit::Attenuation, std::vector<double>{-1, 0.2, 0.7, 3});
  const Image y = prox_apply(ProxOperator::box(D::Image, 0.0, 0.5), x);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.2);
  CHECK(y[2] == 0.5);
  CHECK(y[3] == 0.5);
}

TEST_CASE("spec strings") {
  CHECK(ProxOperator::parse("identity", D::Image).kind == ProxOperator::Kind::Identity);
  const auto tv = ProxOperator::parse("tv:0.0005:30", D::Image);
  CHECK(tv.kind == ProxOperator::Kind::TVDenoise);
  CHECK(tv.strength == 0.0005);
  CHECK(tv.inner_iters == 30);
  CHECK(tv.to_spec() == "tv:0.0005:30");
  CHECK(ProxOperator::parse("soft:2.5", D::Sinogram).to_spec() == "soft:2.5");
  CHECK(ProxOperator::parse("clamp:0:1", D::Image).to_spec() == "clamp:0:1");
  CHECK_THROWS_AS(ProxOperator::parse("median:3", D::Image), ValidationError);
  CHECK_THROWS_AS(ProxOperator::parse("tv:abc", D::Image), ValidationError);
  CHECK_THROWS_AS(ProxOperator::parse("soft:-1", D::Image), ValidationError);
  CHECK_THROWS_AS(ProxOperator::parse("clamp:2:1", D::Image), ValidationError);
}

TEST_CASE("domain mismatch is rejected") {
  CHECK_THROWS_AS(prox_apply(ProxOperator::identity(D::Sinogram), Image(ImageGrid(2, 2), ImageUnit::Attenuation)),
                  ValidationError);
}

}
