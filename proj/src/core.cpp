#include "mar/core.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numbers>

namespace mar {

ImageGrid::ImageGrid(std::size_t h, std::size_t w, double px) : height(h), width(w), pixel_size(px) {
  if (h < 1 || w < 1) throw ValidationError("image grid must be at least 1x1");
  if (!(px > 0.0) || !std::isfinite(px)) throw ValidationError("pixel_size must be positive");
}

SinogramGrid::SinogramGrid(std::size_t bins, std::size_t views, double spacing)
    : n_bins(bins), n_views(views), bin_spacing(spacing) {
  if (bins < 1 || views < 1) throw ValidationError("sinogram grid needs at least one bin and one view");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ValidationError("bin_spacing must be positive");
}

double SinogramGrid::view_angle(std::size_t v) const noexcept {
  return 2.0 * std::numbers::pi * static_cast<double>(v) / static_cast<double>(n_views);
}

std::vector<double> SinogramGrid::view_angles() const {
  std::vector<double> out(n_views);
  for (std::size_t v = 0; v < n_views; ++v) out[v] = view_angle(v);
  return out;
}

std::string_view to_string(ImageUnit u) {
  switch (u) {
    case ImageUnit::HU: return "HU";
    case ImageUnit::Attenuation: return "Attenuation";
    case ImageUnit::Binary: return "Binary";
    case ImageUnit::Weight: return "Weight";
  }
  return "?";
}

std::string_view to_string(SinogramKind k) {
  switch (k) {
    case SinogramKind::Raw: return "Raw";
    case SinogramKind::Normalized: return "Normalized";
    case SinogramKind::Trace: return "Trace";
  }
  return "?";
}

ImageUnit parse_image_unit(std::string_view s) {
  if (s == "HU") return ImageUnit::HU;
  if (s == "Attenuation") return ImageUnit::Attenuation;
  if (s == "Binary") return ImageUnit::Binary;
  if (s == "Weight") return ImageUnit::Weight;
  throw ValidationError("unknown image unit '" + std::string(s) + "'");
}

SinogramKind parse_sinogram_kind(std::string_view s) {
  if (s == "Raw") return SinogramKind::Raw;
  if (s == "Normalized") return SinogramKind::Normalized;
  if (s == "Trace") return SinogramKind::Trace;
  throw ValidationError("unknown sinogram kind '" + std::string(s) + "'");
}

namespace {

void require_finite(std::span<const double> v, std::string_view what) {
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + " contains a non-finite value");
}

void require_binary(std::span<const double> v, std::string_view what) {
  for (double x : v)
    if (x != 0.0 && x != 1.0) throw ValidationError(std::string(what) + " must contain only 0 and 1");
}

}  // namespace

Image::Image(ImageGrid grid, ImageUnit unit, double fill) : grid_(grid), unit_(unit), values_(grid.size(), fill) {}

Image::Image(ImageGrid grid, ImageUnit unit, std::vector<double> values)
    : grid_(grid), unit_(unit), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ShapeError("image values length " + std::to_string(values_.size()) + " does not match grid " +
                     std::to_string(grid_.height) + "x" + std::to_string(grid_.width));
}

Image Image::with_unit(ImageUnit unit) const {
  Image out = *this;
  out.unit_ = unit;
  out.validate();
  return out;
}

void Image::validate(double weight_max) const {
  if (values_.size() != grid_.size()) throw ShapeError("image values length does not match grid");
  require_finite(values_, "image");
  if (unit_ == ImageUnit::Binary) require_binary(values_, "binary image");
  if (unit_ == ImageUnit::Weight) {
    for (double x : values_)
      if (x < 0.0 || x > weight_max)
        throw ValidationError("weight image value " + std::to_string(x) + " outside [0, " +
                              std::to_string(weight_max) + "]");
  }
}

Sinogram::Sinogram(SinogramGrid grid, SinogramKind kind, double fill)
    : grid_(grid), kind_(kind), values_(grid.size(), fill) {}

Sinogram::Sinogram(SinogramGrid grid, SinogramKind kind, std::vector<double> values)
    : grid_(grid), kind_(kind), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw ShapeError("sinogram values length " + std::to_string(values_.size()) + " does not match grid " +
                     std::to_string(grid_.n_bins) + "x" + std::to_string(grid_.n_views));
}

Sinogram Sinogram::with_kind(SinogramKind kind) const {
  Sinogram out = *this;
  out.kind_ = kind;
  out.validate();
  return out;
}

void Sinogram::validate() const {
  if (values_.size() != grid_.size()) throw ShapeError("sinogram values length does not match grid");
  require_finite(values_, "sinogram");
  if (kind_ == SinogramKind::Trace) require_binary(values_, "trace sinogram");
}

void require_same_grid(const Image& a, const Image& b, std::string_view what) {
  if (!(a.grid() == b.grid()))
    throw ShapeError(std::string(what) + ": image grids differ (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
}

void require_same_grid(const Sinogram& a, const Sinogram& b, std::string_view what) {
  if (!(a.grid() == b.grid()))
    throw ShapeError(std::string(what) + ": sinogram grids differ (" + std::to_string(a.n_bins()) + "x" +
                     std::to_string(a.n_views()) + " vs " + std::to_string(b.n_bins()) + "x" +
                     std::to_string(b.n_views()) + ")");
}

namespace {

double apply(double a, double b, PointwiseOp op) noexcept {
  switch (op) {
    case PointwiseOp::Mul: return a * b;
    case PointwiseOp::Sub: return a - b;
    case PointwiseOp::Add: return a + b;
    case PointwiseOp::SafeDiv: return std::abs(b) < kSafeDivEps ? 0.0 : a / b;
  }
  return 0.0;
}

template <class Field>
void apply_all(Field& out, const Field& b, PointwiseOp op) {
  auto dst = out.values();
  auto rhs = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = apply(dst[i], rhs[i], op);
}

}  // namespace

Image pointwise(const Image& a, const Image& b, PointwiseOp op) {
  require_same_grid(a, b, "pointwise");
  Image out = a;
  apply_all(out, b, op);
  if (op != PointwiseOp::Mul && out.unit() == ImageUnit::Binary) return out.with_unit(ImageUnit::Attenuation);
  return out;
}

Sinogram pointwise(const Sinogram& a, const Sinogram& b, PointwiseOp op) {
  require_same_grid(a, b, "pointwise");
  Sinogram out = a;
  apply_all(out, b, op);
  if (op != PointwiseOp::Mul && out.kind() == SinogramKind::Trace) return out.with_kind(SinogramKind::Raw);
  return out;
}

double hu_to_mu(double hu, double mu_water) noexcept { return std::max(0.0, mu_water * (1.0 + hu / 1000.0)); }

double mu_to_hu(double mu, double mu_water) noexcept { return 1000.0 * (mu / mu_water - 1.0); }

Image hu_to_mu(const Image& hu, double mu_water) {
  if (hu.unit() != ImageUnit::HU) throw ValidationError("hu_to_mu expects an HU image");
  if (!(mu_water > 0.0)) throw ValidationError("mu_water must be positive");
  require_finite(hu.values(), "hu_to_mu input");
  Image out(hu.grid(), ImageUnit::Attenuation);
  for (std::size_t i = 0; i < hu.size(); ++i) out[i] = hu_to_mu(hu[i], mu_water);
  return out;
}

Image mu_to_hu(const Image& mu, double mu_water) {
  if (mu.unit() != ImageUnit::Attenuation) throw ValidationError("mu_to_hu expects an attenuation image");
  if (!(mu_water > 0.0)) throw ValidationError("mu_water must be positive");
  require_finite(mu.values(), "mu_to_hu input");
  Image out(mu.grid(), ImageUnit::HU);
  for (std::size_t i = 0; i < mu.size(); ++i) out[i] = mu_to_hu(mu[i], mu_water);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm2(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

namespace {

struct SinkState {
  std::mutex mutex;
  WarningSink sink = [](std::string_view m) { std::cerr << "warning: " << m << '\n'; };
};

SinkState& sink_state() {
  static SinkState state;
  return state;
}

}  // namespace

void warn(std::string_view message) {
  auto& st = sink_state();
  std::lock_guard lock(st.mutex);
  if (st.sink) st.sink(message);
}

WarningSink set_warning_sink(WarningSink sink) {
  auto& st = sink_state();
  std::lock_guard lock(st.mutex);
  std::swap(st.sink, sink);
  return sink;
}

}  // namespace mar
