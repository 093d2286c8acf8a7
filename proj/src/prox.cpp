#include "mar/prox.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

namespace mar {

ProxOperator ProxOperator::identity(Domain d) {
  ProxOperator p;
  p.domain = d;
  return p;
}

ProxOperator ProxOperator::soft_threshold(Domain d, double strength) {
  ProxOperator p;
  p.kind = Kind::SoftThreshold;
  p.domain = d;
  p.strength = strength;
  p.validate();
  return p;
}

ProxOperator ProxOperator::tv(Domain d, double strength, int inner_iters) {
  ProxOperator p;
  p.kind = Kind::TVDenoise;
  p.domain = d;
  p.strength = strength;
  p.inner_iters = inner_iters;
  p.validate();
  return p;
}

ProxOperator ProxOperator::box(Domain d, double lo, double hi) {
  ProxOperator p;
  p.kind = Kind::BoxClamp;
  p.domain = d;
  p.lo = lo;
  p.hi = hi;
  p.validate();
  return p;
}

void ProxOperator::validate() const {
  if (!(strength >= 0.0) || !std::isfinite(strength)) throw ValidationError("prox strength must be finite and >= 0");
  if (inner_iters < 1) throw ValidationError("prox inner_iters must be >= 1");
  if (kind == Kind::BoxClamp && !(lo < hi)) throw ValidationError("box clamp needs lo < hi");
}

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double to_double(const std::string& s, std::string_view spec) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError("bad number '" + s + "' in prox spec '" + std::string(spec) + "'");
  }
}

}  // namespace

ProxOperator ProxOperator::parse(std::string_view spec, Domain d) {
  const auto parts = split(spec, ':');
  const std::string& name = parts[0];
  if (name == "identity" && parts.size() == 1) return identity(d);
  if (name == "soft" && parts.size() == 2) return soft_threshold(d, to_double(parts[1], spec));
  if (name == "tv" && (parts.size() == 2 || parts.size() == 3))
    return tv(d, to_double(parts[1], spec), parts.size() == 3 ? static_cast<int>(to_double(parts[2], spec)) : 50);
  if (name == "clamp" && parts.size() == 3) return box(d, to_double(parts[1], spec), to_double(parts[2], spec));
  throw ValidationError("unknown prox spec '" + std::string(spec) + "'");
}

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string ProxOperator::to_spec() const {
  switch (kind) {
    case Kind::Identity: return "identity";
    case Kind::SoftThreshold: return "soft:" + shortest(strength);
    case Kind::TVDenoise: return "tv:" + shortest(strength) + ":" + std::to_string(inner_iters);
    case Kind::BoxClamp: return "clamp:" + shortest(lo) + ":" + shortest(hi);
  }
  return {};
}

namespace {

bool in_support(std::span<const std::uint8_t> support, std::size_t i) { return support.empty() || support[i] != 0; }

// Forward-difference gradient restricted to edges with both ends in the support.
struct EdgeMask {
  std::vector<std::uint8_t> right, down;

  EdgeMask(std::size_t rows, std::size_t cols, std::span<const std::uint8_t> support)
      : right(rows * cols, 0), down(rows * cols, 0) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        if (!in_support(support, i)) continue;
        if (c + 1 < cols && in_support(support, i + 1)) right[i] = 1;
        if (r + 1 < rows && in_support(support, i + cols)) down[i] = 1;
      }
  }
};

// Chambolle's dual projection iteration for min_u 0.5 ||u - f||^2 + lambda TV(u).
void tv_denoise(std::span<double> f, std::size_t rows, std::size_t cols, double lambda, int iters,
                std::span<const std::uint8_t> support) {
  if (lambda == 0.0) return;
  const std::size_t n = rows * cols;
  const EdgeMask edges(rows, cols, support);
  std::vector<double> px(n, 0.0), py(n, 0.0), div(n, 0.0), w(n);
  constexpr double tau = 0.125;

  auto divergence = [&] {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        double d = 0.0;
        if (edges.right[i]) d += px[i];
        if (c > 0 && edges.right[i - 1]) d -= px[i - 1];
        if (edges.down[i]) d += py[i];
        if (r > 0 && edges.down[i - cols]) d -= py[i - cols];
        div[i] = d;
      }
  };

  for (int it = 0; it < iters; ++it) {
    divergence();
    for (std::size_t i = 0; i < n; ++i) w[i] = div[i] - f[i] / lambda;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        const double gx = edges.right[i] ? w[i + 1] - w[i] : 0.0;
        const double gy = edges.down[i] ? w[i + cols] - w[i] : 0.0;
        const double mag = std::sqrt(gx * gx + gy * gy);
        px[i] = (px[i] + tau * gx) / (1.0 + tau * mag);
        py[i] = (py[i] + tau * gy) / (1.0 + tau * mag);
      }
  }
  divergence();
  for (std::size_t i = 0; i < n; ++i)
    if (in_support(support, i)) f[i] -= lambda * div[i];
}

void soft_threshold(std::span<double> f, double strength, std::span<const std::uint8_t> support) {
  if (strength == 0.0) return;
  std::vector<double> vals;
  vals.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    if (in_support(support, i)) vals.push_back(f[i]);
  if (vals.empty()) return;
  const std::size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + static_cast<long>(mid), vals.end());
  double median = vals[mid];
  if (vals.size() % 2 == 0) {
    const double lower = *std::max_element(vals.begin(), vals.begin() + static_cast<long>(mid));
    median = 0.5 * (median + lower);
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!in_support(support, i)) continue;
    const double dev = f[i] - median;
    const double mag = std::max(std::abs(dev) - strength, 0.0);
    f[i] = median + std::copysign(mag, dev);
  }
}

}  // namespace

void prox_apply_field(const ProxOperator& p, std::span<double> field, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> support) {
  p.validate();
  if (field.size() != rows * cols) throw ShapeError("prox_apply_field: field size does not match rows x cols");
  if (!support.empty() && support.size() != field.size()) throw ShapeError("prox support size mismatch");
  switch (p.kind) {
    case ProxOperator::Kind::Identity: return;
    case ProxOperator::Kind::SoftThreshold: soft_threshold(field, p.strength, support); return;
    case ProxOperator::Kind::TVDenoise: tv_denoise(field, rows, cols, p.strength, p.inner_iters, support); return;
    case ProxOperator::Kind::BoxClamp:
      for (std::size_t i = 0; i < field.size(); ++i)
        if (in_support(support, i)) field[i] = std::clamp(field[i], p.lo, p.hi);
      return;
  }
}

Image prox_apply(const ProxOperator& p, const Image& img) {
  if (p.domain != ProxOperator::Domain::Image) throw ValidationError("sinogram-domain prox applied to an image");
  Image out = img;
  prox_apply_field(p, out.values(), out.height(), out.width());
  return out;
}

Sinogram prox_apply(const ProxOperator& p, const Sinogram& sino, std::span<const std::uint8_t> support) {
  if (p.domain != ProxOperator::Domain::Sinogram) throw ValidationError("image-domain prox applied to a sinogram");
  Sinogram out = sino;
  prox_apply_field(p, out.values(), out.n_bins(), out.n_views(), support);
  return out;
}

double total_variation(std::span<const double> field, std::size_t rows, std::size_t cols,
                       std::span<const std::uint8_t> support) {
  if (field.size() != rows * cols) throw ShapeError("total_variation: field size does not match rows x cols");
  const EdgeMask edges(rows, cols, support);
  double tv = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      const double gx = edges.right[i] ? field[i + 1] - field[i] : 0.0;
      const double gy = edges.down[i] ? field[i + cols] - field[i] : 0.0;
      tv += std::sqrt(gx * gx + gy * gy);
    }
  return tv;
}

}  // namespace mar
