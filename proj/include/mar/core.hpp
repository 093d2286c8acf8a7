// Grid and field types shared by every stage of the MAR pipeline.
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mar {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two fields (or a field and a geometry) disagree on their grid.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant (non-finite, out of range, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// The iterative solver produced a non-finite or exploding state.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t stage, const std::string& what)
      : Error("solver diverged at stage " + std::to_string(stage) + ": " + what), stage_(stage) {}
  std::size_t stage() const noexcept { return stage_; }

 private:
  std::size_t stage_;
};

inline constexpr double kDefaultMuWater = 0.192;
inline constexpr double kSafeDivEps = 1e-8;
inline constexpr double kDefaultWeightMax = 2.0;

struct ImageGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  double pixel_size = 1.0;

  ImageGrid() = default;
  ImageGrid(std::size_t h, std::size_t w, double px = 1.0);

  std::size_t size() const noexcept { return height * width; }
  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

struct SinogramGrid {
  std::size_t n_bins = 0;
  std::size_t n_views = 0;
  double bin_spacing = 1.0;

  SinogramGrid() = default;
  SinogramGrid(std::size_t bins, std::size_t views, double spacing = 1.0);

  std::size_t size() const noexcept { return n_bins * n_views; }
  /// Angle of view `v`, uniformly spaced over [0, 2*pi).
  double view_angle(std::size_t v) const noexcept;
  std::vector<double> view_angles() const;
  friend bool operator==(const SinogramGrid&, const SinogramGrid&) = default;
};

enum class ImageUnit { HU, Attenuation, Binary, Weight };
enum class SinogramKind { Raw, Normalized, Trace };

std::string_view to_string(ImageUnit u);
std::string_view to_string(SinogramKind k);
ImageUnit parse_image_unit(std::string_view s);
SinogramKind parse_sinogram_kind(std::string_view s);

/// Row-major H x W field. Row 0 is the top of the image (largest y).
class Image {
 public:
  Image() = default;
  Image(ImageGrid grid, ImageUnit unit, double fill = 0.0);
  Image(ImageGrid grid, ImageUnit unit, std::vector<double> values);

  const ImageGrid& grid() const noexcept { return grid_; }
  ImageUnit unit() const noexcept { return unit_; }
  std::size_t height() const noexcept { return grid_.height; }
  std::size_t width() const noexcept { return grid_.width; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * grid_.width + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * grid_.width + c]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Relabels the unit without touching values; checked against the new unit's invariants.
  Image with_unit(ImageUnit unit) const;

  /// Checks the unit invariants. `weight_max` bounds Weight images.
  void validate(double weight_max = kDefaultWeightMax) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  ImageGrid grid_;
  ImageUnit unit_ = ImageUnit::Attenuation;
  std::vector<double> values_;
};

/// Row-major N_b x N_p field: row = detector bin, column = view.
class Sinogram {
 public:
  Sinogram() = default;
  Sinogram(SinogramGrid grid, SinogramKind kind, double fill = 0.0);
  Sinogram(SinogramGrid grid, SinogramKind kind, std::vector<double> values);

  const SinogramGrid& grid() const noexcept { return grid_; }
  SinogramKind kind() const noexcept { return kind_; }
  std::size_t n_bins() const noexcept { return grid_.n_bins; }
  std::size_t n_views() const noexcept { return grid_.n_views; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(std::size_t bin, std::size_t view) const { return values_[bin * grid_.n_views + view]; }
  double& operator()(std::size_t bin, std::size_t view) { return values_[bin * grid_.n_views + view]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  Sinogram with_kind(SinogramKind kind) const;
  void validate() const;

  friend bool operator==(const Sinogram&, const Sinogram&) = default;

 private:
  SinogramGrid grid_;
  SinogramKind kind_ = SinogramKind::Raw;
  std::vector<double> values_;
};

enum class PointwiseOp { Mul, Sub, Add, SafeDiv };

/// Elementwise a (op) b. SafeDiv yields 0 wherever |b| < kSafeDivEps.
/// The result keeps the unit/kind of `a`; a Binary/Trace `a` is relabelled Attenuation/Raw unless op is Mul.
Image pointwise(const Image& a, const Image& b, PointwiseOp op);
Sinogram pointwise(const Sinogram& a, const Sinogram& b, PointwiseOp op);

/// mu = mu_water * (1 + HU/1000), clamped below at 0.
Image hu_to_mu(const Image& hu, double mu_water = kDefaultMuWater);
/// HU = 1000 * (mu/mu_water - 1).
Image mu_to_hu(const Image& mu, double mu_water = kDefaultMuWater);

double hu_to_mu(double hu, double mu_water = kDefaultMuWater) noexcept;
double mu_to_hu(double mu, double mu_water = kDefaultMuWater) noexcept;

// Small linear-algebra helpers on flat fields.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);        // Euclidean (Frobenius) norm
double squared_norm(std::span<const double> a);

void require_same_grid(const Image& a, const Image& b, std::string_view what);
void require_same_grid(const Sinogram& a, const Sinogram& b, std::string_view what);

/// Non-fatal diagnostics (fallbacks, degenerate inputs). Defaults to stderr.
using WarningSink = std::function<void(std::string_view)>;
void warn(std::string_view message);
/// Replaces the sink and returns the previous one. An empty sink silences warnings.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace mar
