// Analytic proximal operators plugged into the unfolded solver stages.
#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "mar/core.hpp"

namespace mar {

struct ProxOperator {
  enum class Kind { Identity, SoftThreshold, TVDenoise, BoxClamp };
  enum class Domain { Sinogram, Image };

  Kind kind = Kind::Identity;
  Domain domain = Domain::Image;
  double strength = 0.0;  // SoftThreshold / TVDenoise
  int inner_iters = 50;   // TVDenoise
  double lo = 0.0;        // BoxClamp
  double hi = 1.0;

  static ProxOperator identity(Domain d);
  static ProxOperator soft_threshold(Domain d, double strength);
  static ProxOperator tv(Domain d, double strength, int inner_iters = 50);
  static ProxOperator box(Domain d, double lo, double hi);

  void validate() const;

  /// `identity`, `soft:<s>`, `tv:<s>[:<iters>]`, `clamp:<lo>:<hi>`.
  static ProxOperator parse(std::string_view spec, Domain d);
  std::string to_spec() const;
};

/// Applies the operator to a rows x cols field in place. When `support` is non-empty, entries
/// outside it (support == 0) are left untouched and do not influence the result.
void prox_apply_field(const ProxOperator& p, std::span<double> field, std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> support = {});

Image prox_apply(const ProxOperator& p, const Image& img);
Sinogram prox_apply(const ProxOperator& p, const Sinogram& sino, std::span<const std::uint8_t> support = {});

/// Isotropic total variation with forward differences; pairs with an entry outside
/// `support` are skipped.
double total_variation(std::span<const double> field, std::size_t rows, std::size_t cols,
                       std::span<const std::uint8_t> support = {});

}  // namespace mar
