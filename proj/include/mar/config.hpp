// Run configuration: INI text with sections, every key optional, unknown keys rejected.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mar/baselines.hpp"
#include "mar/dualdomain.hpp"
#include "mar/prior.hpp"
#include "mar/simulate.hpp"

namespace mar {

/// Configuration error naming the offending key (`section.key`).
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what) : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct GeometryConfig {
  std::size_t height = 128;
  std::size_t width = 128;
  double pixel_size = 0.2;   // cm
  std::size_t n_bins = 185;
  std::size_t n_views = 184;
  double bin_spacing = 0.0;  // 0 picks the covering spacing
  double offset = 0.0;

  ImageGrid image_grid() const;
  ProjectionGeometry build() const;
};

struct Config {
  GeometryConfig geometry;

  std::string phantom_kind = "shepp-logan";  // shepp-logan | discs | file
  std::string phantom_path;
  std::string phantom_discs;                 // "cx,cy,r,hu; ...", empty: the bundled disc phantom
  double phantom_background_hu = -1000.0;
  int phantom_supersample = 1;

  std::string metal_mask;                    // raw or PNG mask file; empty with no discs means no metal
  std::string metal_discs;                   // "cx,cy,r; ..."
  double metal_hu = 8000.0;
  double trace_threshold = 0.0;

  std::string spectrum_mode = "poly";        // poly | mono
  double photon_count = 2e5;

  std::uint64_t seed = 0;
  std::string case_id = "case";
  double mu_water = kDefaultMuWater;

  PriorConfig prior;
  std::string prior_weights;                 // weight map file, empty for weights = 1
  std::string prior_ytilde;                  // precomputed normalisation coefficient, overrides the prior

  SolverConfig solver;
  std::size_t trace_dilation = 1;
  RampFilter filter;

  Config();

  PhantomParams phantom_params() const;
  SpectrumConfig spectrum() const;
  /// Metal mask on the configured grid (all zero when no metal is configured).
  Image metal_mask_image() const;
  /// Throws ConfigError when values are out of range.
  void validate() const;
};

std::vector<Disc> parse_discs(const std::string& text, bool with_value, const std::string& key);

Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);
std::string dump_config(const Config& cfg);

}  // namespace mar
