// End-to-end glue: simulate a case, correct it with one of the methods, and the bundled test suite.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mar/config.hpp"

namespace mar {

enum class Method { LI, NMAR, Dual, DualDegraded };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct SimulatedCase {
  SimulationResult sim;
  Image mask;       // Binary
  Sinogram trace;   // undilated metal trace
};

SimulatedCase simulate_case(const Config& cfg);

struct Correction {
  Sinogram sino;
  Image image_hu;
  std::optional<StageTrace> stages;  // dual methods only
  std::optional<Sinogram> y_tilde;   // normalisation coefficient used (nmar, dual)
};

/// Runs `method` on a metal-corrupted sinogram. `trace` is dilated by cfg.trace_dilation first.
Correction correct_case(Method method, const Sinogram& y, const Sinogram& trace, const Image& mask, const Config& cfg);

struct SuiteCase {
  std::string case_id;
  std::string metal_discs;  // metal.discs config value
  std::uint64_t seed = 0;
};

/// Ten Shepp-Logan cases with metal of decreasing, pairwise distinct pixel counts on the default grid.
std::vector<SuiteCase> bundled_suite(const Config& base = {});

/// `base` with the case's metal, id and seed filled in.
Config suite_case_config(const Config& base, const SuiteCase& c);

}  // namespace mar
