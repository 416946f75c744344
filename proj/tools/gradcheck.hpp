#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace monobox::tools {

struct CheckResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  int cases = 0;
  bool passed() const { return error <= tolerance; }
};

CheckResult residual_jacobian(std::uint64_t seed, int configurations);
/// Fills both results; each configuration re-solves every perturbed input.
void implicit_jacobians_check(std::uint64_t seed, int configurations, CheckResult& dy,
                              CheckResult& dsigma);
CheckResult iou_gradient(std::uint64_t seed, int configurations);
CheckResult regressor_jacobian(std::uint64_t seed);
/// Pretrains a toy regressor, then compares the end-to-end gradient with
/// finite differences of the whole fit-and-score loss.
CheckResult end_to_end(std::uint64_t seed);

/// Runs every finite-difference suite with the given seed.
std::vector<CheckResult> run_gradchecks(std::uint64_t seed, int configurations);

}  // namespace monobox::tools
