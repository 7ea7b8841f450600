#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cbf {

struct SelftestResult {
  std::string suite;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Built-in numerical audits: finite-difference gradient checks for both atom
// families and the constraint coefficients, QP solves against a brute-force
// grid, KKT residuals, and randomized Sum/Product membership truth tables.
std::vector<SelftestResult> run_selftest(std::uint64_t seed = 0x5eed5eedULL);

std::string selftest_table(const std::vector<SelftestResult>& results);

}  // namespace cbf
