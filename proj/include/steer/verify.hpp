#pragma once

#include <string>
#include <vector>

namespace steer::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Options {
  std::string filter;      // substring; empty runs everything
  bool corrupt_cg = false; // self-test hook: inject a sign flip into one CG
};

// Oracle/property suite: CG reconstruction, Schur vanishing, Peter-Weyl
// orthogonality, Fourier round trips, basis steerability, uniform-density
// reduction, the Fourier-domain KL identity and gradient checks.
std::vector<CheckResult> run_checks(const Options& opts = {});

}  // namespace steer::verify
