#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace acsplit {

struct SelfTestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Names of the built-in checks, in execution order.
std::vector<std::string> selftest_names();

/// Runs every check at fixed seeds. `corrupt` names one check whose reference
/// constant is deliberately perturbed (a hook for testing the harness itself).
std::vector<SelfTestResult> run_selftest(const std::string& corrupt = {});

}  // namespace acsplit
