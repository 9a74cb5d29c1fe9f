#pragma once

#include <string>
#include <vector>

namespace svo {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Quick invariant checks over every module, seeded and deterministic.
std::vector<CheckResult> run_selfcheck();

}  // namespace svo
