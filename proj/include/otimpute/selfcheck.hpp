#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace otimpute {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast invariant checks of the kernel, optimizers, masks and imputers on
/// small seeded instances.
std::vector<CheckResult> run_self_checks(std::uint64_t seed = 0);

}  // namespace otimpute
