#pragma once

#include <functional>
#include <string>
#include <vector>

namespace sketchsvd {

/// Outcome of one oracle comparison: passed iff measured <= bound.
struct CheckOutcome {
  double measured = 0.0;
  double bound = 0.0;
  bool passed() const noexcept { return measured <= bound; }
};

struct SelfCheck {
  std::string name;
  std::function<CheckOutcome()> run;
};

/// Independent-oracle checks for every module, each deterministic and
/// fast. Used by the `selftest` subcommand and by the unit tests.
std::vector<SelfCheck> selftest_checks();

}  // namespace sketchsvd
