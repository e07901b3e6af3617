#include <doctest.h>

#include <sketchsvd/selftest.hpp>

TEST_CASE("oracle self-checks") {
  for (const auto& check : sketchsvd::selftest_checks()) {
    SUBCASE(check.name.c_str()) {
      const auto r = check.run();
      INFO(check.name << " measured=" << r.measured << " bound=" << r.bound);
      CHECK(r.passed());
    }
  }
}
