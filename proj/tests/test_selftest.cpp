#include "doctest.h"
#include "haegan/error.hpp"
#include "haegan/selftest.hpp"

using namespace haegan;

TEST_CASE("property suite passes on a clean build") {
  selftest::Options o;
  o.cases = 1000;
  o.fd_seeds = 3;
  auto rows = selftest::run(o);
  CHECK(rows.size() == 14);
  for (const auto& r : rows) {
    INFO(r.name << " max_error " << r.max_error);
    CHECK(r.pass);
    CHECK(r.cases > 0);
  }
}

TEST_CASE("injected bad clamp fails the closure check only") {
  selftest::Options o;
  o.cases = 1000;
  o.fd_seeds = 2;
  o.fault = selftest::Fault::BadClamp;
  for (const auto& r : selftest::run(o)) {
    INFO(r.name);
    CHECK(r.pass == (r.name != "hyperboloid_closure"));
  }
}

TEST_CASE("fault names") {
  CHECK(selftest::parse_fault("none") == selftest::Fault::None);
  CHECK(selftest::parse_fault("bad_clamp") == selftest::Fault::BadClamp);
  CHECK_THROWS_AS(selftest::parse_fault("other"), Error);
}
