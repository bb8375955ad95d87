#include "doctest.h"
#include "haegan/config.hpp"
#include "haegan/error.hpp"

using namespace haegan;
using namespace haegan::config;

namespace {

Schema schema() {
  return {
      {"seed", Type::UInt, "0", "0", "random seed"},
      {"gan.lr", Type::Double, "1e-4", "1e-4", "learning rate"},
      {"epochs", Type::Int, "20", "2", "training epochs"},
      {"density", Type::String, "checkerboard", "checkerboard", "toy density"},
      {"depths", Type::UIntList, "64,128", "64", "block counts"},
      {"verbose", Type::Bool, "false", "false", ""},
  };
}

}  // namespace

TEST_CASE("defaults depend on scale") {
  Config p(schema(), Scale::Paper), c(schema(), Scale::Ci);
  CHECK(p.get_int("epochs") == 20);
  CHECK(c.get_int("epochs") == 2);
  CHECK(p.get_uint_list("depths") == std::vector<std::size_t>{64, 128});
  CHECK(c.get_double("gan.lr") == 1e-4);
}

TEST_CASE("file, sections and overrides") {
  Config c(schema(), Scale::Ci);
  c.merge_text("# comment\nepochs = 7  # trailing\n\n[gan]\nlr = 0.001\n");
  CHECK(c.get_int("epochs") == 7);
  CHECK(c.get_double("gan.lr") == 0.001);
  c.assign("epochs=9");
  c.set("verbose", "1");
  CHECK(c.get_int("epochs") == 9);
  CHECK(c.get_bool("verbose"));
}

TEST_CASE("resolved text is sorted and canonical") {
  Config a(schema(), Scale::Ci), b(schema(), Scale::Ci);
  a.set("gan.lr", "0.0001");
  b.set("gan.lr", "1e-4");
  CHECK(a.resolved_text() == b.resolved_text());
  CHECK(a.hash() == b.hash());
  CHECK(a.resolved_text().rfind("density = checkerboard\ndepths = 64\nepochs = 2\ngan.lr = ", 0) == 0);
  b.set("seed", "1");
  CHECK(a.hash() != b.hash());
}

TEST_CASE("configuration errors") {
  Config c(schema(), Scale::Ci);
  CHECK_THROWS_AS(c.set("nope", "1"), Error);
  CHECK_THROWS_AS(c.set("epochs", "1.5"), Error);
  CHECK_THROWS_AS(c.set("seed", "-1"), Error);
  CHECK_THROWS_AS(c.set("gan.lr", "nan"), Error);
  CHECK_THROWS_AS(c.set("density", "two words"), Error);
  CHECK_THROWS_AS(c.set("depths", "64,,x"), Error);
  CHECK_THROWS_AS(c.merge_text("epochs 3\n"), Error);
  CHECK_THROWS_AS(c.merge_text("[gan\nlr = 1\n"), Error);
  CHECK_THROWS_AS(c.assign("epochs"), Error);
  CHECK_THROWS_AS(c.merge_file("/nonexistent.cfg"), Error);
  CHECK_THROWS_AS(parse_scale("huge"), Error);
  try {
    c.merge_text("\n\nunknown = 1\n", "run.cfg");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).rfind("run.cfg:3:", 0) == 0);
  }
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}
