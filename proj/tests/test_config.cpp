#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "randfront/config.hpp"

using namespace randfront;

TEST_CASE("defaults serialize and round-trip to identity") {
  RunConfig cfg;
  cfg.validate();
  const std::string text = cfg.serialize();
  const RunConfig back = RunConfig::parse(text);
  CHECK(back.serialize() == text);
  CHECK(back.content_hash() == cfg.content_hash());
}

TEST_CASE("parsing a handwritten config") {
  const std::string text = R"(
# comment
output_dir = "runs/demo"
base_seed = 7

[potential]
kind = "matern_bump"
ei = 1.5
a = 1.0
epsilon = 0.5
cell_size = 0.5
seed = 3

[pam]
dx = 0.025
horizon = 50
)";
  const auto cfg = RunConfig::parse(text);
  CHECK(cfg.output_dir == "runs/demo");
  CHECK(cfg.base_seed == 7);
  CHECK(cfg.potential.kind == PotentialKind::matern_bump);
  CHECK(cfg.potential.es == 2.5);  // derived from ei + a
  CHECK(cfg.pam.grid.dx == 0.025);
  CHECK(cfg.pam.horizon == 50.0);
  cfg.validate();
  // round trip again
  CHECK(RunConfig::parse(cfg.serialize()).serialize() == cfg.serialize());
}

TEST_CASE("unknown keys and malformed lines are rejected with line numbers") {
  CHECK_THROWS_WITH_AS(RunConfig::parse("[pam]\nnot_a_key = 1\n"),
                       doctest::Contains("unknown key"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::parse("pam.dx\n"),
                       doctest::Contains("line 1"), std::invalid_argument);
  CHECK_THROWS(RunConfig::parse("[potential]\nei = abc\n"));
}

TEST_CASE("dot-path overrides") {
  RunConfig cfg;
  cfg.apply_override("pam.dx=0.025");
  CHECK(cfg.pam.grid.dx == 0.025);
  cfg.apply_override("base_seed=99");
  CHECK(cfg.base_seed == 99);
  cfg.apply_override("potential.ei=2.5");
  CHECK(cfg.potential.ei == 2.5);
  CHECK(cfg.potential.es == 2.5 + cfg.potential.bump_amplitude);  // kept consistent
  CHECK_THROWS(cfg.apply_override("nope.nope=1"));
  CHECK_THROWS(cfg.apply_override("pamdx"));
}

TEST_CASE("validation rejects inconsistent blocks") {
  RunConfig cfg;
  cfg.kpp.threshold_eps = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg = RunConfig{};
  cfg.bbmre.law = "gibberish";
  CHECK_THROWS(cfg.validate());
  cfg = RunConfig{};
  cfg.kpp.nonlinearity = "unknown";
  CHECK_THROWS(cfg.validate());
}
