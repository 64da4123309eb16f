#include <gtest/gtest.h>

#include "koopman/config.hpp"
#include "koopman/errors.hpp"

using namespace koopman;

TEST(Config, ParsesSectionsAndTypes) {
  auto c = Config::parse(R"(
system = "scalarlinear"   # trailing comment
[plan]
points = 500
tolerance = 1e-10
exhaustive = false
only = ["C1", "C2"]
[predict]
prefix = ["a",
          "b"]
)");
  EXPECT_EQ(c.at("system").as_string(), "scalarlinear");
  EXPECT_EQ(c.at("plan.points").as_uint(), 500u);
  EXPECT_DOUBLE_EQ(c.at("plan.tolerance").as_double(), 1e-10);
  EXPECT_FALSE(c.at("plan.exhaustive").as_bool());
  EXPECT_EQ(c.at("plan.only").as_strings(), (std::vector<std::string>{"C1", "C2"}));
  EXPECT_EQ(c.at("predict.prefix").as_strings(), (std::vector<std::string>{"a", "b"}));
}

TEST(Config, Errors) {
  EXPECT_THROW(Config::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("[plan\n"), ConfigError);
  EXPECT_THROW(Config::parse("just words\n"), ConfigError);
  EXPECT_THROW(Config::parse("x = [1, 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("x = \"open\n"), ConfigError);
  EXPECT_THROW(Config::parse("x = 1").at("y"), ConfigError);
  EXPECT_THROW(Config::parse("x = -3").at("x").as_uint(), ConfigError);
  EXPECT_THROW(experiment_from(Config::parse("[plan]\npionts = 3\n")), ConfigError);
  EXPECT_THROW(experiment_from(Config::parse("system = \"finite3\"\n[system]\nbuiltin = \"finite3\"\n")),
               ConfigError);
  EXPECT_THROW(Config::load("/nonexistent/koopman.toml"), ConfigError);
}

TEST(Config, SeedIsMandatoryForSampledPlans) {
  auto e = experiment_from(Config::parse("system = \"scalarlinear\"\n"));
  EXPECT_THROW(finalize(e), ConfigError);
  auto s = experiment_from(Config::parse("system = \"scalarlinear\"\n[plan]\nseed = 7\n"));
  EXPECT_NO_THROW(finalize(s));
  EXPECT_EQ(s.plan.rng_seed, 7u);
  auto x = experiment_from(Config::parse("[plan]\nexhaustive = true\n"));
  finalize(x);
  EXPECT_TRUE(x.plan.exhaustive);
  EXPECT_EQ(x.plan.tolerance, 0.0);
}

TEST(Config, DictSpec) {
  ExperimentConfig e;
  apply_dict_spec(e, "monomial:1-3");
  EXPECT_EQ(e.degree_min, 1u);
  EXPECT_EQ(e.degree_max, 3u);
  apply_dict_spec(e, "indicator");
  EXPECT_EQ(e.dict_name, "indicator");
  EXPECT_THROW(apply_dict_spec(e, "monomial:3-1"), ConfigError);
  EXPECT_THROW(apply_dict_spec(e, "monomial:x"), ConfigError);
}

TEST(Config, InlineSystems) {
  auto e = experiment_from(Config::parse(R"(
[system]
name = "swap"
states = ["p", "q"]
inputs = ["a", "b"]
table = [["q", "p"], [0, 1]]
)"));
  auto sys = build_system(e);
  EXPECT_EQ(sys.name(), "swap");
  EXPECT_EQ(sys.step(sys.states().find("p"), InputId{0}), sys.states().find("q"));
  EXPECT_EQ(sys.step(sys.states().find("q"), InputId{1}), sys.states().find("q"));

  auto lin = experiment_from(Config::parse("[system]\nbuiltin = \"scalarlinear\"\nlambda = [0.25, 0.5]\n"));
  EXPECT_DOUBLE_EQ(build_system(lin).step(State::real({1.0}), InputId{0}).coords()[0], 0.25);

  auto bad = experiment_from(Config::parse("[system]\nstates = [\"p\"]\ninputs = [\"a\"]\ntable = [[\"r\"]]\n"));
  EXPECT_THROW(build_system(bad), ConfigError);
  auto bad_rate = experiment_from(Config::parse("[system]\nbuiltin = \"logistic-with-offset\"\noffsets = [0.5]\n"));
  EXPECT_THROW(build_system(bad_rate), ConfigError);
}
