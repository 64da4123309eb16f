#include <gtest/gtest.h>

#include <memory>

#include "json.hpp"

#include "koopman/builtin_systems.hpp"
#include "koopman/checks.hpp"
#include "koopman/errors.hpp"

using namespace koopman;

TEST(Registry, TwentyChecks) {
  ASSERT_EQ(check_registry().size(), 20u);
  EXPECT_EQ(check_registry().front().id, "C1");
  EXPECT_EQ(check_registry().back().id, "C20");
  EXPECT_THROW(check_spec("C21"), ConfigError);
  EXPECT_FALSE(applicable(check_spec("C19"), builtin::scalar_linear()));
  EXPECT_TRUE(applicable(check_spec("C19"), builtin::finite3()));
}

TEST(Plan, Validation) {
  auto lin = builtin::scalar_linear();
  EXPECT_THROW(SamplePlan::exact().validate(lin), ConfigError);
  SamplePlan p = SamplePlan::sampled(10, 2, 1, 1e-12);
  EXPECT_NO_THROW(p.validate(lin));
  p.n_points = 0;
  EXPECT_THROW(p.validate(lin), ConfigError);
  SamplePlan z = SamplePlan::sampled(10, 2, 1, 0.0);
  EXPECT_THROW(z.validate(lin), ConfigError);
}

TEST(Checks, SingleChecksOnFinite3) {
  auto sys = builtin::finite3();
  auto c5 = run_check("C5", sys, SamplePlan::exact());
  EXPECT_TRUE(c5.pass);
  EXPECT_EQ(c5.max_abs_error, 0.0);
  SamplePlan p = SamplePlan::exact();
  p.max_word_length = 4;
  auto c14 = run_check("C14", sys, p);
  EXPECT_TRUE(c14.pass) << c14.detail;
  auto c19 = run_check("C19", sys, SamplePlan::exact());
  EXPECT_TRUE(c19.pass);
  EXPECT_NE(c19.detail.find("WitnessFound"), std::string::npos);
}

TEST(Checks, ExactSuites) {
  for (const auto& name : {"finite3", "collapse2", "finite3-single", "identity3"}) {
    auto report = run_all(builtin::by_name(name), SamplePlan::exact());
    EXPECT_TRUE(report.all_passed()) << name;
    EXPECT_EQ(report.results.size(), 20u);
    for (const auto& r : report.results) EXPECT_EQ(r.max_abs_error, 0.0) << name << " " << r.id;
  }
}

TEST(Checks, SampledSuiteSmall) {
  auto report = run_all(builtin::scalar_linear(), SamplePlan::sampled(100, 5, 7, 1e-12));
  EXPECT_TRUE(report.all_passed());
  EXPECT_EQ(report.skipped, std::vector<std::string>{"C19"});
}

TEST(Checks, OnlyFilterAndJson) {
  const std::vector<std::string> only{"C3", "C18"};
  auto report = run_all(builtin::finite3(), SamplePlan::exact(), only);
  ASSERT_EQ(report.results.size(), 2u);
  auto j = nlohmann::json::parse(to_json(report));
  EXPECT_EQ(j["passed"], 2);
  EXPECT_EQ(j["checks"][1]["id"], "C18");
  EXPECT_EQ(to_json(report), to_json(run_all(builtin::finite3(), SamplePlan::exact(), only)));
  const std::vector<std::string> bad{"C99"};
  EXPECT_THROW(run_all(builtin::finite3(), SamplePlan::exact(), bad), ConfigError);
}

TEST(Checks, CorruptedTransitionFailsDeterminism) {
  // transition that drifts between calls
  auto counter = std::make_shared<std::size_t>(0);
  ControlSystem drift("drift", StateSpace::finite({"0", "1", "2"}), InputSet({"a", "b"}),
                      [counter](const State& x, InputId u) {
                        const std::size_t bump = (*counter)++ % 7 == 3 ? 1 : 0;
                        return State::finite((x.index() + u.value + 1 + bump) % 3);
                      });
  auto r = run_check("C18", drift, SamplePlan::exact());
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(r.counterexample.has_value());
  auto report = run_all(drift, SamplePlan::exact());
  EXPECT_FALSE(report.all_passed());
}
