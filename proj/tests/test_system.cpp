#include <gtest/gtest.h>

#include "koopman/builtin_systems.hpp"
#include "koopman/errors.hpp"
#include "koopman/sampling.hpp"
#include "koopman/system.hpp"

using namespace koopman;

namespace {

const InputId A{0}, B{1};

std::vector<std::size_t> indices(const std::vector<State>& xs) {
  std::vector<std::size_t> out;
  for (const auto& x : xs) out.push_back(x.index());
  return out;
}

}  // namespace

TEST(Step, Finite3) {
  auto sys = builtin::finite3();
  EXPECT_EQ(sys.step(State::finite(0), A).index(), 1u);
  EXPECT_EQ(sys.step(State::finite(2), A).index(), 0u);
  EXPECT_EQ(sys.step(State::finite(2), B).index(), 1u);
  EXPECT_EQ(sys.step(State::finite(0), B).index(), 0u);
}

TEST(Step, IdentityAndCollapse) {
  auto id = builtin::identity_finite(3);
  for (std::size_t x = 0; x < 3; ++x)
    for (InputId u : id.inputs().all()) EXPECT_EQ(id.step(State::finite(x), u).index(), x);
  auto c = builtin::collapse2();
  EXPECT_EQ(c.step(State::finite(0), A).index(), 1u);
}

TEST(Step, RejectsForeignArguments) {
  auto sys = builtin::finite3();
  EXPECT_THROW(sys.step(State::finite(3), A), DomainError);
  EXPECT_THROW(sys.step(State::finite(0), InputId{2}), DomainError);
  EXPECT_THROW(sys.step(State::real({0.0}), A), DomainError);
  auto lin = builtin::scalar_linear();
  EXPECT_THROW(lin.step(State::real({1.5}), A), DomainError);
  EXPECT_NEAR(lin.step(State::real({1.0}), B).coords()[0], -0.8, 0.0);
}

TEST(Step, SuccessorLeavingTheBoxIsRejected) {
  ControlSystem bad("escape", StateSpace::box({0.0}, {1.0}), InputSet({"a"}),
                    [](const State& x, InputId) { return State::real({x.coords()[0] + 2.0}); });
  EXPECT_THROW(bad.step(State::real({0.5}), A), DomainError);
}

TEST(Simulate, Finite3Trajectory) {
  auto sys = builtin::finite3();
  InputSequence seq({A, B}, {A});
  EXPECT_EQ(indices(simulate(sys, State::finite(0), seq, 3)), (std::vector<std::size_t>{0, 1, 2, 0}));
  EXPECT_EQ(indices(simulate(sys, State::finite(2), seq, 0)), (std::vector<std::size_t>{2}));
  auto id = builtin::identity_finite(3);
  EXPECT_EQ(indices(simulate(id, State::finite(1), InputSequence({}, {A, B}), 5)),
            (std::vector<std::size_t>(6, 1)));
}

TEST(Sequence, ShiftAndLookup) {
  EXPECT_TRUE(shift(InputSequence({A}, {B})).same_as(InputSequence({}, {B})));
  EXPECT_EQ(shift(InputSequence({A}, {B})).prefix().size(), 0u);
  EXPECT_EQ(shift(InputSequence({}, {B})).period(), std::vector<InputId>{B});
  InputSequence ab({}, {A, B});
  EXPECT_EQ(shift(ab).period(), (std::vector<InputId>{B, A}));
  EXPECT_EQ(seq_at(InputSequence({A}, {B}), 0), A);
  EXPECT_EQ(seq_at(InputSequence({A}, {B}), 7), B);
  EXPECT_EQ(seq_at(ab, 3), B);
}

TEST(Sequence, EqualityIgnoresRepresentation) {
  EXPECT_TRUE(InputSequence({A}, {B, A}).same_as(InputSequence({}, {A, B})));
  EXPECT_TRUE(InputSequence({}, {A, A}).same_as(InputSequence::constant(A)));
  EXPECT_FALSE(InputSequence({A}, {B}).same_as(InputSequence({}, {A, B})));
  EXPECT_THROW(InputSequence({A}, {}), DomainError);
}

TEST(RangeMap, Examples) {
  EXPECT_EQ(indices(range_map(builtin::finite3())), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(indices(range_map(builtin::collapse2())), (std::vector<std::size_t>{1}));
  EXPECT_EQ(indices(range_map(builtin::identity_finite(4))), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_THROW(range_map(builtin::scalar_linear()), UnsupportedError);
}

TEST(Recovery, AllMethodsMatchSimulate) {
  auto sys = builtin::finite3();
  InputSequence seq({A, B}, {A});
  for (auto m : {RecoveryMethod::InfiniteSequence, RecoveryMethod::KCFComposition,
                 RecoveryMethod::AugmentedStepwise}) {
    EXPECT_EQ(indices(recover_trajectory(sys, State::finite(0), seq, 3, m)),
              (std::vector<std::size_t>{0, 1, 2, 0}));
    EXPECT_EQ(indices(recover_trajectory(sys, State::finite(1), seq, 0, m)),
              (std::vector<std::size_t>{1}));
  }
  auto lin = builtin::scalar_linear();
  auto ref = simulate(lin, State::real({1.0}), InputSequence({}, {A, B}), 6);
  for (auto m : {RecoveryMethod::InfiniteSequence, RecoveryMethod::KCFComposition,
                 RecoveryMethod::AugmentedStepwise}) {
    auto got = recover_trajectory(lin, State::real({1.0}), InputSequence({}, {A, B}), 6, m);
    ASSERT_EQ(got.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_EQ(state_distance(got[k], ref[k]), 0.0);
  }
}

TEST(Builtin, ByNameAndParameters) {
  for (const auto& n : builtin::names()) EXPECT_EQ(builtin::by_name(n).name(), n);
  EXPECT_THROW(builtin::by_name("nope"), ConfigError);
  builtin::ScalarLinearParams p;
  p.lambda = {1.5, 0.5};
  EXPECT_THROW(builtin::scalar_linear(p), ConfigError);
  auto log = builtin::logistic_with_offset();
  EXPECT_DOUBLE_EQ(log.step(State::real({0.5}), B).coords()[0], 2.5 * 0.25 + 0.05);
}

TEST(FromTable, Validates) {
  EXPECT_THROW(ControlSystem::from_table("t", {"p", "q"}, {"a"}, {{0}}), DomainError);
  EXPECT_THROW(ControlSystem::from_table("t", {"p"}, {"a"}, {{1}}), DomainError);
  auto sys = ControlSystem::from_table("t", {"p", "q"}, {"a"}, {{1}, {1}});
  EXPECT_EQ(sys.step(sys.states().find("p"), A), sys.states().find("q"));
}

TEST(Sampling, DeterministicStreams) {
  Rng r1(42), r2(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(r1.next(), r2.next());
  EXPECT_NE(derive_seed(1, "C1"), derive_seed(1, "C2"));
  EXPECT_EQ(derive_seed(1, "C1"), derive_seed(1, "C1"));
  Rng r(derive_seed(3, "x"));
  auto box = StateSpace::box({-1.0, 0.0}, {1.0, 2.0});
  for (int i = 0; i < 200; ++i) EXPECT_TRUE(box.contains(sample_state(box, r)));
}

TEST(Sampling, EnumerationCounts) {
  InputSet u({"a", "b"});
  EXPECT_EQ(enumerate_words(u, 3).size(), 1u + 2 + 4 + 8);
  // prefix lengths 0..1 (1 + 2 choices) times periods of length 1..2 (2 + 4)
  EXPECT_EQ(enumerate_sequences(u, 1, 2).size(), 3u * 6);
}
