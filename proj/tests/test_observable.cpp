#include <gtest/gtest.h>

#include "koopman/builtin_systems.hpp"
#include "koopman/errors.hpp"
#include "koopman/observable.hpp"

using namespace koopman;

namespace {

const InputId A{0}, B{1};

struct Finite3 : ::testing::Test {
  ControlSystem sys = builtin::finite3();
  Observable ind2 = indicator(sys.states(), State::finite(2));
  // f(x,u) = x * (1 if u = a else 2)
  Observable xw = product(coordinate(sys.states(), 0, DomainTag::StateInput),
                          input_weight(sys.inputs(), {1.0, 2.0}, DomainTag::StateInput));
};

}  // namespace

TEST_F(Finite3, Evaluation) {
  EXPECT_EQ(ind2(State::finite(2)), Complex(1.0));
  EXPECT_EQ(ind2(State::finite(1)), Complex(0.0));
  EXPECT_EQ(constant_one(DomainTag::StateInput)(AugPoint{State::finite(1), B}), Complex(1.0));
  EXPECT_EQ(xw(AugPoint{State::finite(2), B}), Complex(4.0));
}

TEST_F(Finite3, WrongDomainThrows) {
  EXPECT_THROW(ind2(AugPoint{State::finite(2), A}), DomainError);
  EXPECT_THROW(xw(State::finite(2)), DomainError);
}

TEST_F(Finite3, LinearCombination) {
  const std::vector<Observable> fs{ind2, constant_one(DomainTag::StateOnly)};
  const std::vector<Complex> c{2.0, 3.0};
  EXPECT_EQ(linear_combine(c, fs)(State::finite(2)), Complex(5.0));

  const std::vector<Observable> ff{ind2, ind2};
  const std::vector<Complex> cancel{1.0, -1.0};
  const std::vector<Complex> keep{1.0, 0.0};
  for (std::size_t x = 0; x < 3; ++x) {
    EXPECT_EQ(linear_combine(cancel, ff)(State::finite(x)), Complex(0.0));
    EXPECT_EQ(linear_combine(keep, ff)(State::finite(x)), ind2(State::finite(x)));
  }
  const std::vector<Observable> mixed{ind2, xw};
  EXPECT_THROW(linear_combine(c, mixed), DomainMismatch);
}

TEST_F(Finite3, Tabulate) {
  Eigen::VectorXcd t = tabulate(xw, sys);
  ASSERT_EQ(t.size(), 6);
  const double expect[] = {0, 0, 1, 2, 2, 4};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(t(i), Complex(expect[i]));
  Eigen::VectorXcd i2 = tabulate(ind2, sys);
  EXPECT_EQ(i2, Eigen::Vector3cd(0, 0, 1));
  EXPECT_EQ(tabulate(constant_one(DomainTag::StateInput), sys), Eigen::VectorXcd::Ones(6));
  EXPECT_THROW(tabulate(constant_one(DomainTag::StateSequence), sys), UnsupportedError);
}

TEST_F(Finite3, ControlIndependence) {
  auto r = is_control_independent(xw, sys, CIMode::exhaustive());
  ASSERT_FALSE(r.independent);
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(r.witness->x.index(), 1u);
  auto [u1, u2] = std::get<std::pair<InputId, InputId>>(r.witness->inputs);
  EXPECT_EQ(u1, A);
  EXPECT_EQ(u2, B);

  auto ext = coordinate(sys.states(), 0, DomainTag::StateInput);
  EXPECT_TRUE(is_control_independent(ext, sys, CIMode::exhaustive()).independent);
  EXPECT_TRUE(is_control_independent(constant_one(DomainTag::StateSequence), sys,
                                     CIMode::sampled(50, 1))
                  .independent);
  EXPECT_THROW(certify_control_independent(xw, sys, CIMode::exhaustive()), ContractError);
}

TEST_F(Finite3, StateComponent) {
  auto g = coordinate(sys.states(), 0, DomainTag::StateInput);
  auto f = state_component(g, sys, CIMode::exhaustive());
  EXPECT_EQ(f.domain(), DomainTag::StateOnly);
  for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(f(State::finite(x)), Complex(double(x)));
  auto one = state_component(constant_one(DomainTag::StateInput), sys, CIMode::exhaustive());
  EXPECT_EQ(one(State::finite(2)), Complex(1.0));
  EXPECT_THROW(state_component(xw, sys, CIMode::exhaustive()), ContractError);
}

TEST(Observable, SequenceComponentOnBox) {
  auto sys = builtin::scalar_linear();
  auto h = monomial(sys.states(), {2}, DomainTag::StateSequence);
  auto f = state_component(h, sys, CIMode::sampled(100, 5));
  EXPECT_DOUBLE_EQ(f(State::real({0.5})).real(), 0.25);
}

TEST(Observable, InputWeightAtLag) {
  auto sys = builtin::finite3();
  auto w = input_weight(sys.inputs(), {10.0, 20.0}, DomainTag::StateSequence, 2);
  SeqPoint p{State::finite(0), InputSequence({A, A}, {B})};
  EXPECT_EQ(w(p), Complex(20.0));
  EXPECT_FALSE(is_control_independent(w, sys, CIMode::sampled(50, 2)).independent);
}
