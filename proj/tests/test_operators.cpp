#include <gtest/gtest.h>

#include <sstream>

#include "koopman/builtin_systems.hpp"
#include "koopman/errors.hpp"
#include "koopman/operators.hpp"
#include "koopman/sampling.hpp"

using namespace koopman;

namespace {

const InputId A{0}, B{1};

struct Ops : ::testing::Test {
  ControlSystem sys = builtin::finite3();
  Observable ind2 = indicator(sys.states(), State::finite(2));
  Observable x = coordinate(sys.states(), 0);
  Observable xw = product(coordinate(sys.states(), 0, DomainTag::StateInput),
                          input_weight(sys.inputs(), {1.0, 2.0}, DomainTag::StateInput));
};

Eigen::MatrixXcd permutation_rows(const std::vector<std::size_t>& cols) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(cols.size(), cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) m(i, cols[i]) = 1.0;
  return m;
}

}  // namespace

TEST_F(Ops, KuAndKaug) {
  EXPECT_EQ(k_u(sys, A)(ind2)(State::finite(1)), Complex(1.0));
  EXPECT_EQ(k_u(sys, B)(ind2)(State::finite(1)), Complex(1.0));
  EXPECT_EQ(k_u(sys, B)(ind2)(State::finite(2)), Complex(0.0));
  auto one = k_aug(sys)(constant_one(DomainTag::StateInput));
  for (const auto& p : enumerate_domain(sys, DomainTag::StateInput)) EXPECT_EQ(one(p), Complex(1.0));
  auto id = koopman_of_map(identity_map(DomainTag::StateOnly));
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(id(x)(State::finite(s)), x(State::finite(s)));
  EXPECT_THROW(koopman_of_map(map_transition(sys)), DomainMismatch);
}

TEST_F(Ops, NaiveOperator) {
  auto naive = k_naive(sys);
  auto g = naive(ind2);
  EXPECT_EQ(g.domain(), DomainTag::StateInput);
  EXPECT_EQ(g(AugPoint{State::finite(1), A}), Complex(1.0));
  EXPECT_THROW(naive(g), DomainMismatch);
  EXPECT_THROW(compose(naive, naive), DomainMismatch);
  EXPECT_THROW(power(naive, 2), DomainMismatch);
  EXPECT_EQ(identity_operator(DomainTag::StateOnly)(ind2)(State::finite(2)), Complex(1.0));
}

TEST_F(Ops, ExtensionAndRestriction) {
  // E then R on F^aug is the identity
  auto rt = compose(restriction_inf_to_aug(), extension_aug_to_inf());
  for (const auto& p : enumerate_domain(sys, DomainTag::StateInput)) EXPECT_EQ(rt(xw)(p), xw(p));

  auto g = extension_aug_to_inf()(xw);
  SeqPoint sp{State::finite(2), InputSequence({B}, {A})};
  EXPECT_EQ(g(sp), Complex(4.0));

  auto h = state_function(DomainTag::StateSequence, "x+u1", [](const State& s) {
    return Complex(double(s.index()));
  });
  auto r = restriction_inf_to_aug()(h);
  EXPECT_EQ(r(AugPoint{State::finite(2), A}), h(SeqPoint{State::finite(2), InputSequence::constant(A)}));

  auto ra = restriction_aug_to_f(sys, A)(xw);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(ra(State::finite(s)), Complex(double(s)));
  for (InputId u : sys.inputs().all()) {
    auto back = compose(restriction_aug_to_f(sys, u), extension_f_to_aug())(ind2);
    for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(back(State::finite(s)), ind2(State::finite(s)));
  }
}

TEST_F(Ops, CIIsomorphisms) {
  auto iso = ci_isomorphisms();
  auto sq = monomial(sys.states(), {2});
  auto g = iso.extend_f_to_aug(sq);
  auto f = iso.restrict_aug_to_f(g, A);
  auto f2 = iso.restrict_aug_to_f(g, B);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(f(State::finite(s)), sq(State::finite(s)));
    EXPECT_EQ(f2(State::finite(s)), sq(State::finite(s)));
  }
  auto h = iso.extend_aug_to_inf(g);
  SeqPoint sp{State::finite(2), InputSequence({A, B}, {B, A})};
  EXPECT_EQ(h(sp), Complex(4.0));
  auto back = iso.restrict_inf_to_aug(h);
  EXPECT_EQ(back(AugPoint{State::finite(2), B}), Complex(4.0));
}

TEST_F(Ops, KcfWordAndPower) {
  const std::vector<InputId> ab{A, B};
  EXPECT_EQ(kcf_word(sys, ab)(x)(State::finite(0)), Complex(2.0));
  auto empty = kcf_word(sys, std::span<const InputId>{});
  EXPECT_EQ(empty(x)(State::finite(1)), Complex(1.0));
  const std::vector<InputId> one{B};
  for (std::size_t s = 0; s < 3; ++s)
    EXPECT_EQ(kcf_word(sys, one)(x)(State::finite(s)), k_u(sys, B)(x)(State::finite(s)));

  auto iso = ci_isomorphisms();
  auto ee = iso.extend_aug_to_inf(iso.extend_f_to_aug(ind2)).observable();
  auto p3 = power(k_inf(sys), 3)(ee);
  EXPECT_EQ(p3(SeqPoint{State::finite(0), InputSequence({}, {A, B})}), Complex(0.0));
  auto p0 = power(k_aug(sys), 0)(xw);
  EXPECT_EQ(p0(AugPoint{State::finite(2), B}), Complex(4.0));
}

// Property: K_w K_v = K_{wv} on every word pair of total length <= 3.
TEST_F(Ops, WordConcatenation) {
  const auto words = enumerate_words(sys.inputs(), 3);
  for (const auto& w : words)
    for (const auto& v : words) {
      if (w.size() + v.size() > 3) continue;
      std::vector<InputId> wv = w;
      wv.insert(wv.end(), v.begin(), v.end());
      auto lhs = compose(kcf_word(sys, w), kcf_word(sys, v));
      auto rhs = kcf_word(sys, wv);
      for (const auto& f : {x, ind2})
        EXPECT_EQ(tabulate(lhs(f), sys), tabulate(rhs(f), sys));
    }
}

TEST_F(Ops, Matrices) {
  auto m = to_matrix(k_u(sys, A), sys);
  EXPECT_EQ(m.entries, permutation_rows({1, 2, 0}));
  EXPECT_EQ(to_matrix(identity_operator(DomainTag::StateOnly), sys).entries,
            Eigen::MatrixXcd::Identity(3, 3));
  auto e = to_matrix(extension_f_to_aug(), sys);
  ASSERT_EQ(e.entries.rows(), 6);
  ASSERT_EQ(e.entries.cols(), 3);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(e.entries(r, c), Complex(c == r / 2 ? 1.0 : 0.0));
  EXPECT_THROW(to_matrix(k_inf(sys), sys), UnsupportedError);
  EXPECT_THROW(to_matrix(k_u(builtin::scalar_linear(), A), builtin::scalar_linear()), UnsupportedError);

  std::ostringstream os;
  write_matrix_csv(m, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "X\\X,0,1,2");
}

// Properties: tabulate(K f) = M tabulate(f), and M_{A o B} = M_A M_B.
TEST_F(Ops, MatrixCovarianceAndLinearity) {
  const std::vector<CompositionOperator> ops{k_u(sys, A), k_u(sys, B), kcf_word(sys, std::vector<InputId>{B, A})};
  for (const auto& a : ops)
    for (const auto& b : ops) {
      auto ma = to_matrix(a, sys).entries, mb = to_matrix(b, sys).entries;
      EXPECT_EQ(to_matrix(compose(a, b), sys).entries, ma * mb);
    }
  auto aug = to_matrix(k_aug(sys), sys).entries;
  EXPECT_EQ(tabulate(k_aug(sys)(xw), sys), aug * tabulate(xw, sys));

  const std::vector<Observable> fs{x, ind2};
  const std::vector<Complex> c{Complex(2.0, 1.0), Complex(-3.0, 0.5)};
  auto lhs = k_u(sys, B)(linear_combine(c, fs));
  const std::vector<Observable> kfs{k_u(sys, B)(x), k_u(sys, B)(ind2)};
  auto rhs = linear_combine(c, kfs);
  EXPECT_EQ(tabulate(lhs, sys), tabulate(rhs, sys));
}

TEST_F(Ops, WellDefinedness) {
  const std::vector<Observable> dep{xw};
  auto r = input_aug_well_definedness(sys, dep);
  EXPECT_FALSE(r.well_defined);
  EXPECT_EQ(r.reason, WellDefinednessReport::Reason::WitnessFound);
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(r.witness->y.index(), 1u);
  EXPECT_EQ(r.witness->value1, Complex(1.0));
  EXPECT_EQ(r.witness->value2, Complex(2.0));

  auto single = builtin::finite3_single();
  const std::vector<Observable> one{coordinate(single.states(), 0, DomainTag::StateInput)};
  EXPECT_EQ(input_aug_well_definedness(single, one).reason, WellDefinednessReport::Reason::SingletonInput);

  auto c2 = builtin::collapse2();
  const std::vector<Observable> ci{coordinate(c2.states(), 0, DomainTag::StateInput),
                                   constant_one(DomainTag::StateInput)};
  auto r2 = input_aug_well_definedness(c2, ci);
  EXPECT_TRUE(r2.well_defined);
  EXPECT_EQ(r2.reason, WellDefinednessReport::Reason::AllRestrictionsInputFree);
  EXPECT_THROW(input_aug_well_definedness(c2, std::span<const Observable>{}), ContractError);
}

TEST_F(Ops, MultistepWitness) {
  const std::vector<Observable> probes{x};
  const auto states = enumerate_domain(sys, DomainTag::StateOnly);
  std::vector<State> xs;
  for (const auto& p : states) xs.push_back(std::get<State>(p));
  auto w = find_multistep_witness(sys, probes, xs);
  ASSERT_TRUE(w);
  EXPECT_NE(w->augmented_value, w->kcf_value);
  // independent oracle: T(T(x,u0),u0) against T(T(x,u0),u1)
  const State mid = sys.step(w->x, w->u0);
  EXPECT_EQ(Complex(double(sys.step(mid, w->u0).index())), w->augmented_value);
  EXPECT_EQ(Complex(double(sys.step(mid, w->u1).index())), w->kcf_value);

  auto c2 = builtin::collapse2();
  const std::vector<Observable> p2{coordinate(c2.states(), 0)};
  const std::vector<State> x2{State::finite(0), State::finite(1)};
  EXPECT_FALSE(find_multistep_witness(c2, p2, x2));
}
