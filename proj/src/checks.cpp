#include "koopman/checks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "koopman/errors.hpp"
#include "koopman/observable.hpp"
#include "koopman/operators.hpp"
#include "koopman/sampling.hpp"

namespace koopman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<CheckSpec> kRegistry = {
    {"C1", "point restriction undoes extension", "R o E = id on X x U", SystemKind::Any},
    {"C2", "restriction inverts extension on F^aug", "R E g = g for g in F^aug", SystemKind::Any},
    {"C3", "control independence is carried across X x U and X x l(U)",
     "E(F^aug_ci) = F^inf_ci, R(F^inf_ci) = F^aug_ci", SystemKind::Any},
    {"C4", "freezing then forgetting the input", "R o E_u = id_X for every u", SystemKind::Any},
    {"C5", "freezing the input inverts the state extension", "R_u E f = f for f in F",
     SystemKind::Any},
    {"C6", "F^aug_ci and F^inf_ci are mutually inverse images",
     "E R h = h on F^inf_ci, R E g = g on F^aug_ci", SystemKind::Any},
    {"C7", "restrictions coincide on control-independent functions",
     "R_u1 g = R_u2 g for g in F^aug_ci", SystemKind::Any},
    {"C8", "F and F^aug_ci are isomorphic",
     "E R g = g on F^aug_ci, R E f = f on F; finite: dim F = dim F^aug_ci = dim F^inf_ci",
     SystemKind::Any},
    {"C9", "infinite-sequence and augmented dynamics",
     "T^inf o E = E o T^aug, T^aug = R o T^inf o E", SystemKind::Any},
    {"C10", "augmented and constant-input dynamics",
     "T^aug o E_u = E_u o T_u, T_u = R o T^aug o E_u", SystemKind::Any},
    {"C11", "K^inf and K^aug",
     "R K^inf = K^aug R, K^aug = R K^inf E, (K^inf f)|XxU = K^aug f|XxU, K^aug g = (K^inf g^inf)|XxU",
     SystemKind::Any},
    {"C12", "K^aug and the KCF",
     "R_u K^aug = K_u R_u, K_u = R_u K^aug E, (K^aug f)|u=u* = K_u f|u=u*, K_u g = (K^aug g_e)|u=u*",
     SystemKind::Any},
    {"C13", "operators on control-independent functions",
     "K_u f = R_u K^aug E_ci f, K^aug g = R K^inf E_ci g, K_u f = R_u R K^inf E_ci E_ci f",
     SystemKind::Any},
    {"C14", "KCF and K^inf agree on trajectories",
     "f(x_k) = K_u0..K_uk-1 f(x0) = (K^inf)^k E_ci E_ci f(x0,u); h_X(x_k) = (K^inf)^k h = K_u0..K_uk-1 R_ci R_ci h",
     SystemKind::Any},
    {"C15", "K^inf encodes trajectories on F^inf_ci", "(K^inf)^k h(x0,u) = h_X(x_k)",
     SystemKind::Any},
    {"C16", "K^aug encodes a single step only",
     "[K^aug g](x,u) = g_X(T(x,u)); (K^aug)^2 E f vs K_u0 K_u1 f witness iff T forgets u1",
     SystemKind::Any},
    {"C17", "KCF words encode trajectories", "K_u0 K_u1..K_uk-1 g(x0) = g(x_k)", SystemKind::Any},
    {"C18", "input-free systems recover the trajectory",
     "pi (T^inf)^k (x0,u) = T_uk-1 o..o T_u0 (x0) = pi T^aug(x_k-1,u_k-1) = x_k", SystemKind::Any},
    {"C19", "naive input-as-state operator", "well defined only if |U| = 1 or f(y,.) is input free",
     SystemKind::FiniteOnly},
    {"C20", "constant function space is trivial", "(K^inf)^k c = c, K^aug c = c, K_u c = c",
     SystemKind::Any},
};

// shortest text that reads back to the same double
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(Complex c) {
  if (c.imag() == 0.0) return fmt(c.real());
  return fmt(c.real()) + (c.imag() < 0 ? "" : "+") + fmt(c.imag()) + "i";
}

double point_distance(const Point& a, const Point& b) {
  if (a.index() != b.index()) return kInf;
  double d = state_distance(state_of(a), state_of(b));
  if (const auto* pa = std::get_if<AugPoint>(&a)) {
    if (!(pa->u == std::get<AugPoint>(b).u)) d = std::max(d, 1.0);
  } else if (const auto* sa = std::get_if<SeqPoint>(&a)) {
    if (!sa->u.same_as(std::get<SeqPoint>(b).u)) d = std::max(d, 1.0);
  }
  return d;
}

// Running maximum of |lhs - rhs|; keeps the first violation.
class Tracker {
 public:
  explicit Tracker(double tol) : tol_(tol) {}

  template <class Where>
  void record(double err, Where&& where) {
    if (std::isnan(err)) err = kInf;
    ++n_;
    max_ = std::max(max_, err);
    if (err > tol_ && !first_) first_ = where();
  }

  template <class Where>
  void values(Complex lhs, Complex rhs, Where&& where) {
    record(std::abs(lhs - rhs), [&] { return where() + ": " + fmt(lhs) + " vs " + fmt(rhs); });
  }

  template <class Where>
  void points(const Point& lhs, const Point& rhs, const ControlSystem& sys, Where&& where) {
    record(point_distance(lhs, rhs),
           [&] { return where() + ": " + describe(lhs, sys) + " vs " + describe(rhs, sys); });
  }

  void fail(std::string why) {
    ++n_;
    max_ = kInf;
    if (!first_) first_ = std::move(why);
  }

  void count(std::size_t n) { n_ += n; }

  CheckResult finish(std::string id, std::string detail) const {
    CheckResult r;
    r.id = std::move(id);
    r.max_abs_error = max_;
    r.pass = max_ <= tol_ && !first_;
    if (!r.pass) r.counterexample = first_ ? *first_ : std::string("error above tolerance");
    r.n_evaluated = n_;
    r.detail = std::move(detail);
    return r;
  }

 private:
  double tol_;
  double max_ = 0.0;
  std::size_t n_ = 0;
  std::optional<std::string> first_;
};

std::vector<Complex> one_hot(std::size_t n, std::size_t i) {
  std::vector<Complex> w(n, 0.0);
  w[i] = 1.0;
  return w;
}

// Everything a check draws from: points of the three domains and pools of
// observables. Built lazily so that a check only consumes the random
// stream it needs; the order of first use is fixed per check.
class Context {
 public:
  Context(std::string_view id, const ControlSystem& sys, const SamplePlan& plan)
      : sys(sys), plan(plan), rng(derive_seed(plan.rng_seed, id)),
        exhaustive(plan.exhaustive && sys.is_finite()) {}

  const ControlSystem& sys;
  const SamplePlan& plan;
  Rng rng;
  bool exhaustive;

  const std::vector<State>& states() {
    if (!states_) {
      states_.emplace();
      if (exhaustive)
        for (std::size_t i = 0; i < sys.states().size(); ++i) states_->push_back(State::finite(i));
      else
        for (std::size_t n = 0; n < plan.n_points; ++n)
          states_->push_back(sample_state(sys.states(), rng));
    }
    return *states_;
  }

  const std::vector<AugPoint>& pairs() {
    if (!pairs_) {
      pairs_.emplace();
      if (exhaustive) {
        for (const Point& p : enumerate_domain(sys, DomainTag::StateInput))
          pairs_->push_back(std::get<AugPoint>(p));
      } else {
        for (std::size_t n = 0; n < plan.n_points; ++n) {
          State x = sample_state(sys.states(), rng);
          pairs_->push_back({std::move(x), sample_input(sys.inputs(), rng)});
        }
      }
    }
    return *pairs_;
  }

  const std::vector<SeqPoint>& seq_points() {
    if (!seqs_) {
      seqs_.emplace();
      if (exhaustive) {
        const auto all =
            enumerate_sequences(sys.inputs(), plan.seq_prefix_max, plan.seq_period_max);
        for (std::size_t i = 0; i < sys.states().size(); ++i)
          for (const auto& s : all) seqs_->push_back({State::finite(i), s});
      } else {
        for (std::size_t n = 0; n < plan.n_points; ++n) {
          State x = sample_state(sys.states(), rng);
          seqs_->push_back(
              {std::move(x),
               sample_sequence(sys.inputs(), rng, plan.seq_prefix_max, plan.seq_period_max)});
        }
      }
    }
    return *seqs_;
  }

  // Words for KCF checks: every word on finite exhaustive plans, otherwise
  // n_points random (state, word) pairs with uniform length.
  std::vector<std::pair<State, std::vector<InputId>>> state_words() {
    std::vector<std::pair<State, std::vector<InputId>>> out;
    if (exhaustive) {
      const auto words = enumerate_words(sys.inputs(), plan.max_word_length);
      for (const State& x : states())
        for (const auto& w : words) out.emplace_back(x, w);
      return out;
    }
    for (std::size_t n = 0; n < plan.n_points; ++n) {
      State x = sample_state(sys.states(), rng);
      std::vector<InputId> w(rng.below(plan.max_word_length + 1));
      for (auto& u : w) u = sample_input(sys.inputs(), rng);
      out.emplace_back(std::move(x), std::move(w));
    }
    return out;
  }

  // Built-in state observables placed on `domain`: indicators, coordinate
  // and constant on finite spaces, monomials of degree <= 3 on boxes.
  std::vector<Observable> state_basis(DomainTag domain) const {
    std::vector<Observable> out;
    const StateSpace& X = sys.states();
    if (X.is_finite()) {
      for (std::size_t i = 0; i < X.size(); ++i) out.push_back(indicator(X, X.at(i), domain));
      out.push_back(coordinate(X, 0, domain));
      out.push_back(constant_one(domain));
      return out;
    }
    const std::size_t n = X.dimension();
    std::vector<unsigned> e(n, 0);
    std::function<void(std::size_t, unsigned)> rec = [&](std::size_t i, unsigned left) {
      if (i == n) {
        out.push_back(monomial(X, e, domain));
        return;
      }
      for (unsigned k = 0; k <= left; ++k) {
        e[i] = k;
        rec(i + 1, left - k);
      }
      e[i] = 0;
    };
    rec(0, 3);
    return out;
  }

  std::vector<Observable> aug_basis() const {
    std::vector<Observable> out;
    const auto base = state_basis(DomainTag::StateInput);
    const std::size_t m = sys.inputs().size();
    for (const auto& f : base)
      for (std::size_t j = 0; j < m; ++j)
        out.push_back(
            product(f, input_weight(sys.inputs(), one_hot(m, j), DomainTag::StateInput)));
    return out;
  }

  std::vector<Observable> seq_basis() const {
    std::vector<Observable> out;
    const auto base = state_basis(DomainTag::StateSequence);
    const std::size_t m = sys.inputs().size();
    for (const auto& f : base)
      for (std::size_t lag = 0; lag < 3; ++lag)
        for (std::size_t j = 0; j < m; ++j)
          out.push_back(product(
              f, input_weight(sys.inputs(), one_hot(m, j), DomainTag::StateSequence, lag)));
    return out;
  }

  // Basis (on exhaustive plans) followed by random complex combinations.
  std::vector<Observable> pool(const std::vector<Observable>& basis) {
    std::vector<Observable> out;
    if (exhaustive) out = basis;
    for (std::size_t n = 0; n < plan.n_functions; ++n) {
      std::vector<Complex> c(basis.size());
      for (auto& v : c) {
        const double re = rng.uniform(-1.0, 1.0);
        v = Complex(re, rng.uniform(-1.0, 1.0));
      }
      Observable f = linear_combine(c, basis);
      out.emplace_back(f.domain(), [f](const Point& p) { return f(p); },
                       "rand#" + std::to_string(n));
    }
    return out;
  }

  const std::vector<Observable>& f_state() {
    if (!f_state_) f_state_ = pool(state_basis(DomainTag::StateOnly));
    return *f_state_;
  }
  const std::vector<Observable>& f_aug() {
    if (!f_aug_) f_aug_ = pool(aug_basis());
    return *f_aug_;
  }
  const std::vector<Observable>& f_seq() {
    if (!f_seq_) f_seq_ = pool(seq_basis());
    return *f_seq_;
  }

  CIMode ci_mode(DomainTag domain) {
    if (exhaustive && domain == DomainTag::StateInput) return CIMode::exhaustive();
    CIMode m = CIMode::sampled(std::max<std::size_t>(plan.n_points, 1), rng.next());
    m.prefix_max = plan.seq_prefix_max;
    m.period_max = plan.seq_period_max;
    return m;
  }

  // Control-independent pools, certified before use.
  const std::vector<ControlIndependent>& ci_aug() {
    if (!ci_aug_) ci_aug_ = certify_pool(DomainTag::StateInput);
    return *ci_aug_;
  }
  const std::vector<ControlIndependent>& ci_seq() {
    if (!ci_seq_) ci_seq_ = certify_pool(DomainTag::StateSequence);
    return *ci_seq_;
  }

  std::vector<InputId> inputs() const { return sys.inputs().all(); }

  std::string at(const Point& p) const { return describe(p, sys); }

 private:
  std::vector<ControlIndependent> certify_pool(DomainTag domain) {
    std::vector<ControlIndependent> out;
    for (const auto& f : pool(state_basis(domain)))
      out.push_back(certify_control_independent(f, sys, ci_mode(domain)));
    return out;
  }

  std::optional<std::vector<State>> states_;
  std::optional<std::vector<AugPoint>> pairs_;
  std::optional<std::vector<SeqPoint>> seqs_;
  std::optional<std::vector<Observable>> f_state_, f_aug_, f_seq_;
  std::optional<std::vector<ControlIndependent>> ci_aug_, ci_seq_;
};

using CheckFn = CheckResult (*)(Context&, Tracker&);

CheckResult c1(Context& c, Tracker& t) {
  const auto R = map_restrict_seq_to_pair();
  const auto E = map_extend_pair_to_seq();
  for (const AugPoint& p : c.pairs()) t.points(R(E(p)), p, c.sys, [&] { return "R(E" + c.at(p) + ")"; });
  return t.finish("C1", "");
}

CheckResult c2(Context& c, Tracker& t) {
  const auto RE = compose(restriction_inf_to_aug(), extension_aug_to_inf());
  for (const auto& g : c.f_aug()) {
    const Observable lhs = RE.apply(g);
    for (const AugPoint& p : c.pairs())
      t.values(lhs(p), g(p), [&] { return "g=" + g.label() + " at " + c.at(p); });
  }
  return t.finish("C2", "");
}

CheckResult c3(Context& c, Tracker& t) {
  const auto E = extension_aug_to_inf();
  const auto R = restriction_inf_to_aug();
  const auto& seqs = c.seq_points();
  const auto inputs = c.inputs();
  // E maps F^aug_ci into F^inf_ci, and every h in F^inf_ci is E of R h.
  for (const auto& g : c.ci_aug()) {
    const Observable eg = E.apply(g.observable());
    for (const SeqPoint& p : seqs) {
      const SeqPoint q{p.x, InputSequence::constant(inputs.front())};
      t.values(eg(p), eg(q), [&] { return "E g, g=" + g.observable().label() + " at " + c.at(p); });
    }
  }
  for (const auto& h : c.ci_seq()) {
    const Observable rh = R.apply(h.observable());
    const Observable erh = E.apply(rh);
    for (const AugPoint& p : c.pairs())
      for (InputId u : inputs)
        t.values(rh(p), rh(AugPoint{p.x, u}),
                 [&] { return "R h, h=" + h.observable().label() + " at " + c.at(p); });
    for (const SeqPoint& p : seqs)
      t.values(erh(p), h(p), [&] { return "E R h, h=" + h.observable().label() + " at " + c.at(p); });
  }
  // and every g in F^aug_ci is R of E g.
  for (const auto& g : c.ci_aug()) {
    const Observable reg = R.apply(E.apply(g.observable()));
    for (const AugPoint& p : c.pairs())
      t.values(reg(p), g(p), [&] { return "R E g, g=" + g.observable().label() + " at " + c.at(p); });
  }
  return t.finish("C3", "");
}

CheckResult c4(Context& c, Tracker& t) {
  const auto R = map_restrict_pair_to_state();
  for (InputId u : c.inputs()) {
    const auto E = map_extend_state_to_pair(c.sys, u);
    for (const State& x : c.states())
      t.points(R(E(x)), x, c.sys,
               [&] { return "R(E_" + c.sys.inputs().label(u) + " " + c.at(x) + ")"; });
  }
  return t.finish("C4", "");
}

CheckResult c5(Context& c, Tracker& t) {
  const auto E = extension_f_to_aug();
  for (InputId u : c.inputs()) {
    const auto RE = compose(restriction_aug_to_f(c.sys, u), E);
    for (const auto& f : c.f_state()) {
      const Observable lhs = RE.apply(f);
      for (const State& x : c.states())
        t.values(lhs(x), f(x), [&] {
          return "R_" + c.sys.inputs().label(u) + " E f, f=" + f.label() + " at " + c.at(x);
        });
    }
  }
  return t.finish("C5", "");
}

CheckResult c6(Context& c, Tracker& t) {
  const auto iso = ci_isomorphisms();
  for (const auto& h : c.ci_seq()) {
    const auto back = iso.extend_aug_to_inf(iso.restrict_inf_to_aug(h));
    for (const SeqPoint& p : c.seq_points())
      t.values(back(p), h(p), [&] { return "E R h, h=" + h.observable().label() + " at " + c.at(p); });
  }
  for (const auto& g : c.ci_aug()) {
    const auto back = iso.restrict_inf_to_aug(iso.extend_aug_to_inf(g));
    for (const AugPoint& p : c.pairs())
      t.values(back(p), g(p), [&] { return "R E g, g=" + g.observable().label() + " at " + c.at(p); });
  }
  return t.finish("C6", "");
}

CheckResult c7(Context& c, Tracker& t) {
  const auto inputs = c.inputs();
  for (const auto& g : c.ci_aug()) {
    const Observable ref = restriction_aug_to_f(c.sys, inputs.front()).apply(g.observable());
    for (std::size_t j = 1; j < inputs.size(); ++j) {
      const Observable other = restriction_aug_to_f(c.sys, inputs[j]).apply(g.observable());
      for (const State& x : c.states())
        t.values(ref(x), other(x), [&] {
          return "R_" + c.sys.inputs().label(inputs.front()) + " g vs R_" +
                 c.sys.inputs().label(inputs[j]) + " g, g=" + g.observable().label() + " at " +
                 c.at(x);
        });
    }
  }
  return t.finish("C7", "");
}

std::size_t numeric_rank(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
  lu.setThreshold(1e-10);
  return static_cast<std::size_t>(lu.rank());
}

CheckResult c8(Context& c, Tracker& t) {
  const auto iso = ci_isomorphisms();
  for (const auto& g : c.ci_aug()) {
    for (InputId u : c.inputs()) {
      const auto back = iso.extend_f_to_aug(iso.restrict_aug_to_f(g, u));
      for (const AugPoint& p : c.pairs())
        t.values(back(p), g(p), [&] {
          return "E R_" + c.sys.inputs().label(u) + " g, g=" + g.observable().label() + " at " +
                 c.at(p);
        });
    }
  }
  for (const auto& f : c.f_state()) {
    const auto ef = iso.extend_f_to_aug(f);
    for (InputId u : c.inputs()) {
      const Observable back = iso.restrict_aug_to_f(ef, u);
      for (const State& x : c.states())
        t.values(back(x), f(x), [&] { return "R E f, f=" + f.label() + " at " + c.at(x); });
    }
  }
  std::string detail;
  if (c.sys.is_finite()) {
    // Dimensions on a finite instance: F has the state indicators as basis,
    // their images span F^aug_ci and F^inf_ci.
    const std::size_t n = c.sys.states().size();
    const auto E = extension_f_to_aug();
    const MatrixOperator ME = to_matrix(E, c.sys);
    const std::size_t rank_aug = numeric_rank(ME.entries);
    for (InputId u : c.inputs()) {
      const MatrixOperator MR = to_matrix(restriction_aug_to_f(c.sys, u), c.sys);
      const Eigen::MatrixXcd prod = MR.entries * ME.entries;
      const double err = (prod - Eigen::MatrixXcd::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff();
      t.record(err, [&] { return "matrix of R_" + c.sys.inputs().label(u) + " E is not the identity"; });
    }
    const auto& seqs = c.seq_points();
    const auto E2 = extension_aug_to_inf();
    Eigen::MatrixXcd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(seqs.size()));
    for (std::size_t i = 0; i < n; ++i) {
      const Observable h = E2.apply(E.apply(indicator(c.sys.states(), State::finite(i))));
      for (std::size_t j = 0; j < seqs.size(); ++j)
        values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = h(seqs[j]);
    }
    const std::size_t rank_inf = numeric_rank(values);
    t.record(std::abs(static_cast<double>(rank_aug) - static_cast<double>(n)),
             [&] { return "dim F^aug_ci = " + std::to_string(rank_aug) + ", |X| = " + std::to_string(n); });
    t.record(std::abs(static_cast<double>(rank_inf) - static_cast<double>(n)),
             [&] { return "dim F^inf_ci = " + std::to_string(rank_inf) + ", |X| = " + std::to_string(n); });
    detail = "dim F = dim F^aug_ci = dim F^inf_ci = " + std::to_string(n) + " checked";
  }
  return t.finish("C8", detail);
}

CheckResult c9(Context& c, Tracker& t) {
  const auto E = map_extend_pair_to_seq();
  const auto R = map_restrict_seq_to_pair();
  const auto Tinf = map_infinite_sequence(c.sys);
  const auto Taug = map_augmented(c.sys);
  for (const AugPoint& p : c.pairs()) {
    t.points(Tinf(E(p)), E(Taug(p)), c.sys, [&] { return "T^inf E vs E T^aug at " + c.at(p); });
    t.points(Taug(p), R(Tinf(E(p))), c.sys, [&] { return "T^aug vs R T^inf E at " + c.at(p); });
  }
  return t.finish("C9", "");
}

CheckResult c10(Context& c, Tracker& t) {
  const auto R = map_restrict_pair_to_state();
  const auto Taug = map_augmented(c.sys);
  for (InputId u : c.inputs()) {
    const auto Eu = map_extend_state_to_pair(c.sys, u);
    const auto Tu = map_constant_input(c.sys, u);
    const std::string lu = c.sys.inputs().label(u);
    for (const State& x : c.states()) {
      t.points(Taug(Eu(x)), Eu(Tu(x)), c.sys,
               [&] { return "T^aug E_" + lu + " vs E_" + lu + " T_" + lu + " at " + c.at(x); });
      t.points(Tu(x), R(Taug(Eu(x))), c.sys,
               [&] { return "T_" + lu + " vs R T^aug E_" + lu + " at " + c.at(x); });
    }
  }
  return t.finish("C10", "");
}

CheckResult c11(Context& c, Tracker& t) {
  const auto Kinf = k_inf(c.sys);
  const auto Kaug = k_aug(c.sys);
  const auto R = restriction_inf_to_aug();
  const auto E = extension_aug_to_inf();
  const auto lhs_a = compose(R, Kinf);
  const auto rhs_a = compose(Kaug, R);
  const auto rhs_b = compose(compose(R, Kinf), E);
  for (const auto& h : c.f_seq()) {
    const Observable a1 = lhs_a.apply(h), a2 = rhs_a.apply(h);
    // restriction written out directly, not through the operator
    const Observable h_res(DomainTag::StateInput,
                           [h](const Point& p) {
                             const auto& q = std::get<AugPoint>(p);
                             return h(SeqPoint{q.x, InputSequence::constant(q.u)});
                           },
                           h.label() + "|XxU");
    const Observable c2 = Kaug.apply(h_res);
    const Observable kh = Kinf.apply(h);
    for (const AugPoint& p : c.pairs()) {
      t.values(a1(p), a2(p), [&] { return "(a) h=" + h.label() + " at " + c.at(p); });
      t.values(kh(SeqPoint{p.x, InputSequence::constant(p.u)}), c2(p),
               [&] { return "(c) h=" + h.label() + " at " + c.at(p); });
    }
  }
  for (const auto& g : c.f_aug()) {
    const Observable b1 = Kaug.apply(g), b2 = rhs_b.apply(g);
    const Observable g_inf(DomainTag::StateSequence,
                           [g](const Point& p) {
                             const auto& q = std::get<SeqPoint>(p);
                             return g(AugPoint{q.x, q.u.at(0)});
                           },
                           g.label() + "^inf");
    const Observable kg = Kinf.apply(g_inf);
    for (const AugPoint& p : c.pairs()) {
      t.values(b1(p), b2(p), [&] { return "(b) g=" + g.label() + " at " + c.at(p); });
      t.values(b1(p), kg(SeqPoint{p.x, InputSequence::constant(p.u)}),
               [&] { return "(d) g=" + g.label() + " at " + c.at(p); });
    }
  }
  return t.finish("C11", "");
}

CheckResult c12(Context& c, Tracker& t) {
  const auto Kaug = k_aug(c.sys);
  const auto E = extension_f_to_aug();
  for (InputId u : c.inputs()) {
    const auto Ku = k_u(c.sys, u);
    const auto Ru = restriction_aug_to_f(c.sys, u);
    const auto lhs_a = compose(Ru, Kaug);
    const auto rhs_a = compose(Ku, Ru);
    const auto rhs_b = compose(compose(Ru, Kaug), E);
    const std::string lu = c.sys.inputs().label(u);
    for (const auto& f : c.f_aug()) {
      const Observable a1 = lhs_a.apply(f), a2 = rhs_a.apply(f);
      const Observable kf = Kaug.apply(f);
      const Observable f_res(DomainTag::StateOnly,
                             [f, u](const Point& p) { return f(AugPoint{std::get<State>(p), u}); },
                             f.label() + "|u=" + lu);
      const Observable c2 = Ku.apply(f_res);
      for (const State& x : c.states()) {
        t.values(a1(x), a2(x), [&] { return "(a) u*=" + lu + " f=" + f.label() + " at " + c.at(x); });
        t.values(kf(AugPoint{x, u}), c2(x),
                 [&] { return "(c) u*=" + lu + " f=" + f.label() + " at " + c.at(x); });
      }
    }
    for (const auto& g : c.f_state()) {
      const Observable b1 = Ku.apply(g), b2 = rhs_b.apply(g);
      const Observable g_e(DomainTag::StateInput,
                           [g](const Point& p) { return g(std::get<AugPoint>(p).x); },
                           g.label() + "_e");
      const Observable kg = Kaug.apply(g_e);
      for (const State& x : c.states()) {
        t.values(b1(x), b2(x), [&] { return "(b) u*=" + lu + " g=" + g.label() + " at " + c.at(x); });
        t.values(b1(x), kg(AugPoint{x, u}),
                 [&] { return "(d) u*=" + lu + " g=" + g.label() + " at " + c.at(x); });
      }
    }
  }
  return t.finish("C12", "");
}

CheckResult c13(Context& c, Tracker& t) {
  const auto iso = ci_isomorphisms();
  const auto Kaug = k_aug(c.sys);
  const auto Kinf = k_inf(c.sys);
  const auto R = restriction_inf_to_aug();
  const auto RKinf = compose(R, Kinf);
  for (InputId u : c.inputs()) {
    const auto Ku = k_u(c.sys, u);
    const auto Ru = restriction_aug_to_f(c.sys, u);
    const auto RuKaug = compose(Ru, Kaug);
    const auto RuRKinf = compose(Ru, RKinf);
    const std::string lu = c.sys.inputs().label(u);
    for (const auto& f : c.f_state()) {
      const Observable lhs = Ku.apply(f);
      const auto ef = iso.extend_f_to_aug(f);
      const Observable via_aug = RuKaug.apply(ef.observable());
      const Observable via_inf = RuRKinf.apply(iso.extend_aug_to_inf(ef).observable());
      for (const State& x : c.states()) {
        t.values(lhs(x), via_aug(x), [&] { return "(a) u*=" + lu + " f=" + f.label() + " at " + c.at(x); });
        t.values(lhs(x), via_inf(x), [&] { return "(c) u*=" + lu + " f=" + f.label() + " at " + c.at(x); });
      }
    }
  }
  for (const auto& g : c.ci_aug()) {
    const Observable lhs = Kaug.apply(g.observable());
    const Observable rhs = RKinf.apply(iso.extend_aug_to_inf(g).observable());
    for (const AugPoint& p : c.pairs())
      t.values(lhs(p), rhs(p), [&] { return "(b) g=" + g.observable().label() + " at " + c.at(p); });
  }
  return t.finish("C13", "");
}

std::vector<InputId> first_inputs(const InputSequence& s, std::size_t k) {
  std::vector<InputId> w(k);
  for (std::size_t j = 0; j < k; ++j) w[j] = s.at(j);
  return w;
}

CheckResult c14(Context& c, Tracker& t) {
  const auto iso = ci_isomorphisms();
  const auto Kinf = k_inf(c.sys);
  const std::size_t K = c.plan.max_word_length;
  const auto& fs = c.f_state();
  const auto& hs = c.ci_seq();
  // lifted[k][i] = (K^inf)^k applied to the lifted function i
  std::vector<std::vector<Observable>> lifted_f(K + 1), lifted_h(K + 1);
  std::vector<Observable> f_of_h;
  for (const auto& h : hs) f_of_h.push_back(iso.restrict_aug_to_f(iso.restrict_inf_to_aug(h)));
  for (std::size_t k = 0; k <= K; ++k) {
    const auto P = power(Kinf, k);
    for (const auto& f : fs)
      lifted_f[k].push_back(P.apply(iso.extend_aug_to_inf(iso.extend_f_to_aug(f)).observable()));
    for (const auto& h : hs) lifted_h[k].push_back(P.apply(h.observable()));
  }
  std::vector<Observable> h_state;
  for (const auto& h : hs) h_state.push_back(state_component(h));

  for (const SeqPoint& p : c.seq_points()) {
    const auto traj = simulate(c.sys, p.x, p.u, K);
    for (std::size_t k = 0; k <= K; ++k) {
      const auto word = first_inputs(p.u, k);
      const auto W = kcf_word(c.sys, word);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const Complex oracle = fs[i](traj[k]);
        const Observable wf = W.apply(fs[i]);
        auto where = [&] { return "(a) k=" + std::to_string(k) + " f=" + fs[i].label() + " at " + c.at(p); };
        t.values(oracle, wf(p.x), where);
        t.values(oracle, lifted_f[k][i](p), where);
      }
      for (std::size_t i = 0; i < hs.size(); ++i) {
        const Complex oracle = h_state[i](traj[k]);
        auto where = [&] {
          return "(b) k=" + std::to_string(k) + " h=" + hs[i].observable().label() + " at " + c.at(p);
        };
        t.values(oracle, lifted_h[k][i](p), where);
        t.values(oracle, W.apply(f_of_h[i])(p.x), where);
      }
    }
  }
  return t.finish("C14", "k <= " + std::to_string(K));
}

CheckResult c15(Context& c, Tracker& t) {
  const auto Kinf = k_inf(c.sys);
  const std::size_t K = c.plan.max_word_length;
  const auto& hs = c.ci_seq();
  std::vector<Observable> h_state;
  std::vector<std::vector<Observable>> lifted(K + 1);
  for (const auto& h : hs) h_state.push_back(state_component(h));
  for (std::size_t k = 0; k <= K; ++k) {
    const auto P = power(Kinf, k);
    for (const auto& h : hs) lifted[k].push_back(P.apply(h.observable()));
  }
  for (const SeqPoint& p : c.seq_points()) {
    const auto traj = simulate(c.sys, p.x, p.u, K);
    for (std::size_t k = 0; k <= K; ++k)
      for (std::size_t i = 0; i < hs.size(); ++i)
        t.values(lifted[k][i](p), h_state[i](traj[k]), [&] {
          return "k=" + std::to_string(k) + " h=" + hs[i].observable().label() + " at " + c.at(p);
        });
  }
  return t.finish("C15", "k <= " + std::to_string(K));
}

CheckResult c16(Context& c, Tracker& t) {
  const auto Kaug = k_aug(c.sys);
  for (const auto& g : c.ci_aug()) {
    const Observable kg = Kaug.apply(g.observable());
    const Observable gx = state_component(g);
    for (const AugPoint& p : c.pairs())
      t.values(kg(p), gx(c.sys.step(p.x, p.u)),
               [&] { return "g=" + g.observable().label() + " at " + c.at(p); });
  }

  // Two steps: the search over probes must agree with the point-level
  // oracle, which asks whether T(T(x,u0),u0) != T(T(x,u0),u1) anywhere.
  const auto& states = c.states();
  std::vector<Observable> probes = c.state_basis(DomainTag::StateOnly);
  const double tol = c.plan.tolerance;
  bool oracle = false;
  const auto inputs = c.inputs();
  for (const State& x : states) {
    for (InputId u0 : inputs) {
      const State y = c.sys.step(x, u0);
      for (InputId u1 : inputs) {
        if (state_distance(c.sys.step(y, u0), c.sys.step(y, u1)) > tol) oracle = true;
        if (oracle) break;
      }
      if (oracle) break;
    }
    if (oracle) break;
  }
  const auto w = find_multistep_witness(c.sys, probes, states, tol);
  t.count(1);
  std::string detail;
  if (w) {
    // re-evaluate the witness independently of the search
    const State y = c.sys.step(w->x, w->u0);
    const Complex aug = probes[w->probe](c.sys.step(y, w->u0));
    const Complex kcf = probes[w->probe](c.sys.step(y, w->u1));
    detail = "two-step witness: f=" + probes[w->probe].label() + " x=" +
             c.sys.states().describe(w->x) + " u0=" + c.sys.inputs().label(w->u0) +
             " u1=" + c.sys.inputs().label(w->u1) + ": (K^aug)^2 E f = " +
             fmt(w->augmented_value) + ", K_u0 K_u1 f = " + fmt(w->kcf_value);
    if (aug != w->augmented_value || kcf != w->kcf_value)
      t.fail("witness values do not reproduce: " + detail);
  } else {
    detail = "no two-step witness: T forgets the second input on every probed state";
  }
  if (oracle != w.has_value())
    t.fail(std::string("two-step witness search ") + (w ? "found" : "missed") +
           " a disagreement the point oracle " + (oracle ? "reports" : "rules out"));
  return t.finish("C16", detail);
}

CheckResult c17(Context& c, Tracker& t) {
  const auto& gs = c.f_state();
  for (const auto& [x0, word] : c.state_words()) {
    const auto W = kcf_word(c.sys, word);
    const InputSequence seq(word, {InputId{0}});
    const State xk = simulate(c.sys, x0, seq, word.size()).back();
    for (const auto& g : gs)
      t.values(W.apply(g)(x0), g(xk), [&] {
        std::string ws;
        for (InputId u : word) ws += c.sys.inputs().label(u);
        return "word [" + ws + "] g=" + g.label() + " at " + c.at(x0);
      });
  }
  return t.finish("C17", "words of length <= " + std::to_string(c.plan.max_word_length));
}

CheckResult c18(Context& c, Tracker& t) {
  const std::size_t K = 2 * c.plan.max_word_length;
  const RecoveryMethod methods[] = {RecoveryMethod::InfiniteSequence,
                                    RecoveryMethod::KCFComposition,
                                    RecoveryMethod::AugmentedStepwise};
  for (const SeqPoint& p : c.seq_points()) {
    const auto truth = simulate(c.sys, p.x, p.u, K);
    for (RecoveryMethod m : methods) {
      const auto rec = recover_trajectory(c.sys, p.x, p.u, K, m);
      for (std::size_t j = 0; j <= K; ++j)
        t.points(rec[j], truth[j], c.sys, [&] {
          return to_string(m) + " step " + std::to_string(j) + " from " + c.at(p);
        });
    }
  }
  return t.finish("C18", "k = " + std::to_string(K));
}

std::string describe_witness(const WellDefinednessWitness& w, std::span<const Observable> probes,
                             const ControlSystem& sys) {
  return "f=" + probes[w.probe].label() + " x=" + sys.states().describe(w.x) + " u=" +
         sys.inputs().label(w.u) + " y=T(x,u)=" + sys.states().describe(w.y) + ": f(y," +
         sys.inputs().label(w.u1) + ")=" + fmt(w.value1) + ", f(y," + sys.inputs().label(w.u2) +
         ")=" + fmt(w.value2);
}

CheckResult c19(Context& c, Tracker& t) {
  const bool singleton = c.sys.inputs().size() == 1;
  const double tol = c.plan.tolerance;
  using Reason = WellDefinednessReport::Reason;

  // Input-dependent probes: the product basis contains 1{x=y} w_j(u) for
  // every y, so a witness exists as soon as there are two inputs.
  const auto dependent = c.aug_basis();
  const auto r1 = input_aug_well_definedness(c.sys, dependent, tol);
  t.count(1);
  const Reason want1 = singleton ? Reason::SingletonInput : Reason::WitnessFound;
  if (r1.reason != want1)
    t.fail("input-dependent probes gave " + to_string(r1.reason) + ", expected " + to_string(want1));
  std::string detail = "input-dependent probes: " + to_string(r1.reason);
  if (r1.witness) {
    const auto& w = *r1.witness;
    detail += " (" + describe_witness(w, dependent, c.sys) + ")";
    const Complex v1 = dependent[w.probe](AugPoint{w.y, w.u1});
    const Complex v2 = dependent[w.probe](AugPoint{w.y, w.u2});
    if (!(w.y == c.sys.step(w.x, w.u)) || v1 != w.value1 || v2 != w.value2 ||
        std::abs(v1 - v2) <= tol)
      t.fail("witness does not reproduce: " + describe_witness(w, dependent, c.sys));
  }

  // Control-independent probes never yield a witness.
  const auto free_probes = c.state_basis(DomainTag::StateInput);
  const auto r2 = input_aug_well_definedness(c.sys, free_probes, tol);
  t.count(1);
  const Reason want2 = singleton ? Reason::SingletonInput : Reason::AllRestrictionsInputFree;
  if (r2.reason != want2)
    t.fail("control-independent probes gave " + to_string(r2.reason) + ", expected " +
           to_string(want2));
  detail += "; control-independent probes: " + to_string(r2.reason);
  return t.finish("C19", detail);
}

CheckResult c20(Context& c, Tracker& t) {
  const std::size_t K = c.plan.max_word_length;
  const auto Kinf = k_inf(c.sys);
  const auto Kaug = k_aug(c.sys);
  for (std::size_t n = 0; n < std::max<std::size_t>(c.plan.n_functions, 1); ++n) {
    const double re = c.rng.uniform(-1.0, 1.0);
    const Complex v(re, c.rng.uniform(-1.0, 1.0));
    const Observable cs = constant(DomainTag::StateSequence, v);
    const Observable ca = constant(DomainTag::StateInput, v);
    const Observable cx = constant(DomainTag::StateOnly, v);
    for (std::size_t k = 1; k <= K; ++k) {
      const Observable lifted = power(Kinf, k).apply(cs);
      for (const SeqPoint& p : c.seq_points())
        t.values(lifted(p), v, [&] { return "(K^inf)^" + std::to_string(k) + " c at " + c.at(p); });
    }
    const Observable ka = Kaug.apply(ca);
    for (const AugPoint& p : c.pairs()) t.values(ka(p), v, [&] { return "K^aug c at " + c.at(p); });
    for (InputId u : c.inputs()) {
      const Observable ku = k_u(c.sys, u).apply(cx);
      for (const State& x : c.states())
        t.values(ku(x), v, [&] { return "K_" + c.sys.inputs().label(u) + " c at " + c.at(x); });
    }
  }
  return t.finish("C20", "constant space carries no dynamics");
}

const std::map<std::string, CheckFn, std::less<>>& dispatch() {
  static const std::map<std::string, CheckFn, std::less<>> table = {
      {"C1", c1},   {"C2", c2},   {"C3", c3},   {"C4", c4},   {"C5", c5},
      {"C6", c6},   {"C7", c7},   {"C8", c8},   {"C9", c9},   {"C10", c10},
      {"C11", c11}, {"C12", c12}, {"C13", c13}, {"C14", c14}, {"C15", c15},
      {"C16", c16}, {"C17", c17}, {"C18", c18}, {"C19", c19}, {"C20", c20},
  };
  return table;
}

}  // namespace

const std::vector<CheckSpec>& check_registry() { return kRegistry; }

const CheckSpec& check_spec(std::string_view id) {
  for (const auto& s : kRegistry)
    if (s.id == id) return s;
  throw ConfigError("unknown check id '" + std::string(id) + "'");
}

bool applicable(const CheckSpec& spec, const ControlSystem& sys) {
  return spec.required == SystemKind::Any || sys.is_finite();
}

SamplePlan SamplePlan::exact() {
  SamplePlan p;
  p.exhaustive = true;
  p.tolerance = 0.0;
  p.n_points = 200;
  p.n_functions = 8;
  return p;
}

SamplePlan SamplePlan::sampled(std::size_t n_points, std::size_t n_functions, std::uint64_t seed,
                               double tolerance) {
  SamplePlan p;
  p.n_points = n_points;
  p.n_functions = n_functions;
  p.rng_seed = seed;
  p.tolerance = tolerance;
  return p;
}

void SamplePlan::validate(const ControlSystem& sys) const {
  if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be nonnegative");
  if (n_points == 0 || n_functions == 0)
    throw ConfigError("sample plan needs positive point and function counts");
  if (seq_period_max == 0) throw ConfigError("sequence period bound must be positive");
  if (max_word_length == 0) throw ConfigError("word length bound must be positive");
  if (exhaustive && !sys.is_finite())
    throw ConfigError("exhaustive plans need a finite state space; '" + sys.name() + "' is a box");
  if (tolerance == 0.0 && !(exhaustive && sys.is_finite()))
    throw ConfigError("tolerance 0 is only meaningful for exhaustive plans on finite systems");
}

CheckResult run_check(std::string_view id, const ControlSystem& sys, const SamplePlan& plan) {
  const CheckSpec& spec = check_spec(id);
  if (!applicable(spec, sys))
    throw ContractError(spec.id + " needs a finite system; '" + sys.name() + "' is a box");
  plan.validate(sys);
  Context ctx(spec.id, sys, plan);
  Tracker tracker(plan.tolerance);
  const CheckFn fn = dispatch().find(spec.id)->second;
  try {
    return fn(ctx, tracker);
  } catch (const ContractError& e) {
    tracker.fail(std::string("contract violated: ") + e.what());
  } catch (const DomainError& e) {
    tracker.fail(std::string("domain error: ") + e.what());
  }
  return tracker.finish(spec.id, "");
}

std::size_t SuiteReport::passed() const {
  return static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass; }));
}

std::size_t SuiteReport::failed() const { return results.size() - passed(); }

SuiteReport run_all(const ControlSystem& sys, const SamplePlan& plan,
                    std::span<const std::string> only) {
  plan.validate(sys);
  SuiteReport report;
  report.system = sys.name();
  report.plan = plan;
  for (const auto& id : only) check_spec(id);
  for (const auto& spec : kRegistry) {
    if (!only.empty() && std::find(only.begin(), only.end(), spec.id) == only.end()) continue;
    if (!applicable(spec, sys)) {
      report.skipped.push_back(spec.id);
      continue;
    }
    report.results.push_back(run_check(spec.id, sys, plan));
  }
  return report;
}

std::string to_json(const SuiteReport& report) {
  using nlohmann::ordered_json;
  auto number = [](double v) -> ordered_json {
    if (std::isfinite(v)) return v;
    return "inf";
  };
  ordered_json plan = {
      {"exhaustive", report.plan.exhaustive},
      {"n_points", report.plan.n_points},
      {"n_functions", report.plan.n_functions},
      {"seq_prefix_max", report.plan.seq_prefix_max},
      {"seq_period_max", report.plan.seq_period_max},
      {"max_word_length", report.plan.max_word_length},
      {"rng_seed", report.plan.rng_seed},
      {"tolerance", report.plan.tolerance},
  };
  ordered_json checks = ordered_json::array();
  for (const auto& r : report.results) {
    ordered_json o = {{"id", r.id},
                      {"pass", r.pass},
                      {"max_abs_error", number(r.max_abs_error)},
                      {"n_evaluated", r.n_evaluated}};
    o["counterexample"] = r.counterexample ? ordered_json(*r.counterexample) : ordered_json(nullptr);
    if (!r.detail.empty()) o["detail"] = r.detail;
    checks.push_back(std::move(o));
  }
  ordered_json out = {{"system", report.system},
                      {"plan", plan},
                      {"passed", report.passed()},
                      {"failed", report.failed()},
                      {"skipped", report.skipped},
                      {"checks", checks}};
  return out.dump(2) + "\n";
}

void write_table(const SuiteReport& report, std::ostream& os) {
  os << "system " << report.system << (report.plan.exhaustive ? " (exhaustive" : " (sampled")
     << ", tol " << fmt(report.plan.tolerance) << ")\n";
  os << std::left << std::setw(5) << "id" << std::setw(6) << "pass" << std::setw(14)
     << "max_abs_err" << std::setw(12) << "evaluated" << "claim\n";
  for (const auto& r : report.results) {
    std::ostringstream err;
    err << std::setprecision(3) << r.max_abs_error;
    os << std::left << std::setw(5) << r.id << std::setw(6) << (r.pass ? "ok" : "FAIL")
       << std::setw(14) << err.str() << std::setw(12) << r.n_evaluated
       << check_spec(r.id).title << "\n";
    if (!r.detail.empty()) os << "     " << r.detail << "\n";
    if (r.counterexample) os << "     counterexample: " << *r.counterexample << "\n";
  }
  for (const auto& id : report.skipped) os << std::left << std::setw(5) << id << "skip  (finite systems only)\n";
  os << report.passed() << "/" << report.results.size() << " passed";
  if (!report.skipped.empty()) os << ", " << report.skipped.size() << " skipped";
  os << "\n";
}

}  // namespace koopman
