#include "koopman/operators.hpp"

#include <memory>
#include <ostream>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

using SystemPtr = std::shared_ptr<const ControlSystem>;

SystemPtr share(const ControlSystem& sys) { return std::make_shared<const ControlSystem>(sys); }

std::string input_label(const ControlSystem& sys, InputId u) { return sys.inputs().label(u); }

// Column of a finite enumerated point in the canonical ordering.
Eigen::Index enumeration_index(const Point& p, const ControlSystem& sys) {
  if (const auto* x = std::get_if<State>(&p)) return static_cast<Eigen::Index>(x->index());
  const auto& a = std::get<AugPoint>(p);
  return static_cast<Eigen::Index>(a.x.index() * sys.inputs().size() + a.u.value);
}

}  // namespace

Point PointMap::operator()(const Point& p) const {
  if (domain_of(p) != from)
    throw DomainError("map '" + label + "' expects a point of " + to_string(from));
  return fn(p);
}

PointMap identity_map(DomainTag domain) {
  return {domain, domain, [](const Point& p) { return p; }, "id_" + to_string(domain)};
}

PointMap map_restrict_seq_to_pair() {
  return {DomainTag::StateSequence, DomainTag::StateInput,
          [](const Point& p) -> Point { return restrict_seq_to_pair(std::get<SeqPoint>(p)); },
          "R[Xxl(U)->XxU]"};
}

PointMap map_extend_pair_to_seq() {
  return {DomainTag::StateInput, DomainTag::StateSequence,
          [](const Point& p) -> Point { return extend_pair_to_seq(std::get<AugPoint>(p)); },
          "E[XxU->Xxl(U)]"};
}

PointMap map_restrict_pair_to_state() {
  return {DomainTag::StateInput, DomainTag::StateOnly,
          [](const Point& p) -> Point { return restrict_pair_to_state(std::get<AugPoint>(p)); },
          "R[XxU->X]"};
}

PointMap map_extend_state_to_pair(const ControlSystem& sys, InputId u) {
  sys.inputs().require(u);
  return {DomainTag::StateOnly, DomainTag::StateInput,
          [u](const Point& p) -> Point { return extend_state_to_pair(std::get<State>(p), u); },
          "E_" + input_label(sys, u)};
}

PointMap map_augmented(const ControlSystem& sys) {
  auto s = share(sys);
  return {DomainTag::StateInput, DomainTag::StateInput,
          [s](const Point& p) -> Point { return AugmentedMap(*s)(std::get<AugPoint>(p)); },
          "T^aug"};
}

PointMap map_constant_input(const ControlSystem& sys, InputId u) {
  sys.inputs().require(u);
  auto s = share(sys);
  return {DomainTag::StateOnly, DomainTag::StateOnly,
          [s, u](const Point& p) -> Point { return s->step(std::get<State>(p), u); },
          "T_" + input_label(sys, u)};
}

PointMap map_infinite_sequence(const ControlSystem& sys) {
  auto s = share(sys);
  return {DomainTag::StateSequence, DomainTag::StateSequence,
          [s](const Point& p) -> Point { return InfiniteSequenceMap(*s)(std::get<SeqPoint>(p)); },
          "T^inf"};
}

PointMap map_transition(const ControlSystem& sys) {
  auto s = share(sys);
  return {DomainTag::StateInput, DomainTag::StateOnly,
          [s](const Point& p) -> Point {
            const auto& a = std::get<AugPoint>(p);
            return s->step(a.x, a.u);
          },
          "T"};
}

PointMap compose_maps(const PointMap& outer, const PointMap& inner) {
  if (inner.to != outer.from)
    throw DomainMismatch("cannot compose " + outer.label + " after " + inner.label);
  auto o = outer.fn;
  auto i = inner.fn;
  return {inner.from, outer.to, [o, i](const Point& p) { return o(i(p)); },
          outer.label + " o " + inner.label};
}

CompositionOperator::CompositionOperator(DomainTag source, DomainTag target, Map precompose,
                                         std::string label)
    : source_(source), target_(target), map_(std::move(precompose)), label_(std::move(label)) {
  if (!map_) throw ContractError("composition operator needs a map");
}

Point CompositionOperator::precompose(const Point& p) const {
  if (domain_of(p) != target_)
    throw DomainError("operator '" + label_ + "' produces observables on " + to_string(target_));
  return map_(p);
}

Observable CompositionOperator::apply(const Observable& f) const {
  if (f.domain() != source_)
    throw DomainMismatch("operator '" + label_ + "' acts on observables over " +
                         to_string(source_) + ", but '" + f.label() + "' lives on " +
                         to_string(f.domain()));
  auto m = map_;
  return Observable(
      target_, [f, m](const Point& p) { return f(m(p)); }, label_ + "[" + f.label() + "]");
}

CompositionOperator composition_operator(const PointMap& m) {
  return CompositionOperator(m.to, m.from, m.fn, "C(" + m.label + ")");
}

CompositionOperator koopman_of_map(const PointMap& m) {
  if (m.from != m.to) throw DomainMismatch("Koopman operator needs an endomorphism, got " + m.label);
  return CompositionOperator(m.to, m.from, m.fn, "K(" + m.label + ")");
}

CompositionOperator identity_operator(DomainTag domain) {
  return CompositionOperator(domain, domain, [](const Point& p) { return p; },
                             "id[" + to_string(domain) + "]");
}

CompositionOperator k_naive(const ControlSystem& sys) {
  auto m = map_transition(sys);
  return CompositionOperator(DomainTag::StateOnly, DomainTag::StateInput, m.fn, "K^naive");
}

CompositionOperator k_aug(const ControlSystem& sys) {
  auto m = map_augmented(sys);
  return CompositionOperator(m.to, m.from, m.fn, "K^aug");
}

CompositionOperator k_u(const ControlSystem& sys, InputId u) {
  auto m = map_constant_input(sys, u);
  return CompositionOperator(m.to, m.from, m.fn, "K_" + input_label(sys, u));
}

CompositionOperator k_inf(const ControlSystem& sys) {
  auto m = map_infinite_sequence(sys);
  return CompositionOperator(m.to, m.from, m.fn, "K^inf");
}

CompositionOperator restriction_inf_to_aug() {
  auto m = map_extend_pair_to_seq();
  return CompositionOperator(m.to, m.from, m.fn, "R[Finf->Faug]");
}

CompositionOperator extension_aug_to_inf() {
  auto m = map_restrict_seq_to_pair();
  return CompositionOperator(m.to, m.from, m.fn, "E[Faug->Finf]");
}

CompositionOperator restriction_aug_to_f(const ControlSystem& sys, InputId u) {
  auto m = map_extend_state_to_pair(sys, u);
  return CompositionOperator(m.to, m.from, m.fn, "R_" + input_label(sys, u));
}

CompositionOperator extension_f_to_aug() {
  auto m = map_restrict_pair_to_state();
  return CompositionOperator(m.to, m.from, m.fn, "E[F->Faug]");
}

CompositionOperator compose(const CompositionOperator& outer, const CompositionOperator& inner) {
  if (inner.target_domain() != outer.source_domain())
    throw DomainMismatch("cannot apply '" + outer.label() + "' (acts on " +
                         to_string(outer.source_domain()) + ") after '" + inner.label() +
                         "' (produces " + to_string(inner.target_domain()) + ")");
  return CompositionOperator(
      inner.source_domain(), outer.target_domain(),
      [outer, inner](const Point& p) { return inner.precompose(outer.precompose(p)); },
      outer.label() + " " + inner.label());
}

CompositionOperator power(const CompositionOperator& op, std::size_t k) {
  if (!op.is_endomorphism())
    throw DomainMismatch("power needs an endomorphism, '" + op.label() + "' is not");
  if (k == 0) return identity_operator(op.source_domain());
  return CompositionOperator(
      op.source_domain(), op.target_domain(),
      [op, k](const Point& p) {
        Point q = p;
        for (std::size_t i = 0; i < k; ++i) q = op.precompose(q);
        return q;
      },
      "(" + op.label() + ")^" + std::to_string(k));
}

CompositionOperator kcf_word(const ControlSystem& sys, std::span<const InputId> inputs) {
  for (InputId u : inputs) sys.inputs().require(u);
  if (inputs.empty()) return identity_operator(DomainTag::StateOnly);
  std::string label;
  for (InputId u : inputs) label += "K_" + input_label(sys, u);
  auto s = share(sys);
  std::vector<InputId> word(inputs.begin(), inputs.end());
  return CompositionOperator(
      DomainTag::StateOnly, DomainTag::StateOnly,
      [s, word](const Point& p) -> Point {
        State x = std::get<State>(p);
        for (InputId u : word) x = s->step(x, u);
        return x;
      },
      label);
}

ControlIndependent CIIsomorphisms::wrap(Observable obs) {
  CIReport report;
  report.mode.kind = CIMode::Kind::ByConstruction;
  return ControlIndependent(std::move(obs), std::move(report));
}

ControlIndependent CIIsomorphisms::extend_aug_to_inf(const ControlIndependent& g) const {
  if (g.domain() != DomainTag::StateInput)
    throw ContractError("extension to F^inf_ci expects an observable on X x U");
  return wrap(extension_aug_to_inf().apply(g.observable()));
}

ControlIndependent CIIsomorphisms::restrict_inf_to_aug(const ControlIndependent& h) const {
  if (h.domain() != DomainTag::StateSequence)
    throw ContractError("restriction to F^aug_ci expects an observable on X x l(U)");
  return wrap(restriction_inf_to_aug().apply(h.observable()));
}

ControlIndependent CIIsomorphisms::extend_f_to_aug(const Observable& f) const {
  return wrap(extension_f_to_aug().apply(f));
}

Observable CIIsomorphisms::restrict_aug_to_f(const ControlIndependent& g, InputId u) const {
  if (g.domain() != DomainTag::StateInput)
    throw ContractError("restriction to F expects an observable on X x U");
  const Observable& f = g.observable();
  return Observable(
      DomainTag::StateOnly, [f, u](const Point& p) { return f(AugPoint{std::get<State>(p), u}); },
      "R_ci[" + f.label() + "]");
}

MatrixOperator to_matrix(const CompositionOperator& op, const ControlSystem& sys) {
  if (op.source_domain() == DomainTag::StateSequence ||
      op.target_domain() == DomainTag::StateSequence)
    throw UnsupportedError("'" + op.label() + "' acts on functions of infinite sequences; " +
                           "it has no finite matrix");
  const auto rows = enumerate_domain(sys, op.target_domain());
  const auto cols = enumerate_domain(sys, op.source_domain());
  MatrixOperator m{op.target_domain(), op.source_domain(),
                   enumeration_labels(sys, op.target_domain()),
                   enumeration_labels(sys, op.source_domain()),
                   Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows.size()),
                                          static_cast<Eigen::Index>(cols.size()))};
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.entries(static_cast<Eigen::Index>(i), enumeration_index(op.precompose(rows[i]), sys)) = 1.0;
  return m;
}

void write_matrix_csv(const MatrixOperator& m, std::ostream& os) {
  os << to_string(m.row_domain) << "\\" << to_string(m.col_domain);
  for (const auto& c : m.col_labels) os << "," << c;
  os << "\n";
  const auto old_precision = os.precision(17);
  for (Eigen::Index i = 0; i < m.entries.rows(); ++i) {
    os << m.row_labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.entries.cols(); ++j) {
      const Complex v = m.entries(i, j);
      os << ",";
      if (v.imag() == 0.0)
        os << v.real();
      else
        os << v.real() << (v.imag() < 0 ? "" : "+") << v.imag() << "i";
    }
    os << "\n";
  }
  os.precision(old_precision);
}

WellDefinednessReport input_aug_well_definedness(const ControlSystem& sys,
                                                 std::span<const Observable> probes,
                                                 double tol) {
  if (!sys.is_finite()) throw UnsupportedError("well-definedness search needs finite X and U");
  if (probes.empty()) throw ContractError("well-definedness search needs at least one probe");
  for (const auto& f : probes)
    if (f.domain() != DomainTag::StateInput)
      throw DomainMismatch("probe '" + f.label() + "' must live on X x U");

  WellDefinednessReport report;
  if (sys.inputs().size() == 1) {
    report.reason = WellDefinednessReport::Reason::SingletonInput;
    return report;
  }
  const auto inputs = sys.inputs().all();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    for (std::size_t i = 0; i < sys.states().size(); ++i) {
      const State x = State::finite(i);
      for (InputId u : inputs) {
        const State y = sys.step(x, u);
        for (std::size_t a = 0; a < inputs.size(); ++a) {
          const Complex v1 = probes[k](AugPoint{y, inputs[a]});
          for (std::size_t b = a + 1; b < inputs.size(); ++b) {
            const Complex v2 = probes[k](AugPoint{y, inputs[b]});
            if (std::abs(v1 - v2) > tol) {
              report.well_defined = false;
              report.reason = WellDefinednessReport::Reason::WitnessFound;
              report.witness = WellDefinednessWitness{k, x, u, y, inputs[a], inputs[b], v1, v2};
              return report;
            }
          }
        }
      }
    }
  }
  report.reason = WellDefinednessReport::Reason::AllRestrictionsInputFree;
  return report;
}

std::string to_string(WellDefinednessReport::Reason r) {
  switch (r) {
    case WellDefinednessReport::Reason::SingletonInput: return "SingletonInput";
    case WellDefinednessReport::Reason::AllRestrictionsInputFree: return "AllRestrictionsInputFree";
    case WellDefinednessReport::Reason::WitnessFound: return "WitnessFound";
  }
  return "?";
}

std::optional<MultistepWitness> find_multistep_witness(const ControlSystem& sys,
                                                       std::span<const Observable> probes,
                                                       std::span<const State> states,
                                                       double tol) {
  const auto two_aug = power(k_aug(sys), 2);
  const auto extend = extension_f_to_aug();
  const auto inputs = sys.inputs().all();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Observable lifted = two_aug.apply(extend.apply(probes[k]));
    for (const State& x : states) {
      for (InputId u0 : inputs) {
        const Complex aug_value = lifted(AugPoint{x, u0});
        for (InputId u1 : inputs) {
          const std::vector<InputId> word{u0, u1};
          const Complex kcf_value = kcf_word(sys, word).apply(probes[k])(x);
          if (std::abs(aug_value - kcf_value) > tol)
            return MultistepWitness{k, x, u0, u1, aug_value, kcf_value};
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace koopman
