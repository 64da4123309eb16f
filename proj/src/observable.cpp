#include "koopman/observable.hpp"

#include <cmath>
#include <sstream>

#include "koopman/errors.hpp"
#include "koopman/sampling.hpp"

namespace koopman {

namespace {

std::string format_complex(Complex c) {
  std::ostringstream os;
  os.precision(6);
  if (c.imag() == 0.0)
    os << c.real();
  else
    os << "(" << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i)";
  return os.str();
}

std::string domain_suffix(DomainTag d) {
  switch (d) {
    case DomainTag::StateOnly: return "";
    case DomainTag::StateInput: return "@XxU";
    case DomainTag::StateSequence: return "@Xxl(U)";
  }
  return "";
}

}  // namespace

DomainTag domain_of(const Point& p) {
  switch (p.index()) {
    case 0: return DomainTag::StateOnly;
    case 1: return DomainTag::StateInput;
    default: return DomainTag::StateSequence;
  }
}

const State& state_of(const Point& p) {
  return std::visit(
      [](const auto& q) -> const State& {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, State>)
          return q;
        else
          return q.x;
      },
      p);
}

std::string to_string(DomainTag d) {
  switch (d) {
    case DomainTag::StateOnly: return "X";
    case DomainTag::StateInput: return "XxU";
    case DomainTag::StateSequence: return "Xxl(U)";
  }
  return "?";
}

std::string describe(const Point& p, const ControlSystem& sys) {
  const auto& X = sys.states();
  return std::visit(
      [&](const auto& q) -> std::string {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, State>)
          return "x=" + X.describe(q);
        else if constexpr (std::is_same_v<T, AugPoint>)
          return "(x=" + X.describe(q.x) + ", u=" + sys.inputs().label(q.u) + ")";
        else
          return "(x=" + X.describe(q.x) + ", u=" + q.u.describe(sys.inputs()) + ")";
      },
      p);
}

Observable::Observable(DomainTag domain, Fn fn, std::string label)
    : domain_(domain), fn_(std::move(fn)), label_(std::move(label)) {
  if (!fn_) throw ContractError("observable needs an evaluation function");
}

Complex Observable::operator()(const Point& p) const {
  if (domain_of(p) != domain_)
    throw DomainError("observable '" + label_ + "' lives on " + to_string(domain_) +
                      ", evaluated on a point of " + to_string(domain_of(p)));
  return fn_(p);
}

Observable constant_one(DomainTag domain) { return constant(domain, 1.0); }

Observable constant(DomainTag domain, Complex c) {
  return Observable(domain, [c](const Point&) { return c; },
                    (c == Complex(1.0) ? std::string("1") : format_complex(c)) +
                        domain_suffix(domain));
}

Observable indicator(const StateSpace& space, const State& target, DomainTag domain) {
  space.require(target);
  return Observable(
      domain, [target](const Point& p) { return Complex(state_of(p) == target ? 1.0 : 0.0); },
      "1{x=" + space.describe(target) + "}" + domain_suffix(domain));
}

Observable coordinate(const StateSpace& space, std::size_t i, DomainTag domain) {
  if (i >= space.dimension()) throw DomainError("coordinate index out of range");
  return Observable(
      domain, [space, i](const Point& p) { return Complex(space.coordinate(state_of(p), i)); },
      "x" + std::to_string(i) + domain_suffix(domain));
}

Observable monomial(const StateSpace& space, std::vector<unsigned> exponents, DomainTag domain) {
  if (exponents.size() != space.dimension())
    throw DomainError("monomial needs one exponent per coordinate");
  std::string label;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] == 0) continue;
    if (!label.empty()) label += "*";
    label += "x" + std::to_string(i);
    if (exponents[i] > 1) label += "^" + std::to_string(exponents[i]);
  }
  if (label.empty()) label = "1";
  return Observable(
      domain,
      [space, exponents](const Point& p) {
        const State& x = state_of(p);
        double v = 1.0;
        for (std::size_t i = 0; i < exponents.size(); ++i)
          for (unsigned e = 0; e < exponents[i]; ++e) v *= space.coordinate(x, i);
        return Complex(v);
      },
      label + domain_suffix(domain));
}

Observable input_weight(const InputSet& inputs, std::vector<Complex> table, DomainTag domain,
                        std::size_t lag) {
  if (table.size() != inputs.size()) throw DomainError("input weight needs one entry per input");
  if (domain == DomainTag::StateOnly) throw DomainError("input weight needs an input coordinate");
  if (domain == DomainTag::StateInput && lag != 0)
    throw DomainError("a lag needs a sequence domain");
  std::string label = "w(u";
  if (domain == DomainTag::StateSequence) label += "(" + std::to_string(lag) + ")";
  label += ")[";
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i) label += ",";
    label += format_complex(table[i]);
  }
  label += "]";
  return Observable(
      domain,
      [table, lag](const Point& p) {
        if (const auto* a = std::get_if<AugPoint>(&p)) return table.at(a->u.value);
        return table.at(std::get<SeqPoint>(p).u.at(lag).value);
      },
      label);
}

Observable state_function(DomainTag domain, std::string label,
                          std::function<Complex(const State&)> fn) {
  return Observable(
      domain, [fn = std::move(fn)](const Point& p) { return fn(state_of(p)); },
      label + domain_suffix(domain));
}

Observable linear_combine(std::span<const Complex> coeffs, std::span<const Observable> obs) {
  if (coeffs.size() != obs.size()) throw ContractError("linear_combine needs one coefficient per term");
  if (obs.empty()) throw ContractError("linear_combine needs at least one term");
  const DomainTag d = obs.front().domain();
  std::string label;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].domain() != d) throw DomainMismatch("linear_combine over mixed domains");
    if (i) label += " + ";
    label += format_complex(coeffs[i]) + "*" + obs[i].label();
  }
  if (obs.size() > 4) label = "combo[" + std::to_string(obs.size()) + " terms]";
  std::vector<Complex> c(coeffs.begin(), coeffs.end());
  std::vector<Observable> terms(obs.begin(), obs.end());
  return Observable(
      d,
      [c = std::move(c), terms = std::move(terms)](const Point& p) {
        Complex acc = 0.0;
        for (std::size_t i = 0; i < terms.size(); ++i) acc += c[i] * terms[i](p);
        return acc;
      },
      label);
}

Observable product(const Observable& f, const Observable& g) {
  if (f.domain() != g.domain()) throw DomainMismatch("product over mixed domains");
  return Observable(
      f.domain(), [f, g](const Point& p) { return f(p) * g(p); },
      f.label() + "*" + g.label());
}

CIReport is_control_independent(const Observable& obs, const ControlSystem& sys, CIMode mode,
                                double tol) {
  if (obs.domain() == DomainTag::StateOnly)
    throw ContractError("control independence is defined on X x U or X x l(U)");
  CIReport report;
  report.mode = mode;
  const auto inputs = sys.inputs().all();

  auto differs = [tol](Complex a, Complex b) { return std::abs(a - b) > tol; };

  if (mode.kind == CIMode::Kind::ExhaustiveExact) {
    if (obs.domain() != DomainTag::StateInput || !sys.is_finite())
      throw UnsupportedError("exhaustive control-independence check needs finite X x U");
    for (std::size_t i = 0; i < sys.states().size(); ++i) {
      const State x = State::finite(i);
      const Complex ref = obs(AugPoint{x, inputs.front()});
      ++report.n_evaluated;
      for (std::size_t j = 1; j < inputs.size(); ++j) {
        const Complex v = obs(AugPoint{x, inputs[j]});
        ++report.n_evaluated;
        if (differs(ref, v)) {
          report.independent = false;
          report.witness = CIWitness{x, std::pair{inputs.front(), inputs[j]}, ref, v};
          return report;
        }
      }
    }
    return report;
  }

  if (mode.kind != CIMode::Kind::Sampled || mode.count == 0)
    throw ContractError("sampled control-independence check needs a positive sample count");
  Rng rng(mode.seed);
  for (std::size_t n = 0; n < mode.count; ++n) {
    const State x = sample_state(sys.states(), rng);
    if (obs.domain() == DomainTag::StateInput) {
      const Complex ref = obs(AugPoint{x, inputs.front()});
      ++report.n_evaluated;
      for (std::size_t j = 1; j < inputs.size(); ++j) {
        const Complex v = obs(AugPoint{x, inputs[j]});
        ++report.n_evaluated;
        if (differs(ref, v)) {
          report.independent = false;
          report.witness = CIWitness{x, std::pair{inputs.front(), inputs[j]}, ref, v};
          return report;
        }
      }
    } else {
      auto s1 = sample_sequence(sys.inputs(), rng, mode.prefix_max, mode.period_max);
      auto s2 = sample_sequence(sys.inputs(), rng, mode.prefix_max, mode.period_max);
      const Complex a = obs(SeqPoint{x, s1});
      const Complex b = obs(SeqPoint{x, s2});
      report.n_evaluated += 2;
      if (differs(a, b)) {
        report.independent = false;
        report.witness = CIWitness{x, std::pair{std::move(s1), std::move(s2)}, a, b};
        return report;
      }
    }
  }
  return report;
}

ControlIndependent certify_control_independent(const Observable& obs, const ControlSystem& sys,
                                               CIMode mode, double tol) {
  CIReport report = is_control_independent(obs, sys, mode, tol);
  if (!report.independent) {
    throw ContractError("'" + obs.label() + "' depends on the input at x=" +
                        sys.states().describe(report.witness->x));
  }
  return ControlIndependent(obs, std::move(report));
}

Observable state_component(const ControlIndependent& f) {
  const Observable& g = f.observable();
  const InputId w{0};
  if (g.domain() == DomainTag::StateInput)
    return Observable(
        DomainTag::StateOnly,
        [g, w](const Point& p) { return g(AugPoint{std::get<State>(p), w}); },
        "stateof(" + g.label() + ")");
  const InputSequence cw = InputSequence::constant(w);
  return Observable(
      DomainTag::StateOnly,
      [g, cw](const Point& p) { return g(SeqPoint{std::get<State>(p), cw}); },
      "stateof(" + g.label() + ")");
}

Observable state_component(const Observable& obs, const ControlSystem& sys, CIMode mode,
                           double tol) {
  return state_component(certify_control_independent(obs, sys, mode, tol));
}

std::vector<Point> enumerate_domain(const ControlSystem& sys, DomainTag domain) {
  if (domain == DomainTag::StateSequence)
    throw UnsupportedError("X x l(U) has no finite enumeration");
  if (!sys.is_finite()) throw UnsupportedError("a real box has no finite enumeration");
  std::vector<Point> out;
  for (std::size_t i = 0; i < sys.states().size(); ++i) {
    if (domain == DomainTag::StateOnly) {
      out.emplace_back(State::finite(i));
      continue;
    }
    for (InputId u : sys.inputs().all()) out.emplace_back(AugPoint{State::finite(i), u});
  }
  return out;
}

std::vector<std::string> enumeration_labels(const ControlSystem& sys, DomainTag domain) {
  std::vector<std::string> out;
  for (const Point& p : enumerate_domain(sys, domain)) {
    if (const auto* a = std::get_if<AugPoint>(&p))
      out.push_back(sys.states().describe(a->x) + ":" + sys.inputs().label(a->u));
    else
      out.push_back(sys.states().describe(std::get<State>(p)));
  }
  return out;
}

Eigen::VectorXcd tabulate(const Observable& obs, const ControlSystem& sys) {
  const auto points = enumerate_domain(sys, obs.domain());
  Eigen::VectorXcd v(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) v(static_cast<Eigen::Index>(i)) = obs(points[i]);
  return v;
}

}  // namespace koopman
