#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "koopman/system.hpp"

namespace koopman {

using Complex = std::complex<double>;

/// Which of X, X x U or X x l(U) an observable lives on.
enum class DomainTag { StateOnly, StateInput, StateSequence };

using Point = std::variant<State, AugPoint, SeqPoint>;

DomainTag domain_of(const Point& p);
/// The X coordinate of any point.
const State& state_of(const Point& p);
std::string to_string(DomainTag d);
std::string describe(const Point& p, const ControlSystem& sys);

/// Complex-valued function on one tagged domain. Immutable; evaluation is
/// pure, so observables can be shared across threads.
class Observable {
 public:
  /// The callback only ever receives points of `domain`.
  using Fn = std::function<Complex(const Point&)>;

  Observable(DomainTag domain, Fn fn, std::string label);

  DomainTag domain() const { return domain_; }
  const std::string& label() const { return label_; }

  /// Throws DomainError when p is not a point of domain().
  Complex operator()(const Point& p) const;

 private:
  DomainTag domain_;
  Fn fn_;
  std::string label_;
};

inline Complex eval(const Observable& obs, const Point& p) { return obs(p); }

// Built-in constructors. The state-based ones read only the X coordinate of
// their argument, so they can be placed on any domain.

Observable constant_one(DomainTag domain);
Observable constant(DomainTag domain, Complex c);
/// 1 at `target`, 0 elsewhere (exact comparison of states).
Observable indicator(const StateSpace& space, const State& target,
                     DomainTag domain = DomainTag::StateOnly);
Observable coordinate(const StateSpace& space, std::size_t i,
                      DomainTag domain = DomainTag::StateOnly);
/// prod_i x_i^{exponents[i]}.
Observable monomial(const StateSpace& space, std::vector<unsigned> exponents,
                    DomainTag domain = DomainTag::StateOnly);
/// w(u) on X x U, or w(u(lag)) on X x l(U); table has one entry per input.
Observable input_weight(const InputSet& inputs, std::vector<Complex> table, DomainTag domain,
                        std::size_t lag = 0);
/// Generic observable depending on the state only.
Observable state_function(DomainTag domain, std::string label,
                          std::function<Complex(const State&)> fn);

/// sum_i coeffs[i] * obs[i]; all observables must share one domain.
Observable linear_combine(std::span<const Complex> coeffs, std::span<const Observable> obs);
Observable product(const Observable& f, const Observable& g);

// Control independence.

struct CIMode {
  enum class Kind { ExhaustiveExact, Sampled, ByConstruction };
  Kind kind = Kind::ExhaustiveExact;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::size_t prefix_max = 4;
  std::size_t period_max = 3;

  static CIMode exhaustive() { return {}; }
  static CIMode sampled(std::size_t count, std::uint64_t seed) {
    return {Kind::Sampled, count, seed, 4, 3};
  }
};

struct CIWitness {
  State x;
  std::variant<std::pair<InputId, InputId>, std::pair<InputSequence, InputSequence>> inputs;
  Complex first;
  Complex second;
};

struct CIReport {
  bool independent = true;
  std::optional<CIWitness> witness;
  CIMode mode;
  std::size_t n_evaluated = 0;
};

/// ExhaustiveExact scans every (x, u1, u2) of a finite X x U. Sampled draws
/// mode.count states and input pairs (or sequence pairs); a positive answer
/// is then only a failure to refute. Values differing by more than `tol`
/// count as a witness.
CIReport is_control_independent(const Observable& obs, const ControlSystem& sys, CIMode mode,
                                double tol = 0.0);

class CIIsomorphisms;

/// An observable on X x U or X x l(U) together with the report that
/// certifies it as control-independent.
class ControlIndependent {
 public:
  const Observable& observable() const { return obs_; }
  const CIReport& report() const { return report_; }
  DomainTag domain() const { return obs_.domain(); }
  Complex operator()(const Point& p) const { return obs_(p); }

 private:
  ControlIndependent(Observable obs, CIReport report)
      : obs_(std::move(obs)), report_(std::move(report)) {}
  friend ControlIndependent certify_control_independent(const Observable&, const ControlSystem&,
                                                        CIMode, double);
  friend class CIIsomorphisms;

  Observable obs_;
  CIReport report_;
};

/// Throws ContractError (with the witness) if obs is not control-independent.
ControlIndependent certify_control_independent(const Observable& obs, const ControlSystem& sys,
                                               CIMode mode, double tol = 0.0);

/// f_X(x) = f(x, w) for the canonical witness w: the first input label, or
/// the constant sequence of it.
Observable state_component(const ControlIndependent& f);
/// Certifies first; throws ContractError if obs is not control-independent.
Observable state_component(const Observable& obs, const ControlSystem& sys, CIMode mode,
                           double tol = 0.0);

// Finite tabulation.

/// Canonical enumeration: states in declaration order, pairs state-major.
/// Throws UnsupportedError for X x l(U) or a real box.
std::vector<Point> enumerate_domain(const ControlSystem& sys, DomainTag domain);
std::vector<std::string> enumeration_labels(const ControlSystem& sys, DomainTag domain);
Eigen::VectorXcd tabulate(const Observable& obs, const ControlSystem& sys);

}  // namespace koopman
