#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "koopman/observable.hpp"
#include "koopman/system.hpp"

namespace koopman {

/// A named total map between two tagged domains.
struct PointMap {
  DomainTag from;
  DomainTag to;
  std::function<Point(const Point&)> fn;
  std::string label;

  /// Throws DomainError when p is not a point of `from`.
  Point operator()(const Point& p) const;
};

PointMap identity_map(DomainTag domain);
/// R : X x l(U) -> X x U, (x, u) -> (x, u(0)).
PointMap map_restrict_seq_to_pair();
/// E : X x U -> X x l(U), (x, u) -> (x, (u, u, ...)).
PointMap map_extend_pair_to_seq();
/// R : X x U -> X, (x, u) -> x.
PointMap map_restrict_pair_to_state();
/// E_u* : X -> X x U, x -> (x, u*).
PointMap map_extend_state_to_pair(const ControlSystem& sys, InputId u);
/// T^aug on X x U.
PointMap map_augmented(const ControlSystem& sys);
/// T_u* on X.
PointMap map_constant_input(const ControlSystem& sys, InputId u);
/// T^inf on X x l(U).
PointMap map_infinite_sequence(const ControlSystem& sys);
/// T itself, X x U -> X.
PointMap map_transition(const ControlSystem& sys);
/// outer o inner.
PointMap compose_maps(const PointMap& outer, const PointMap& inner);

/// Linear operator f -> f o m. It maps observables on `source_domain` to
/// observables on `target_domain`, so m goes from target to source points.
///
/// Composition convention: compose(A, B) applies B first, then A. Its
/// precompose map is p -> m_B(m_A(p)) and its matrix is M_A * M_B.
class CompositionOperator {
 public:
  using Map = std::function<Point(const Point&)>;

  CompositionOperator(DomainTag source, DomainTag target, Map precompose, std::string label);

  DomainTag source_domain() const { return source_; }
  DomainTag target_domain() const { return target_; }
  const std::string& label() const { return label_; }
  bool is_endomorphism() const { return source_ == target_; }

  /// Point of the source domain that p (a target point) is sent to.
  Point precompose(const Point& p) const;

  /// Throws DomainMismatch unless f lives on source_domain().
  Observable apply(const Observable& f) const;
  Observable operator()(const Observable& f) const { return apply(f); }

 private:
  DomainTag source_;
  DomainTag target_;
  Map map_;
  std::string label_;
};

inline Observable apply(const CompositionOperator& op, const Observable& f) { return op.apply(f); }

/// f -> f o m for any point map m.
CompositionOperator composition_operator(const PointMap& m);
/// Koopman operator of an input-free map; m must be an endomorphism.
CompositionOperator koopman_of_map(const PointMap& m);
CompositionOperator identity_operator(DomainTag domain);

/// f -> f o T, from observables on X to observables on X x U.
CompositionOperator k_naive(const ControlSystem& sys);
CompositionOperator k_aug(const ControlSystem& sys);
CompositionOperator k_u(const ControlSystem& sys, InputId u);
CompositionOperator k_inf(const ControlSystem& sys);

/// F^inf -> F^aug: evaluates at constant sequences.
CompositionOperator restriction_inf_to_aug();
/// F^aug -> F^inf: evaluates at (x, u(0)).
CompositionOperator extension_aug_to_inf();
/// F^aug -> F: freezes the input at u*.
CompositionOperator restriction_aug_to_f(const ControlSystem& sys, InputId u);
/// F -> F^aug: ignores the input.
CompositionOperator extension_f_to_aug();

/// outer o inner (inner acts first). Throws DomainMismatch when the inner
/// target is not the outer source.
CompositionOperator compose(const CompositionOperator& outer, const CompositionOperator& inner);
/// k-fold composition of an endomorphism; k = 0 gives the identity.
CompositionOperator power(const CompositionOperator& op, std::size_t k);

/// K_{u_0} K_{u_1} ... K_{u_{k-1}}, inputs stored earliest first, so the
/// precompose map is T_{u_{k-1}} o ... o T_{u_0}. Empty word: identity.
CompositionOperator kcf_word(const ControlSystem& sys, std::span<const InputId> inputs);

/// Operators restricted to control-independent observables; each pair of
/// maps is mutually inverse.
class CIIsomorphisms {
 public:
  /// F^aug_ci -> F^inf_ci.
  ControlIndependent extend_aug_to_inf(const ControlIndependent& g) const;
  /// F^inf_ci -> F^aug_ci.
  ControlIndependent restrict_inf_to_aug(const ControlIndependent& h) const;
  /// F -> F^aug_ci.
  ControlIndependent extend_f_to_aug(const Observable& f) const;
  /// F^aug_ci -> F; any u* gives the same result on this space.
  Observable restrict_aug_to_f(const ControlIndependent& g, InputId u = InputId{0}) const;

 private:
  static ControlIndependent wrap(Observable obs);
};

inline CIIsomorphisms ci_isomorphisms() { return {}; }

/// Exact matrix of an operator between enumerable domains: for every f,
/// tabulate(apply(op, f)) == entries * tabulate(f).
struct MatrixOperator {
  DomainTag row_domain;
  DomainTag col_domain;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXcd entries;
};

/// Throws UnsupportedError for X x l(U) domains or real state spaces.
MatrixOperator to_matrix(const CompositionOperator& op, const ControlSystem& sys);
/// Header row names the column enumeration; each row starts with its label.
void write_matrix_csv(const MatrixOperator& m, std::ostream& os);

// Naive constructions.

struct WellDefinednessWitness {
  std::size_t probe;
  State x;
  InputId u;
  State y;  // T(x, u)
  InputId u1;
  InputId u2;
  Complex value1;  // f(y, u1)
  Complex value2;  // f(y, u2)
};

struct WellDefinednessReport {
  enum class Reason { SingletonInput, AllRestrictionsInputFree, WitnessFound };
  bool well_defined = true;
  Reason reason = Reason::SingletonInput;
  std::optional<WellDefinednessWitness> witness;
};

/// Necessary condition for the input-as-state operator, relative to the
/// probe set. Searches probes, then (x, u) state-major, then input pairs.
WellDefinednessReport input_aug_well_definedness(const ControlSystem& sys,
                                                 std::span<const Observable> probes,
                                                 double tol = 0.0);
std::string to_string(WellDefinednessReport::Reason r);

struct MultistepWitness {
  std::size_t probe;
  State x;
  InputId u0;
  InputId u1;
  Complex augmented_value;  // [(K^aug)^2 E f](x, u0)
  Complex kcf_value;        // [K_u0 K_u1 f](x)
};

/// First (probe, x, u0, u1), in that order, where two steps of K^aug on the
/// extended probe disagree with the length-2 KCF word.
std::optional<MultistepWitness> find_multistep_witness(const ControlSystem& sys,
                                                       std::span<const Observable> probes,
                                                       std::span<const State> states,
                                                       double tol = 0.0);

}  // namespace koopman
