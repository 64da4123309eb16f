#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace koopman {

/// Position of an input label inside its InputSet.
struct InputId {
  std::size_t value = 0;
  auto operator<=>(const InputId&) const = default;
};

/// A state of either a finite enumerated space (an index) or a real box
/// (a coordinate vector).
class State {
 public:
  static State finite(std::size_t index) { return State(index); }
  static State real(std::vector<double> coords) { return State(std::move(coords)); }

  bool is_finite() const { return std::holds_alternative<std::size_t>(rep_); }
  std::size_t index() const;
  std::span<const double> coords() const;

  bool operator==(const State&) const = default;

 private:
  explicit State(std::size_t i) : rep_(i) {}
  explicit State(std::vector<double> c) : rep_(std::move(c)) {}
  std::variant<std::size_t, std::vector<double>> rep_;
};

class StateSpace {
 public:
  enum class Kind { FiniteEnumerated, RealBox };

  /// Labels must be nonempty and unique. Labels that parse as numbers carry
  /// that number as their coordinate; others use their index.
  static StateSpace finite(std::vector<std::string> labels);
  /// Requires lower[i] < upper[i] for every coordinate.
  static StateSpace box(std::vector<double> lower, std::vector<double> upper);

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::FiniteEnumerated; }
  /// Number of states; only for finite spaces.
  std::size_t size() const;
  std::size_t dimension() const { return is_finite() ? 1 : lower_.size(); }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  State at(std::size_t index) const;
  State find(const std::string& label) const;
  bool contains(const State& x) const;
  /// Throws DomainError unless contains(x).
  void require(const State& x) const;

  /// Coordinate i of x: the numeric value of a finite label, or coords()[i].
  double coordinate(const State& x, std::size_t i) const;
  std::string describe(const State& x) const;

 private:
  Kind kind_ = Kind::FiniteEnumerated;
  std::vector<std::string> labels_;
  std::vector<double> values_;
  std::vector<double> lower_, upper_;
};

class InputSet {
 public:
  /// Nonempty, unique labels.
  explicit InputSet(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(InputId u) const;
  /// Numeric value of the label when it parses as a number, else its index.
  double value(InputId u) const;
  InputId find(const std::string& label) const;
  bool contains(InputId u) const { return u.value < labels_.size(); }
  void require(InputId u) const;
  std::vector<InputId> all() const;

 private:
  std::vector<std::string> labels_;
  std::vector<double> values_;
};

/// Eventually periodic infinite input sequence: prefix followed by the
/// period repeated forever.
class InputSequence {
 public:
  InputSequence(std::vector<InputId> prefix, std::vector<InputId> period);
  static InputSequence constant(InputId u) { return InputSequence({}, {u}); }

  const std::vector<InputId>& prefix() const { return prefix_; }
  const std::vector<InputId>& period() const { return period_; }

  InputId at(std::size_t k) const;
  InputSequence shifted() const;
  /// Pointwise equality of the infinite sequences.
  bool same_as(const InputSequence& other) const;
  bool operator==(const InputSequence& other) const { return same_as(other); }

  std::string describe(const InputSet& inputs) const;

 private:
  std::vector<InputId> prefix_;
  std::vector<InputId> period_;
};

InputId seq_at(const InputSequence& seq, std::size_t k);
InputSequence shift(const InputSequence& seq);

class ControlSystem {
 public:
  using Transition = std::function<State(const State&, InputId)>;

  /// The transition must be total and deterministic on states x inputs.
  ControlSystem(std::string name, StateSpace states, InputSet inputs, Transition transition);

  /// table[x][u] is the index of T(x,u).
  static ControlSystem from_table(std::string name, std::vector<std::string> state_labels,
                                  std::vector<std::string> input_labels,
                                  const std::vector<std::vector<std::size_t>>& table);

  const std::string& name() const { return name_; }
  const StateSpace& states() const { return states_; }
  const InputSet& inputs() const { return inputs_; }
  bool is_finite() const { return states_.is_finite(); }

  /// T(x,u). Rejects states or inputs outside the system and successor
  /// states that leave the state space.
  State step(const State& x, InputId u) const;

 private:
  std::string name_;
  StateSpace states_;
  InputSet inputs_;
  Transition transition_;
};

inline State step(const ControlSystem& sys, const State& x, InputId u) { return sys.step(x, u); }

/// Ground-truth trajectory: element 0 is x0, element j+1 = T(element j, seq(j)).
std::vector<State> simulate(const ControlSystem& sys, const State& x0, const InputSequence& seq,
                            std::size_t k);

/// { T(x,u) : x in X, u in U }, in state declaration order.
std::vector<State> range_map(const ControlSystem& sys);

// ---------------------------------------------------------------------------
// Points of the three domains X, X x U and X x l(U).

struct AugPoint {
  State x;
  InputId u;
  bool operator==(const AugPoint&) const = default;
};

struct SeqPoint {
  State x;
  InputSequence u;
  bool operator==(const SeqPoint&) const = default;
};

// Input-free systems derived from a control system.

class AugmentedMap {
 public:
  explicit AugmentedMap(const ControlSystem& sys) : sys_(&sys) {}
  AugPoint operator()(const AugPoint& p) const { return {sys_->step(p.x, p.u), p.u}; }

 private:
  const ControlSystem* sys_;
};

class ConstantInputMap {
 public:
  ConstantInputMap(const ControlSystem& sys, InputId u);
  State operator()(const State& x) const { return sys_->step(x, u_); }
  InputId input() const { return u_; }

 private:
  const ControlSystem* sys_;
  InputId u_;
};

class InfiniteSequenceMap {
 public:
  explicit InfiniteSequenceMap(const ControlSystem& sys) : sys_(&sys) {}
  SeqPoint operator()(const SeqPoint& p) const {
    return {sys_->step(p.x, p.u.at(0)), p.u.shifted()};
  }

 private:
  const ControlSystem* sys_;
};

// Point-level restriction/extension maps and projections.

/// (x, u) -> (x, u(0))
inline AugPoint restrict_seq_to_pair(const SeqPoint& p) { return {p.x, p.u.at(0)}; }
/// (x, u) -> (x, (u, u, ...))
inline SeqPoint extend_pair_to_seq(const AugPoint& p) {
  return {p.x, InputSequence::constant(p.u)};
}
/// (x, u) -> x
inline State restrict_pair_to_state(const AugPoint& p) { return p.x; }
/// x -> (x, u*)
inline AugPoint extend_state_to_pair(const State& x, InputId u) { return {x, u}; }

inline const State& project_state(const AugPoint& p) { return p.x; }
inline const State& project_state(const SeqPoint& p) { return p.x; }
inline InputId project_input(const AugPoint& p) { return p.u; }
inline const InputSequence& project_input(const SeqPoint& p) { return p.u; }

enum class RecoveryMethod { InfiniteSequence, KCFComposition, AugmentedStepwise };

/// Reconstructs the trajectory through one of the input-free systems.
std::vector<State> recover_trajectory(const ControlSystem& sys, const State& x0,
                                      const InputSequence& seq, std::size_t k,
                                      RecoveryMethod method);

/// Largest componentwise difference; +inf when the states are of different
/// kinds, 1 when two finite labels differ.
double state_distance(const State& a, const State& b);

std::string to_string(RecoveryMethod m);

}  // namespace koopman
