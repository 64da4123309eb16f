#include "koopman/system.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

void require_unique(const std::vector<std::string>& labels, const char* what) {
  if (labels.empty()) throw DomainError(std::string(what) + " must be nonempty");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) throw DomainError(std::string(what) + " labels must be unique");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::size_t State::index() const {
  if (!is_finite()) throw DomainError("state is not a finite label");
  return std::get<std::size_t>(rep_);
}

std::span<const double> State::coords() const {
  if (is_finite()) throw DomainError("state is not a real vector");
  return std::get<std::vector<double>>(rep_);
}

StateSpace StateSpace::finite(std::vector<std::string> labels) {
  require_unique(labels, "state space");
  StateSpace s;
  s.kind_ = Kind::FiniteEnumerated;
  s.values_.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    s.values_.push_back(parse_number(labels[i]).value_or(static_cast<double>(i)));
  s.labels_ = std::move(labels);
  return s;
}

StateSpace StateSpace::box(std::vector<double> lower, std::vector<double> upper) {
  if (lower.empty() || lower.size() != upper.size())
    throw DomainError("box bounds must be nonempty and of equal dimension");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i])) throw DomainError("box requires lower < upper per coordinate");
  StateSpace s;
  s.kind_ = Kind::RealBox;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

std::size_t StateSpace::size() const {
  if (!is_finite()) throw UnsupportedError("a real box has no finite enumeration");
  return labels_.size();
}

State StateSpace::at(std::size_t index) const {
  if (index >= size()) throw DomainError("state index out of range");
  return State::finite(index);
}

State StateSpace::find(const std::string& label) const {
  if (!is_finite()) throw UnsupportedError("label lookup on a real box");
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DomainError("unknown state '" + label + "'");
  return State::finite(static_cast<std::size_t>(it - labels_.begin()));
}

bool StateSpace::contains(const State& x) const {
  if (is_finite()) return x.is_finite() && x.index() < labels_.size();
  if (x.is_finite()) return false;
  auto c = x.coords();
  if (c.size() != lower_.size()) return false;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!(c[i] >= lower_[i] && c[i] <= upper_[i])) return false;
  return true;
}

void StateSpace::require(const State& x) const {
  if (!contains(x)) throw DomainError("state " + describe(x) + " is outside the state space");
}

double StateSpace::coordinate(const State& x, std::size_t i) const {
  if (x.is_finite()) {
    if (i != 0) throw DomainError("finite states have a single coordinate");
    if (x.index() >= values_.size()) throw DomainError("state index out of range");
    return values_[x.index()];
  }
  auto c = x.coords();
  if (i >= c.size()) throw DomainError("coordinate index out of range");
  return c[i];
}

std::string StateSpace::describe(const State& x) const {
  if (x.is_finite()) {
    if (is_finite() && x.index() < labels_.size()) return labels_[x.index()];
    return "#" + std::to_string(x.index());
  }
  std::string out = "(";
  auto c = x.coords();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) out += ", ";
    out += format_double(c[i]);
  }
  return out + ")";
}

InputSet::InputSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  require_unique(labels_, "input set");
  for (std::size_t i = 0; i < labels_.size(); ++i)
    values_.push_back(parse_number(labels_[i]).value_or(static_cast<double>(i)));
}

const std::string& InputSet::label(InputId u) const {
  require(u);
  return labels_[u.value];
}

double InputSet::value(InputId u) const {
  require(u);
  return values_[u.value];
}

InputId InputSet::find(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DomainError("unknown input '" + label + "'");
  return InputId{static_cast<std::size_t>(it - labels_.begin())};
}

void InputSet::require(InputId u) const {
  if (!contains(u)) throw DomainError("unknown input #" + std::to_string(u.value));
}

std::vector<InputId> InputSet::all() const {
  std::vector<InputId> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) out.push_back(InputId{i});
  return out;
}

InputSequence::InputSequence(std::vector<InputId> prefix, std::vector<InputId> period)
    : prefix_(std::move(prefix)), period_(std::move(period)) {
  if (period_.empty()) throw DomainError("input sequence period must be nonempty");
}

InputId InputSequence::at(std::size_t k) const {
  if (k < prefix_.size()) return prefix_[k];
  return period_[(k - prefix_.size()) % period_.size()];
}

InputSequence InputSequence::shifted() const {
  if (!prefix_.empty()) return InputSequence({prefix_.begin() + 1, prefix_.end()}, period_);
  std::vector<InputId> rotated(period_.begin() + 1, period_.end());
  rotated.push_back(period_.front());
  return InputSequence({}, std::move(rotated));
}

bool InputSequence::same_as(const InputSequence& other) const {
  // Past the longer prefix both are periodic; two periodic words agreeing on
  // p + q consecutive terms agree everywhere.
  const std::size_t n = std::max(prefix_.size(), other.prefix_.size()) + period_.size() +
                        other.period_.size();
  for (std::size_t k = 0; k < n; ++k)
    if (at(k) != other.at(k)) return false;
  return true;
}

std::string InputSequence::describe(const InputSet& inputs) const {
  std::string out = "[";
  for (std::size_t i = 0; i < prefix_.size(); ++i) {
    if (i) out += ",";
    out += inputs.label(prefix_[i]);
  }
  out += "](";
  for (std::size_t i = 0; i < period_.size(); ++i) {
    if (i) out += ",";
    out += inputs.label(period_[i]);
  }
  return out + ")*";
}

InputId seq_at(const InputSequence& seq, std::size_t k) { return seq.at(k); }
InputSequence shift(const InputSequence& seq) { return seq.shifted(); }

ControlSystem::ControlSystem(std::string name, StateSpace states, InputSet inputs,
                             Transition transition)
    : name_(std::move(name)),
      states_(std::move(states)),
      inputs_(std::move(inputs)),
      transition_(std::move(transition)) {
  if (!transition_) throw DomainError("control system needs a transition map");
}

ControlSystem ControlSystem::from_table(std::string name, std::vector<std::string> state_labels,
                                        std::vector<std::string> input_labels,
                                        const std::vector<std::vector<std::size_t>>& table) {
  auto states = StateSpace::finite(std::move(state_labels));
  InputSet inputs(std::move(input_labels));
  if (table.size() != states.size()) throw DomainError("transition table needs one row per state");
  for (const auto& row : table) {
    if (row.size() != inputs.size())
      throw DomainError("transition table needs one column per input");
    for (std::size_t next : row)
      if (next >= states.size()) throw DomainError("transition table leaves the state space");
  }
  auto transition = [table](const State& x, InputId u) {
    return State::finite(table[x.index()][u.value]);
  };
  return ControlSystem(std::move(name), std::move(states), std::move(inputs), transition);
}

State ControlSystem::step(const State& x, InputId u) const {
  states_.require(x);
  inputs_.require(u);
  State next = transition_(x, u);
  if (!states_.contains(next))
    throw DomainError("transition of " + name_ + " left the state space at " +
                      states_.describe(x));
  return next;
}

std::vector<State> simulate(const ControlSystem& sys, const State& x0, const InputSequence& seq,
                            std::size_t k) {
  sys.states().require(x0);
  std::vector<State> traj;
  traj.reserve(k + 1);
  traj.push_back(x0);
  for (std::size_t j = 0; j < k; ++j) traj.push_back(sys.step(traj.back(), seq.at(j)));
  return traj;
}

std::vector<State> range_map(const ControlSystem& sys) {
  if (!sys.is_finite()) throw UnsupportedError("range_map needs a finite state space");
  std::vector<bool> hit(sys.states().size(), false);
  for (std::size_t x = 0; x < sys.states().size(); ++x)
    for (InputId u : sys.inputs().all()) hit[sys.step(State::finite(x), u).index()] = true;
  std::vector<State> out;
  for (std::size_t y = 0; y < hit.size(); ++y)
    if (hit[y]) out.push_back(State::finite(y));
  return out;
}

ConstantInputMap::ConstantInputMap(const ControlSystem& sys, InputId u) : sys_(&sys), u_(u) {
  sys.inputs().require(u);
}

std::vector<State> recover_trajectory(const ControlSystem& sys, const State& x0,
                                      const InputSequence& seq, std::size_t k,
                                      RecoveryMethod method) {
  sys.states().require(x0);
  std::vector<State> traj;
  traj.reserve(k + 1);
  switch (method) {
    case RecoveryMethod::InfiniteSequence: {
      // Iterate T^inf on (x0, u) and project each iterate onto X.
      InfiniteSequenceMap t_inf(sys);
      SeqPoint p{x0, seq};
      traj.push_back(project_state(p));
      for (std::size_t j = 0; j < k; ++j) {
        p = t_inf(p);
        traj.push_back(project_state(p));
      }
      break;
    }
    case RecoveryMethod::KCFComposition: {
      // x_j = T_{u_{j-1}} o ... o T_{u_0}(x0), each composed afresh.
      for (std::size_t j = 0; j <= k; ++j) {
        State x = x0;
        for (std::size_t i = 0; i < j; ++i) x = ConstantInputMap(sys, seq.at(i))(x);
        traj.push_back(x);
      }
      break;
    }
    case RecoveryMethod::AugmentedStepwise: {
      // One step of T^aug per time step, re-seeding the frozen input.
      AugmentedMap t_aug(sys);
      traj.push_back(x0);
      for (std::size_t j = 0; j < k; ++j)
        traj.push_back(project_state(t_aug(AugPoint{traj.back(), seq.at(j)})));
      break;
    }
  }
  return traj;
}

double state_distance(const State& a, const State& b) {
  if (a.is_finite() != b.is_finite()) return std::numeric_limits<double>::infinity();
  if (a.is_finite()) return a.index() == b.index() ? 0.0 : 1.0;
  auto ca = a.coords();
  auto cb = b.coords();
  if (ca.size() != cb.size()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i) d = std::max(d, std::abs(ca[i] - cb[i]));
  return d;
}

std::string to_string(RecoveryMethod m) {
  switch (m) {
    case RecoveryMethod::InfiniteSequence: return "infinite-sequence";
    case RecoveryMethod::KCFComposition: return "kcf-composition";
    case RecoveryMethod::AugmentedStepwise: return "augmented-stepwise";
  }
  return "?";
}

}  // namespace koopman
