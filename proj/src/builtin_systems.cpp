#include "koopman/builtin_systems.hpp"

#include <cmath>
#include <sstream>

#include "koopman/errors.hpp"

namespace koopman::builtin {

namespace {

std::string label_of(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ControlSystem finite3() {
  return ControlSystem::from_table("finite3", {"0", "1", "2"}, {"a", "b"},
                                   {{1, 0}, {2, 2}, {0, 1}});
}

ControlSystem collapse2() {
  return ControlSystem::from_table("collapse2", {"0", "1"}, {"a", "b"}, {{1, 1}, {1, 1}});
}

ControlSystem finite3_single() {
  return ControlSystem::from_table("finite3-single", {"0", "1", "2"}, {"a"}, {{1}, {2}, {0}});
}

ControlSystem identity_finite(std::size_t n_states) {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> table;
  for (std::size_t i = 0; i < n_states; ++i) {
    labels.push_back(std::to_string(i));
    table.push_back({i, i});
  }
  return ControlSystem::from_table("identity" + std::to_string(n_states), labels, {"a", "b"},
                                   table);
}

ControlSystem scalar_linear(const ScalarLinearParams& p) {
  if (p.inputs.size() != p.lambda.size())
    throw ConfigError("scalarlinear needs one lambda per input");
  for (double l : p.lambda)
    if (std::abs(l) > 1.0) throw ConfigError("scalarlinear needs |lambda| <= 1 to stay in the box");
  auto lambda = p.lambda;
  auto transition = [lambda](const State& x, InputId u) {
    return State::real({lambda[u.value] * x.coords()[0]});
  };
  return ControlSystem("scalarlinear", StateSpace::box({-p.bound}, {p.bound}), InputSet(p.inputs),
                       transition);
}

ControlSystem logistic_with_offset(const LogisticParams& p) {
  std::vector<std::string> labels;
  for (double o : p.offsets) labels.push_back(label_of(o));
  // Keeps [0,1] forward invariant: max of r x (1-x) is r/4.
  for (double o : p.offsets)
    if (o < 0.0 || p.rate < 0.0 || p.rate / 4.0 + o > 1.0)
      throw ConfigError("logistic-with-offset parameters leave [0,1]");
  auto rate = p.rate;
  auto offsets = p.offsets;
  auto transition = [rate, offsets](const State& x, InputId u) {
    const double v = x.coords()[0];
    return State::real({rate * v * (1.0 - v) + offsets[u.value]});
  };
  return ControlSystem("logistic-with-offset", StateSpace::box({0.0}, {1.0}), InputSet(labels),
                       transition);
}

ControlSystem by_name(const std::string& name) {
  if (name == "finite3") return finite3();
  if (name == "collapse2") return collapse2();
  if (name == "finite3-single") return finite3_single();
  if (name == "identity3") return identity_finite(3);
  if (name == "scalarlinear") return scalar_linear();
  if (name == "logistic-with-offset") return logistic_with_offset();
  throw ConfigError("unknown built-in system '" + name + "'");
}

std::vector<std::string> names() {
  return {"finite3", "collapse2", "finite3-single", "identity3", "scalarlinear",
          "logistic-with-offset"};
}

}  // namespace koopman::builtin
