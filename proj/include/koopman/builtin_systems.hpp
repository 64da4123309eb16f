#pragma once

#include <string>
#include <vector>

#include "koopman/system.hpp"

namespace koopman::builtin {

/// X = {0,1,2}, U = {a,b}, T(x,a) = x+1 mod 3, T(x,b) = 2x mod 3.
ControlSystem finite3();
/// X = {0,1}, U = {a,b}, T = 1 everywhere.
ControlSystem collapse2();
/// finite3 dynamics under input a only.
ControlSystem finite3_single();
/// T(x,u) = x on a finite space with two inputs.
ControlSystem identity_finite(std::size_t n_states = 3);

struct ScalarLinearParams {
  std::vector<std::string> inputs{"a", "b"};
  std::vector<double> lambda{0.5, -0.8};
  double bound = 1.0;
};
/// x+ = lambda(u) x on [-bound, bound].
ControlSystem scalar_linear(const ScalarLinearParams& p = {});

struct LogisticParams {
  double rate = 2.5;
  std::vector<double> offsets{0.0, 0.05};
};
/// x+ = rate x (1 - x) + u on [0, 1]; the input labels are the offsets.
ControlSystem logistic_with_offset(const LogisticParams& p = {});

/// Looks up finite3, collapse2, finite3-single, identity3, scalarlinear or
/// logistic-with-offset (default parameters).
ControlSystem by_name(const std::string& name);
std::vector<std::string> names();

}  // namespace koopman::builtin
