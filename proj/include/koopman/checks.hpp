#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "koopman/system.hpp"

namespace koopman {

enum class SystemKind { FiniteOnly, Any };

struct CheckSpec {
  std::string id;           // "C1" ... "C20"
  std::string title;
  std::string statement;    // the identity, in operator notation
  SystemKind required = SystemKind::Any;
};

/// Every registered check, in id order.
const std::vector<CheckSpec>& check_registry();
/// Throws ConfigError for an unknown id.
const CheckSpec& check_spec(std::string_view id);
bool applicable(const CheckSpec& spec, const ControlSystem& sys);

/// How points, functions, inputs, words and sequences are chosen.
///
/// With `exhaustive` set (finite systems only) every state, every pair,
/// every word up to max_word_length and every sequence within the prefix
/// and period bounds is visited; the function pool is the built-in basis
/// plus n_functions random combinations. Otherwise n_points points of each
/// domain are drawn from a seeded generator.
struct SamplePlan {
  std::size_t n_points = 1000;
  std::size_t n_functions = 50;
  std::size_t seq_prefix_max = 4;
  std::size_t seq_period_max = 3;
  std::uint64_t rng_seed = 0;
  double tolerance = 1e-12;
  std::size_t max_word_length = 5;
  bool exhaustive = false;

  static SamplePlan exact();
  static SamplePlan sampled(std::size_t n_points, std::size_t n_functions, std::uint64_t seed,
                            double tolerance = 1e-12);

  /// Throws ConfigError on zero bounds, a negative tolerance, or a zero
  /// tolerance on anything but a finite exhaustive plan.
  void validate(const ControlSystem& sys) const;
};

struct CheckResult {
  std::string id;
  bool pass = false;
  double max_abs_error = 0.0;
  std::optional<std::string> counterexample;
  std::size_t n_evaluated = 0;
  std::string detail;
};

/// Deterministic in (id, sys, plan): the sampling stream is seeded from
/// (plan.rng_seed, id).
CheckResult run_check(std::string_view id, const ControlSystem& sys, const SamplePlan& plan);

struct SuiteReport {
  std::string system;
  SamplePlan plan;
  std::vector<CheckResult> results;
  std::vector<std::string> skipped;  // not applicable to the system kind

  std::size_t passed() const;
  std::size_t failed() const;
  bool all_passed() const { return failed() == 0; }
};

/// Runs every applicable registered check, or only the listed ids.
SuiteReport run_all(const ControlSystem& sys, const SamplePlan& plan,
                    std::span<const std::string> only = {});

/// One object per check; non-finite errors are written as the string "inf".
std::string to_json(const SuiteReport& report);
void write_table(const SuiteReport& report, std::ostream& os);

}  // namespace koopman
