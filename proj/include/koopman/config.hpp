#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "koopman/checks.hpp"
#include "koopman/edmd.hpp"
#include "koopman/system.hpp"

namespace koopman {

/// One value of the key/value config format: a quoted string, a number,
/// true/false, or a bracketed (possibly nested) array.
struct ConfigValue {
  enum class Kind { String, Number, Bool, Array };
  Kind kind = Kind::String;
  std::string text;  // string contents, or the number as written
  bool flag = false;
  std::vector<ConfigValue> items;

  std::string as_string() const;
  double as_double() const;
  std::uint64_t as_uint() const;
  bool as_bool() const;
  const std::vector<ConfigValue>& as_array() const;
  std::vector<std::string> as_strings() const;
  std::vector<double> as_doubles() const;
};

/// Flat "section.key" -> value map parsed from a small TOML subset:
/// `[section]` headers, `key = value` lines, `#` comments.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const ConfigValue& at(const std::string& key) const;
  void set(const std::string& key, ConfigValue v) { entries_[key] = std::move(v); }
  const std::map<std::string, ConfigValue>& entries() const { return entries_; }

 private:
  std::map<std::string, ConfigValue> entries_;
};

struct PredictConfig {
  std::optional<std::string> x0;  // state label or comma separated coordinates
  std::vector<std::string> prefix;
  std::vector<std::string> period;
  std::size_t steps = 20;
};

struct ExperimentConfig {
  std::string system = "finite3";
  std::optional<Config> inline_system;  // [system] section of a config file
  SamplePlan plan;
  bool exact = false;
  bool seed_given = false;
  std::vector<std::string> only;

  std::string dict_name = "monomial";
  unsigned degree_min = 2;
  unsigned degree_max = 2;

  std::string sampler = "auto";  // auto, grid, uniform, exhaustive
  std::size_t resolution = 21;
  std::size_t samples = 250;
  bool per_input = true;
  std::uint64_t data_seed = 0;

  PredictConfig predict;
};

/// Reads every recognised key; unknown sections or keys are a ConfigError.
ExperimentConfig experiment_from(const Config& cfg);
/// "name:degree" or "name:lo-hi"; a bare name keeps the degrees.
void apply_dict_spec(ExperimentConfig& cfg, const std::string& spec);
/// Throws ConfigError when a sampled plan has no seed.
void finalize(ExperimentConfig& cfg);

/// Built-in name, or an inline finite table / parametric definition.
ControlSystem build_system(const ExperimentConfig& cfg);

}  // namespace koopman
