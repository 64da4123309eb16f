#include "koopman/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "koopman/builtin_systems.hpp"
#include "koopman/errors.hpp"

namespace koopman {

namespace {

class ValueParser {
 public:
  ValueParser(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  ConfigValue parse_all() {
    ConfigValue v = value();
    skip();
    if (pos_ != s_.size()) error("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  ConfigValue value() {
    skip();
    if (pos_ >= s_.size()) error("missing value");
    const char c = s_[pos_];
    if (c == '"') return string();
    if (c == '[') return array();
    ConfigValue v;
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    const std::string word(s_.substr(start, pos_ - start));
    if (word == "true" || word == "false") {
      v.kind = ConfigValue::Kind::Bool;
      v.flag = word == "true";
      return v;
    }
    double d = 0;
    const auto [end, ec] = std::from_chars(word.data(), word.data() + word.size(), d);
    if (ec != std::errc() || end != word.data() + word.size() || word.empty())
      error("cannot read '" + word + "' (strings need double quotes)");
    v.kind = ConfigValue::Kind::Number;
    v.text = word;
    return v;
  }

  ConfigValue string() {
    ConfigValue v;
    ++pos_;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      v.text += s_[pos_++];
    }
    if (pos_ >= s_.size()) error("unterminated string");
    ++pos_;
    return v;
  }

  ConfigValue array() {
    ConfigValue v;
    v.kind = ConfigValue::Kind::Array;
    ++pos_;
    skip();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return v;
    }
    while (true) {
      v.items.push_back(value());
      skip();
      if (pos_ >= s_.size()) error("unterminated array");
      if (s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      if (s_[pos_] != ',') error("expected ',' or ']' in array");
      ++pos_;
      skip();
      if (pos_ < s_.size() && s_[pos_] == ']') {  // trailing comma
        ++pos_;
        return v;
      }
    }
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int bracket_depth(const std::string& s) {
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (quoted) continue;
    depth += s[i] == '[';
    depth -= s[i] == ']';
  }
  return depth;
}

const std::set<std::string> kKnownKeys = {
    "system",
    "plan.points", "plan.functions", "plan.prefix_max", "plan.period_max", "plan.seed",
    "plan.tolerance", "plan.word_max", "plan.exhaustive", "plan.only",
    "dict.name", "dict.degree", "dict.degree_max",
    "fit.sampler", "fit.resolution", "fit.samples", "fit.per_input", "fit.seed",
    "predict.x0", "predict.prefix", "predict.period", "predict.steps",
};

const std::set<std::string> kSystemKeys = {
    "system.name", "system.builtin", "system.states", "system.inputs", "system.table",
    "system.lambda", "system.bound", "system.rate", "system.offsets",
};

unsigned parse_degree(const std::string& s) {
  unsigned d = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ConfigError("bad dictionary degree '" + s + "'");
  return d;
}

}  // namespace

std::string ConfigValue::as_string() const {
  if (kind == Kind::String || kind == Kind::Number) return text;
  if (kind == Kind::Bool) return flag ? "true" : "false";
  throw ConfigError("expected a string value, found an array");
}

double ConfigValue::as_double() const {
  if (kind != Kind::Number) throw ConfigError("expected a number, found '" + as_string() + "'");
  double d = 0;
  std::from_chars(text.data(), text.data() + text.size(), d);
  return d;
}

std::uint64_t ConfigValue::as_uint() const {
  if (kind != Kind::Number) throw ConfigError("expected an integer");
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw ConfigError("expected a nonnegative integer, found '" + text + "'");
  return v;
}

bool ConfigValue::as_bool() const {
  if (kind != Kind::Bool) throw ConfigError("expected true or false");
  return flag;
}

const std::vector<ConfigValue>& ConfigValue::as_array() const {
  if (kind != Kind::Array) throw ConfigError("expected an array");
  return items;
}

std::vector<std::string> ConfigValue::as_strings() const {
  std::vector<std::string> out;
  for (const auto& v : as_array()) out.push_back(v.as_string());
  return out;
}

std::vector<double> ConfigValue::as_doubles() const {
  std::vector<double> out;
  for (const auto& v : as_array()) out.push_back(v.as_double());
  return out;
}

Config Config::parse(std::string_view text) {
  Config cfg;
  std::istringstream is{std::string(text)};
  std::string raw, section, pending;
  std::size_t lineno = 0, start_line = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (!pending.empty()) {
      pending += " " + line;
      if (bracket_depth(pending) > 0) continue;
      line = pending;
      pending.clear();
    } else {
      if (line.empty()) continue;
      start_line = lineno;
      if (line.front() == '[' && line.find('=') == std::string::npos) {
        if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      if (bracket_depth(line) > 0) {
        pending = line;
        continue;
      }
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(start_line) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(start_line) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.entries_.count(full))
      throw ConfigError("config line " + std::to_string(start_line) + ": duplicate key '" + full + "'");
    cfg.entries_[full] = ValueParser(trim(line.substr(eq + 1)), start_line).parse_all();
  }
  if (!pending.empty()) throw ConfigError("config ends inside an array");
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const ConfigValue& Config::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

ExperimentConfig experiment_from(const Config& cfg) {
  ExperimentConfig e;
  bool inline_sys = false;
  for (const auto& [key, value] : cfg.entries()) {
    if (kSystemKeys.count(key)) {
      inline_sys = true;
      continue;
    }
    if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  if (inline_sys && cfg.has("system"))
    throw ConfigError("give either system = \"name\" or a [system] section, not both");
  if (inline_sys) e.inline_system = cfg;
  if (cfg.has("system")) e.system = cfg.at("system").as_string();

  auto get = [&](const std::string& k) -> const ConfigValue* {
    return cfg.has(k) ? &cfg.at(k) : nullptr;
  };
  if (auto v = get("plan.points")) e.plan.n_points = v->as_uint();
  if (auto v = get("plan.functions")) e.plan.n_functions = v->as_uint();
  if (auto v = get("plan.prefix_max")) e.plan.seq_prefix_max = v->as_uint();
  if (auto v = get("plan.period_max")) e.plan.seq_period_max = v->as_uint();
  if (auto v = get("plan.word_max")) e.plan.max_word_length = v->as_uint();
  if (auto v = get("plan.tolerance")) e.plan.tolerance = v->as_double();
  if (auto v = get("plan.seed")) {
    e.plan.rng_seed = v->as_uint();
    e.seed_given = true;
  }
  if (auto v = get("plan.exhaustive")) e.exact = v->as_bool();
  if (auto v = get("plan.only")) e.only = v->as_strings();
  if (auto v = get("dict.name")) e.dict_name = v->as_string();
  if (auto v = get("dict.degree")) e.degree_min = e.degree_max = static_cast<unsigned>(v->as_uint());
  if (auto v = get("dict.degree_max")) e.degree_max = static_cast<unsigned>(v->as_uint());
  if (auto v = get("fit.sampler")) e.sampler = v->as_string();
  if (auto v = get("fit.resolution")) e.resolution = v->as_uint();
  if (auto v = get("fit.samples")) e.samples = v->as_uint();
  if (auto v = get("fit.per_input")) e.per_input = v->as_bool();
  if (auto v = get("fit.seed")) e.data_seed = v->as_uint();
  if (auto v = get("predict.x0")) {
    e.predict.x0 = v->kind == ConfigValue::Kind::Array ? [&] {
      std::string s;
      for (const auto& c : v->as_strings()) s += (s.empty() ? "" : ",") + c;
      return s;
    }()
                                                       : v->as_string();
  }
  if (auto v = get("predict.prefix")) e.predict.prefix = v->as_strings();
  if (auto v = get("predict.period")) e.predict.period = v->as_strings();
  if (auto v = get("predict.steps")) e.predict.steps = v->as_uint();
  return e;
}

void apply_dict_spec(ExperimentConfig& cfg, const std::string& spec) {
  const auto colon = spec.find(':');
  cfg.dict_name = spec.substr(0, colon);
  if (colon == std::string::npos) return;
  const std::string deg = spec.substr(colon + 1);
  const auto dash = deg.find('-');
  if (dash == std::string::npos) {
    cfg.degree_min = cfg.degree_max = parse_degree(deg);
  } else {
    cfg.degree_min = parse_degree(deg.substr(0, dash));
    cfg.degree_max = parse_degree(deg.substr(dash + 1));
  }
  if (cfg.degree_min > cfg.degree_max) throw ConfigError("dictionary degree range is empty");
}

void finalize(ExperimentConfig& cfg) {
  if (cfg.exact) {
    const SamplePlan exact = SamplePlan::exact();
    cfg.plan.exhaustive = true;
    cfg.plan.tolerance = 0.0;
    if (!cfg.seed_given) cfg.plan.rng_seed = exact.rng_seed;
    return;
  }
  if (!cfg.seed_given) throw ConfigError("sampled plans need a seed (--seed or plan.seed)");
}

ControlSystem build_system(const ExperimentConfig& cfg) {
  if (!cfg.inline_system) return builtin::by_name(cfg.system);
  const Config& c = *cfg.inline_system;
  const std::string name = c.has("system.name") ? c.at("system.name").as_string() : "inline";
  if (c.has("system.table")) {
    if (!c.has("system.states") || !c.has("system.inputs"))
      throw ConfigError("a finite [system] needs states, inputs and table");
    const auto states = c.at("system.states").as_strings();
    const auto inputs = c.at("system.inputs").as_strings();
    std::vector<std::vector<std::size_t>> table;
    for (const auto& row : c.at("system.table").as_array()) {
      std::vector<std::size_t> r;
      for (const auto& cell : row.as_array()) {
        if (cell.kind == ConfigValue::Kind::String) {
          const auto it = std::find(states.begin(), states.end(), cell.text);
          if (it == states.end()) throw ConfigError("table entry '" + cell.text + "' is not a state");
          r.push_back(static_cast<std::size_t>(it - states.begin()));
        } else {
          r.push_back(cell.as_uint());
        }
      }
      table.push_back(std::move(r));
    }
    try {
      return ControlSystem::from_table(name, states, inputs, table);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("bad transition table: ") + e.what());
    }
  }
  if (!c.has("system.builtin")) throw ConfigError("[system] needs either a table or a builtin name");
  const std::string base = c.at("system.builtin").as_string();
  try {
    if (base == "scalarlinear") {
      builtin::ScalarLinearParams p;
      if (c.has("system.inputs")) p.inputs = c.at("system.inputs").as_strings();
      if (c.has("system.lambda")) p.lambda = c.at("system.lambda").as_doubles();
      if (c.has("system.bound")) p.bound = c.at("system.bound").as_double();
      return builtin::scalar_linear(p);
    }
    if (base == "logistic-with-offset") {
      builtin::LogisticParams p;
      if (c.has("system.rate")) p.rate = c.at("system.rate").as_double();
      if (c.has("system.offsets")) p.offsets = c.at("system.offsets").as_doubles();
      return builtin::logistic_with_offset(p);
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("bad parameters for ") + base + ": " + e.what());
  }
  return builtin::by_name(base);
}

}  // namespace koopman
