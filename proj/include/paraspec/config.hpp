#pragma once

// Experiment configuration: a TOML-style subset of flat `key = value` lines.
//
//   # comment
//   experiment = "renorm-sweep"
//   N = 256
//   epsilons = [0.125, 0.0625, 0.03125]
//   mollifiers = ["sharp", "gaussian"]
//   zero_noise = false
//
// Values are strings, integers, floats, booleans or one-level arrays of them.
// Tables, dotted keys and multi-line values are not supported. Every key must
// appear in the schema below; unknown keys are schema errors.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "paraspec/error.hpp"
#include "paraspec/hash.hpp"

namespace paraspec {

/// Schema violation; `field()` names the offending key.
class ConfigError : public InvalidInput {
 public:
  ConfigError(std::string field, const std::string& what)
      : InvalidInput(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

using ConfigScalar = std::variant<bool, std::int64_t, double, std::string>;
using ConfigValue = std::variant<ConfigScalar, std::vector<ConfigScalar>>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Removes a trailing comment that is not inside a string.
inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline ConfigScalar parse_scalar(const std::string& tok, const std::string& where) {
  if (tok.empty()) throw ConfigError(where, "empty value");
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"') throw ConfigError(where, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
      if (tok[i] == '\\' && i + 2 < tok.size()) ++i;
      out += tok[i];
    }
    return out;
  }
  if (tok == "true") return true;
  if (tok == "false") return false;
  std::string t;
  for (char c : tok)
    if (c != '_') t += c;
  const char* b = t.data();
  const char* e = b + t.size();
  if (b != e && *b == '+') ++b;
  const bool floaty = t.find_first_of(".eE") != std::string::npos || t == "inf" || t == "nan";
  if (!floaty) {
    std::int64_t v;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec == std::errc() && p == e) return v;
  }
  double d;
  auto [p, ec] = std::from_chars(b, e, d);
  if (ec != std::errc() || p != e) throw ConfigError(where, "cannot parse value '" + tok + "'");
  return d;
}

inline std::vector<std::string> split_array(const std::string& body, const std::string& where) {
  std::vector<std::string> items;
  std::string cur;
  bool in_str = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_str = !in_str;
    if (c == ',' && !in_str) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (in_str) throw ConfigError(where, "unterminated string in array");
  if (!trim(cur).empty()) items.push_back(trim(cur));
  for (const auto& it : items)
    if (it.empty()) throw ConfigError(where, "empty array element");
  return items;
}

}  // namespace detail

/// Parses the key/value text into raw values (no schema applied).
inline std::map<std::string, ConfigValue> parse_kv(const std::string& text) {
  std::map<std::string, ConfigValue> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = detail::trim(detail::strip_comment(line));
    if (s.empty()) continue;
    const std::string at = "line " + std::to_string(lineno);
    if (s.front() == '[') throw ConfigError(at, "tables are not supported; use flat keys");
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(at, "expected 'key = value'");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty() || key.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
                           std::string::npos)
      throw ConfigError(at, "invalid key '" + key + "'");
    if (out.count(key)) throw ConfigError(key, "duplicate key (" + at + ")");
    if (!val.empty() && val.front() == '[') {
      if (val.back() != ']') throw ConfigError(key, "unterminated array");
      std::vector<ConfigScalar> arr;
      for (const auto& item : detail::split_array(val.substr(1, val.size() - 2), key))
        arr.push_back(detail::parse_scalar(item, key));
      out[key] = std::move(arr);
    } else {
      out[key] = detail::parse_scalar(val, key);
    }
  }
  return out;
}

struct ExperimentConfig {
  std::string experiment;
  double L = 1.0;
  int N = 64;
  int n_eigen = 1;
  double epsilon = 0.03125;
  std::vector<double> epsilons{0.125, 0.0625, 0.03125};
  std::vector<double> L_values{1.0};
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::string> mollifiers{"sharp"};
  double tol = 1e-8;
  double alpha = -1.05;
  std::vector<double> deltas{0.1, 0.01, 0.001};
  double r = 0.5;
  std::string potential = "cosine";
  int n_per_unit = 32;
  double memory_budget_mb = 2048.0;
  bool zero_noise = false;
  double tail_p_min = 0.003;
  double tail_p_max = 0.25;
  int tail_points = 20;
  double path_step = 1.0 / 256.0;
  int paths = 2000;
  int coarsest = 32;
  std::string output;  ///< not part of the hash
};

namespace detail {

enum class Kind { boolean, integer, real, text, reals, integers, texts };

struct FieldSpec {
  Kind kind;
  const char* doc;
};

inline const std::map<std::string, FieldSpec>& schema() {
  static const std::map<std::string, FieldSpec> s = {
      {"experiment", {Kind::text, "subcommand the config is meant for"}},
      {"L", {Kind::real, "torus side length"}},
      {"N", {Kind::integer, "Fourier modes per dimension (even, >= 8)"}},
      {"n_eigen", {Kind::integer, "number of lowest eigenvalues"}},
      {"epsilon", {Kind::real, "mollification scale for single-scale experiments"}},
      {"epsilons", {Kind::reals, "strictly decreasing mollification schedule"}},
      {"L_values", {Kind::reals, "strictly increasing box sizes"}},
      {"seeds", {Kind::integers, "distinct non-negative seeds"}},
      {"seed_start", {Kind::integer, "first seed when seeds is not given"}},
      {"seed_count", {Kind::integer, "number of consecutive seeds when seeds is not given"}},
      {"mollifiers", {Kind::texts, "sharp | gaussian | bump"}},
      {"tol", {Kind::real, "eigen-solver residual tolerance"}},
      {"alpha", {Kind::real, "Holder exponent of the noise space"}},
      {"deltas", {Kind::reals, "strictly decreasing perturbation amplitudes"}},
      {"r", {Kind::real, "scaling factor in (0, 1)"}},
      {"potential", {Kind::text, "zero | cosine | smooth (deterministic scaling check)"}},
      {"n_per_unit", {Kind::integer, "Fourier modes per unit length (growth, localization)"}},
      {"memory_budget_mb", {Kind::real, "refuse configurations above this estimate"}},
      {"zero_noise", {Kind::boolean, "replace the noise by zero (calibration)"}},
      {"tail_p_min", {Kind::real, "lower probability of the tail window"}},
      {"tail_p_max", {Kind::real, "upper probability of the tail window"}},
      {"tail_points", {Kind::integer, "thresholds in the tail window"}},
      {"path_step", {Kind::real, "1D Brownian path step"}},
      {"paths", {Kind::integer, "1D paths per box size"}},
      {"coarsest", {Kind::integer, "coarsest grid of the multilevel eigen-solve"}},
      {"output", {Kind::text, "output directory (not hashed)"}},
  };
  return s;
}

inline double as_real(const ConfigScalar& v, const std::string& key) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return double(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  throw ConfigError(key, "expected a number");
}
inline std::int64_t as_int(const ConfigScalar& v, const std::string& key) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw ConfigError(key, "expected an integer");
}
inline const ConfigScalar& scalar(const ConfigValue& v, const std::string& key) {
  if (auto* s = std::get_if<ConfigScalar>(&v)) return *s;
  throw ConfigError(key, "expected a single value, got an array");
}
inline const std::vector<ConfigScalar>& array(const ConfigValue& v, const std::string& key) {
  if (auto* a = std::get_if<std::vector<ConfigScalar>>(&v)) return *a;
  throw ConfigError(key, "expected an array");
}

inline std::string canonical_real(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

/// Schema documentation, one "key: description" line per field.
inline std::string config_schema_text() {
  std::string s;
  for (const auto& [k, f] : detail::schema()) s += k + ": " + f.doc + "\n";
  return s;
}

/// Checks ranges and schedule shapes; throws ConfigError naming the field.
inline void validate(const ExperimentConfig& c) {
  auto fail = [](const char* k, const std::string& m) { throw ConfigError(k, m); };
  if (!(c.L > 0.0) || !std::isfinite(c.L)) fail("L", "must be positive");
  if (c.N < 8 || c.N % 2) fail("N", "must be even and >= 8");
  if (c.n_eigen < 1) fail("n_eigen", "must be >= 1");
  if (!(c.epsilon > 0.0)) fail("epsilon", "must be positive");
  if (c.epsilons.empty()) fail("epsilons", "must be nonempty");
  for (std::size_t i = 0; i < c.epsilons.size(); ++i)
    if (!(c.epsilons[i] > 0.0) || (i && c.epsilons[i] >= c.epsilons[i - 1]))
      fail("epsilons", "must be positive and strictly decreasing");
  if (c.L_values.empty()) fail("L_values", "must be nonempty");
  for (std::size_t i = 0; i < c.L_values.size(); ++i)
    if (!(c.L_values[i] > 0.0) || (i && c.L_values[i] <= c.L_values[i - 1]))
      fail("L_values", "must be positive and strictly increasing");
  if (c.seeds.empty()) fail("seeds", "must be nonempty");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size())
    fail("seeds", "must be distinct");
  if (c.mollifiers.empty()) fail("mollifiers", "must be nonempty");
  for (const auto& m : c.mollifiers)
    if (m != "sharp" && m != "gaussian" && m != "bump") fail("mollifiers", "unknown mollifier '" + m + "'");
  if (!(c.tol > 0.0)) fail("tol", "must be positive");
  if (!(c.alpha < -1.0 && c.alpha > -4.0 / 3.0)) fail("alpha", "must lie in (-4/3, -1)");
  if (c.deltas.empty()) fail("deltas", "must be nonempty");
  for (std::size_t i = 0; i < c.deltas.size(); ++i)
    if (!(c.deltas[i] > 0.0) || (i && c.deltas[i] >= c.deltas[i - 1]))
      fail("deltas", "must be positive and strictly decreasing");
  if (!(c.r > 0.0 && c.r < 1.0)) fail("r", "must lie in (0, 1)");
  if (c.potential != "zero" && c.potential != "cosine" && c.potential != "smooth")
    fail("potential", "must be zero | cosine | smooth");
  if (c.n_per_unit < 4 || c.n_per_unit % 2) fail("n_per_unit", "must be even and >= 4");
  if (!(c.memory_budget_mb > 0.0)) fail("memory_budget_mb", "must be positive");
  if (!(c.tail_p_min > 0.0 && c.tail_p_min < c.tail_p_max && c.tail_p_max < 1.0))
    fail("tail_p_min", "need 0 < tail_p_min < tail_p_max < 1");
  if (c.tail_points < 3) fail("tail_points", "must be >= 3");
  if (!(c.path_step > 0.0)) fail("path_step", "must be positive");
  if (c.paths < 2) fail("paths", "must be >= 2");
  if (c.coarsest < 8 || c.coarsest % 2) fail("coarsest", "must be even and >= 8");
}

/// Applies the schema to raw key/values; missing keys keep their defaults.
inline ExperimentConfig config_from_kv(const std::map<std::string, ConfigValue>& kv) {
  using detail::Kind;
  const auto& sch = detail::schema();
  for (const auto& [k, v] : kv)
    if (!sch.count(k)) throw ConfigError(k, "unknown key");
  ExperimentConfig c;
  auto get = [&](const char* k) -> const ConfigValue* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto text = [&](const char* k, std::string& dst) {
    if (auto* v = get(k)) {
      auto* s = std::get_if<std::string>(&detail::scalar(*v, k));
      if (!s) throw ConfigError(k, "expected a string");
      dst = *s;
    }
  };
  auto real = [&](const char* k, double& dst) {
    if (auto* v = get(k)) dst = detail::as_real(detail::scalar(*v, k), k);
  };
  auto integer = [&](const char* k, int& dst) {
    if (auto* v = get(k)) {
      const auto i = detail::as_int(detail::scalar(*v, k), k);
      if (i < INT32_MIN || i > INT32_MAX) throw ConfigError(k, "out of range");
      dst = int(i);
    }
  };
  auto reals = [&](const char* k, std::vector<double>& dst) {
    if (auto* v = get(k)) {
      dst.clear();
      for (const auto& s : detail::array(*v, k)) dst.push_back(detail::as_real(s, k));
    }
  };
  text("experiment", c.experiment);
  real("L", c.L);
  integer("N", c.N);
  integer("n_eigen", c.n_eigen);
  real("epsilon", c.epsilon);
  reals("epsilons", c.epsilons);
  reals("L_values", c.L_values);
  if (auto* v = get("seeds")) {
    if (get("seed_start") || get("seed_count")) throw ConfigError("seeds", "give either seeds or seed_start/seed_count");
    c.seeds.clear();
    for (const auto& s : detail::array(*v, "seeds")) {
      const auto i = detail::as_int(s, "seeds");
      if (i < 0) throw ConfigError("seeds", "must be non-negative");
      c.seeds.push_back(std::uint64_t(i));
    }
  } else if (get("seed_start") || get("seed_count")) {
    int start = 1, count = 1;
    integer("seed_start", start);
    integer("seed_count", count);
    if (start < 0) throw ConfigError("seed_start", "must be non-negative");
    if (count < 1) throw ConfigError("seed_count", "must be >= 1");
    c.seeds.clear();
    for (int i = 0; i < count; ++i) c.seeds.push_back(std::uint64_t(start) + std::uint64_t(i));
  }
  if (auto* v = get("mollifiers")) {
    c.mollifiers.clear();
    for (const auto& s : detail::array(*v, "mollifiers")) {
      auto* t = std::get_if<std::string>(&s);
      if (!t) throw ConfigError("mollifiers", "expected strings");
      c.mollifiers.push_back(*t);
    }
  }
  real("tol", c.tol);
  real("alpha", c.alpha);
  reals("deltas", c.deltas);
  real("r", c.r);
  text("potential", c.potential);
  integer("n_per_unit", c.n_per_unit);
  real("memory_budget_mb", c.memory_budget_mb);
  if (auto* v = get("zero_noise")) {
    auto* b = std::get_if<bool>(&detail::scalar(*v, "zero_noise"));
    if (!b) throw ConfigError("zero_noise", "expected true or false");
    c.zero_noise = *b;
  }
  real("tail_p_min", c.tail_p_min);
  real("tail_p_max", c.tail_p_max);
  integer("tail_points", c.tail_points);
  real("path_step", c.path_step);
  integer("paths", c.paths);
  integer("coarsest", c.coarsest);
  text("output", c.output);
  validate(c);
  return c;
}

inline ExperimentConfig parse_config(const std::string& text) { return config_from_kv(parse_kv(text)); }

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Key-sorted canonical text of every semantic field (defaults included, output excluded).
inline std::string canonical_text(const ExperimentConfig& c) {
  using detail::canonical_real;
  std::map<std::string, std::string> m;
  auto list = [](const auto& xs, auto f) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + f(xs[i]);
    return s + "]";
  };
  auto quote = [](const std::string& s) { return "\"" + s + "\""; };
  m["experiment"] = quote(c.experiment);
  m["L"] = canonical_real(c.L);
  m["N"] = std::to_string(c.N);
  m["n_eigen"] = std::to_string(c.n_eigen);
  m["epsilon"] = canonical_real(c.epsilon);
  m["epsilons"] = list(c.epsilons, canonical_real);
  m["L_values"] = list(c.L_values, canonical_real);
  m["seeds"] = list(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
  m["mollifiers"] = list(c.mollifiers, quote);
  m["tol"] = canonical_real(c.tol);
  m["alpha"] = canonical_real(c.alpha);
  m["deltas"] = list(c.deltas, canonical_real);
  m["r"] = canonical_real(c.r);
  m["potential"] = quote(c.potential);
  m["n_per_unit"] = std::to_string(c.n_per_unit);
  m["memory_budget_mb"] = canonical_real(c.memory_budget_mb);
  m["zero_noise"] = c.zero_noise ? "true" : "false";
  m["tail_p_min"] = canonical_real(c.tail_p_min);
  m["tail_p_max"] = canonical_real(c.tail_p_max);
  m["tail_points"] = std::to_string(c.tail_points);
  m["path_step"] = canonical_real(c.path_step);
  m["paths"] = std::to_string(c.paths);
  m["coarsest"] = std::to_string(c.coarsest);
  std::string out;
  for (const auto& [k, v] : m) out += k + "=" + v + "\n";
  return out;
}

/// SHA-256 of the canonical text; insensitive to key order and formatting.
inline std::string config_hash(const ExperimentConfig& c) { return sha256_hex(canonical_text(c)); }

/// Adds `offset` to every seed.
inline ExperimentConfig with_seed_offset(ExperimentConfig c, std::int64_t offset) {
  for (auto& s : c.seeds) {
    const std::int64_t v = std::int64_t(s) + offset;
    if (v < 0) throw ConfigError("seeds", "seed offset makes a seed negative");
    s = std::uint64_t(v);
  }
  return c;
}

}  // namespace paraspec
