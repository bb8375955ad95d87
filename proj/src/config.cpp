#include "haegan/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "haegan/error.hpp"

namespace haegan::config {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || *end != '\0') return false;
  out = v;
  return true;
}

bool parse_uint(const std::string& s, std::uint64_t& out) {
  if (s.empty() || s[0] == '-' || s[0] == '+') return false;
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || *end != '\0') return false;
  out = v;
  return true;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || *end != '\0' || !std::isfinite(v)) return false;
  out = v;
  return true;
}

// Canonical spelling so that equivalent values hash identically.
std::string normalize(const Key& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto bad = [&](const char* what) {
    return config_error("config key '" + key.name + "': expected " + what + ", got '" + v + "'");
  };
  switch (key.type) {
    case Type::Int: {
      std::int64_t x;
      if (!parse_int(v, x)) throw bad("an integer");
      return std::to_string(x);
    }
    case Type::UInt: {
      std::uint64_t x;
      if (!parse_uint(v, x)) throw bad("a non-negative integer");
      return std::to_string(x);
    }
    case Type::Double: {
      double x;
      if (!parse_double(v, x)) throw bad("a finite number");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", x);
      return buf;
    }
    case Type::Bool:
      if (v == "true" || v == "1") return "true";
      if (v == "false" || v == "0") return "false";
      throw bad("true or false");
    case Type::String:
      if (v.empty() || v.find_first_of(" \t#=") != std::string::npos) throw bad("a single word");
      return v;
    case Type::UIntList: {
      std::string out;
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) {
        std::uint64_t x;
        if (!parse_uint(trim(item), x)) throw bad("a comma-separated list of non-negative integers");
        if (!out.empty()) out += ',';
        out += std::to_string(x);
      }
      if (out.empty()) throw bad("a non-empty list");
      return out;
    }
  }
  throw bad("a value");
}

}  // namespace

Scale parse_scale(const std::string& name) {
  if (name == "paper") return Scale::Paper;
  if (name == "ci") return Scale::Ci;
  throw config_error("unknown scale '" + name + "' (expected paper or ci)");
}

std::string scale_name(Scale s) { return s == Scale::Paper ? "paper" : "ci"; }

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Config::Config(Schema schema, Scale scale) : schema_(std::move(schema)), scale_(scale) {
  std::sort(schema_.begin(), schema_.end(), [](const Key& a, const Key& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < schema_.size(); ++i)
    if (schema_[i].name == schema_[i - 1].name) throw invalid_argument("duplicate config key " + schema_[i].name);
  for (const auto& k : schema_) values_.push_back(normalize(k, scale == Scale::Paper ? k.paper : k.ci));
}

std::size_t Config::index(const std::string& key) const {
  auto it = std::lower_bound(schema_.begin(), schema_.end(), key,
                             [](const Key& k, const std::string& name) { return k.name < name; });
  if (it == schema_.end() || it->name != key) throw config_error("unknown config key '" + key + "'");
  return static_cast<std::size_t>(it - schema_.begin());
}

void Config::set(const std::string& key, const std::string& value) {
  const std::size_t i = index(trim(key));
  values_[i] = normalize(schema_[i], value);
}

void Config::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw config_error("expected key=value, got '" + assignment + "'");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void Config::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      set(section.empty() ? key : section + "." + key, line.substr(eq + 1));
    } catch (const Error& e) {
      throw config_error(where + e.what());
    }
  }
}

void Config::merge_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  merge_text(ss.str(), path);
}

const std::string& Config::value_of(const std::string& key, Type expected) const {
  const std::size_t i = index(key);
  if (schema_[i].type != expected) throw invalid_argument("config key '" + key + "' read with the wrong type");
  return values_[i];
}

std::int64_t Config::get_int(const std::string& key) const { return std::stoll(value_of(key, Type::Int)); }
std::uint64_t Config::get_uint(const std::string& key) const { return std::stoull(value_of(key, Type::UInt)); }
double Config::get_double(const std::string& key) const { return std::strtod(value_of(key, Type::Double).c_str(), nullptr); }
bool Config::get_bool(const std::string& key) const { return value_of(key, Type::Bool) == "true"; }
std::string Config::get_string(const std::string& key) const { return value_of(key, Type::String); }

std::vector<std::size_t> Config::get_uint_list(const std::string& key) const {
  std::vector<std::size_t> out;
  std::stringstream ss(value_of(key, Type::UIntList));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
  return out;
}

std::string Config::resolved_text() const {
  std::string out;
  for (std::size_t i = 0; i < schema_.size(); ++i) out += schema_[i].name + " = " + values_[i] + "\n";
  return out;
}

}  // namespace haegan::config
