#pragma once

// Run configuration: typed keys with per-scale defaults, read from a
// "key = value" text file ([section] headers prefix keys with "section.")
// and overridden by individual assignments.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace haegan::config {

enum class Scale { Paper, Ci };
Scale parse_scale(const std::string& name);
std::string scale_name(Scale s);

enum class Type { Int, UInt, Double, Bool, String, UIntList };

struct Key {
  std::string name;
  Type type;
  std::string paper;  // default at paper scale
  std::string ci;     // default at CI scale
  std::string help;
};
using Schema = std::vector<Key>;

std::uint64_t fnv1a64(std::string_view data);

class Config {
 public:
  Config(Schema schema, Scale scale);

  // Parses file contents; unknown keys and malformed values are config errors.
  void merge_text(const std::string& text, const std::string& origin = "config");
  void merge_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  // "key=value"
  void assign(const std::string& assignment);

  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<std::size_t> get_uint_list(const std::string& key) const;

  // Every key in lexicographic order, one "key = value" per line.
  std::string resolved_text() const;
  std::uint64_t hash() const { return fnv1a64(resolved_text()); }
  const Schema& schema() const { return schema_; }
  Scale scale() const { return scale_; }

 private:
  std::size_t index(const std::string& key) const;
  const std::string& value_of(const std::string& key, Type expected) const;

  Schema schema_;
  Scale scale_;
  std::vector<std::string> values_;
};

}  // namespace haegan::config
