#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Flat key=value configuration with [section] headers. Keys are addressed as
// "section.key". Lines starting with '#' or ';' are comments.
//
//   [attack]
//   eta = 0.0627450980392157
//   steps = 100
namespace antipure {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  // Every key the program understands, with its default value.
  static Config defaults();

  // Merges `text` over this config. Unknown keys are rejected.
  void merge_text(std::string_view text, const std::string& source);
  // "section.key=value" override; unknown keys are rejected.
  void set_override(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  // Canonical text form: sections and keys in sorted order.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace antipure
