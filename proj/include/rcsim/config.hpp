#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace rcsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sectioned key-value text: "[section]" headers, "key = value" lines,
// '#' comments. Keys are addressed as "section.key".
class KvConfig {
public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& all() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

} // namespace rcsim
