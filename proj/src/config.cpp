#include "rcsim/config.hpp"

#include <fstream>
#include <sstream>

namespace rcsim {

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
} // namespace

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("config file not readable: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

KvConfig KvConfig::parse_string(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    return std::nullopt;
  return it->second;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v)
    return fallback;
  try {
    return std::stoull(*v, nullptr, 0);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: " + *v);
  }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v)
    return fallback;
  try {
    return std::stod(*v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: " + *v);
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v)
    return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on")
    return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off")
    return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + *v);
}

} // namespace rcsim
