#include "epinp/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace epinp {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key=value: " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty config key on line " +
                                       std::to_string(lineno));
    cfg.values_[key] = value;
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  return values_.count(key) > 0;
}

const std::string* RunConfig::lookup(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  resolved_[key] = it->second;
  return &it->second;
}

std::string RunConfig::get_string(const std::string& key) const {
  const std::string* v = lookup(key);
  if (!v) throw ConfigError("missing required config key: " + key);
  return *v;
}

std::string RunConfig::get_string(const std::string& key,
                                  const std::string& fallback) const {
  const std::string* v = lookup(key);
  if (!v) {
    resolved_[key] = fallback;
    return fallback;
  }
  return *v;
}

double RunConfig::get_double(const std::string& key) const {
  std::string v = get_string(key);
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number: " + v);
  }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) {
    std::ostringstream os;
    os << fallback;
    resolved_[key] = os.str();
    return fallback;
  }
  return get_double(key);
}

int RunConfig::get_int(const std::string& key) const {
  std::string v = get_string(key);
  try {
    std::size_t used = 0;
    long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(x);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an integer: " + v);
  }
}

int RunConfig::get_int(const std::string& key, int fallback) const {
  if (!has(key)) {
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  return get_int(key);
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  std::string v = get_string(key);
  try {
    std::size_t used = 0;
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key +
                      " is not an unsigned integer: " + v);
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key,
                                 std::uint64_t fallback) const {
  if (!has(key)) {
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  return get_u64(key);
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) {
    resolved_[key] = fallback ? "true" : "false";
    return fallback;
  }
  std::string v = get_string(key);
  std::string lower = v;
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  if (lower == "true" || lower == "1" || lower == "yes") return true;
  if (lower == "false" || lower == "0" || lower == "no") return false;
  throw ConfigError("config key " + key + " is not a boolean: " + v);
}

}  // namespace epinp
