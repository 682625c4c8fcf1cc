#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "epinp/errors.hpp"

namespace epinp {

// Flat key=value run configuration ('#' starts a comment).  CLI flags
// override file values through set().  Every key access is recorded with the
// value actually used (including defaults), so echo() reproduces the exact
// effective configuration of a run.
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& echo() const { return resolved_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;

  const std::string* lookup(const std::string& key) const;
};

}  // namespace epinp
