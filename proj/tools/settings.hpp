#pragma once

// key = value settings shared by all subcommands. A config file supplies the
// base values and command-line flags override them; the merged view is what
// gets echoed into every artifact.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace oad::cli {

class Settings {
 public:
  /// Lines are `key = value`; blank lines and lines starting with '#' are
  /// skipped. Throws IoError for an unreadable file and InvalidArgument,
  /// naming the line, for anything else.
  static Settings load(const std::filesystem::path& path);
  static Settings parse(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  /// Records a default so that it shows up in the echoed config.
  void default_to(const std::string& key, const std::string& value) { values_.emplace(key, value); }

  std::string get(const std::string& key, const std::string& fallback) const;
  /// Throws InvalidArgument when the key is missing.
  std::string require(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;

  /// Keys in sorted order, values as strings.
  nlohmann::ordered_json to_json() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace oad::cli
