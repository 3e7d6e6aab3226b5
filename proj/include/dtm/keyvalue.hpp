#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dtm {

/// Ordered key=value document. Used for manifests, reports and config files.
/// When parsing, `[section]` headers prefix the following keys with
/// "section."; `#` and `;` start comment lines.
class KeyValues {
 public:
  void set(const std::string& key, std::string value);
  template <class T>
  void set(const std::string& key, const T& value) {
    set(key, std::to_string(value));
  }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  std::optional<std::string> get(const std::string& key) const;
  /// Throws InputError naming `key` and `source` when the key is missing.
  std::string require(const std::string& key) const;
  bool contains(const std::string& key) const { return get(key).has_value(); }

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

  static KeyValues parse(const std::string& text, const std::string& source = "<string>");
  static KeyValues read(const std::filesystem::path& path);

  std::string source;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

std::uint64_t fnv1a_file(const std::filesystem::path& path);

}  // namespace dtm
