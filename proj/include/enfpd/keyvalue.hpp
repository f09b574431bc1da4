#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace enfpd {

// Flat `key=value` text: one entry per line, `#` starts a comment, blank
// lines ignored, surrounding whitespace trimmed. Later keys override earlier.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text);
  static KeyValues read_file(const std::filesystem::path& path);

  void set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }
  bool contains(std::string_view key) const { return entries_.find(std::string(key)) != entries_.end(); }
  std::optional<std::string> get(std::string_view key) const;

  // Throws kMalformedHeader when the key is missing or not parseable.
  std::string require(std::string_view key) const;
  long long require_int(std::string_view key) const;
  double require_double(std::string_view key) const;

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  std::string serialize() const;

 private:
  std::map<std::string, std::string> entries_;
};

long long parse_int(std::string_view text);
double parse_double(std::string_view text);
// Shortest text that parses back to the same double.
std::string format_double(double value);

}  // namespace enfpd
