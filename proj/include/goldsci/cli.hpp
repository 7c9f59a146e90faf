#pragma once

// Command-line front end. Settings come from an optional key = value file
// and from flags; a flag always overrides the file. Flag names are the keys
// with '_' replaced by '-' (n_p <-> --n-p).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace goldsci::cli {

class RunConfig {
 public:
  static const std::vector<std::string>& known_keys();
  static std::string flag_name(std::string_view key);  // "n_p" -> "--n-p"

  // Throws DomainError for an unknown key.
  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key);
  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  // One "key = value" per line; blank lines and '#' comments are skipped.
  void parse(std::string_view text, std::string_view source);
  void load(const std::string& path);
  std::string dump() const;

  // Typed access; require_* throws "missing required option --flag".
  std::string require_string(const std::string& key) const;
  double require_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> find_double(const std::string& key) const;
  int require_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;

  bool operator==(const RunConfig& other) const = default;

 private:
  std::map<std::string, std::string> values_;
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace goldsci::cli
